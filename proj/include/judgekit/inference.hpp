#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "judgekit/core.hpp"

/// Client for chat-completion HTTP endpoints plus a deterministic
/// fixture-backed mock, shared by judging, datagen, and evaluation.
namespace judgekit::inference {

struct EndpointConfig {
    std::string base_url;  // "http(s)://host[:port][/prefix]" or "mock:<fixtures-dir>"
    std::string model;
    std::string api_key;  // resolved from the environment, never from config files
    std::chrono::milliseconds timeout{30000};
    int max_retries = 3;
    int max_in_flight = 8;
    std::chrono::milliseconds backoff_base{500};
    bool native_n = true;  // endpoint supports n-way sampling in one request

    void validate() const;
    bool is_mock() const { return base_url.rfind("mock:", 0) == 0; }
};

/// Environment variable holding the API key.
inline constexpr const char* kApiKeyEnvVar = "JUDGEKIT_API_KEY";

struct CompletionRequest {
    std::string prompt;  // sent as a single user message
    SamplingParams params;
    std::string tag;  // correlation id, unique within a run
};

struct CompletionChoice {
    std::string text;
    std::string finish_reason = "stop";
};

struct Usage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

struct Completion {
    std::vector<CompletionChoice> choices;
    Usage usage;
};

enum class ErrorClass { Transport, Request };

struct CompletionError {
    ErrorClass cls = ErrorClass::Transport;
    int http_status = 0;
    std::string message;
    std::string tag;
};

using CompletionResult = std::variant<Completion, CompletionError>;

inline bool succeeded(const CompletionResult& r) { return std::holds_alternative<Completion>(r); }

class CompletionClient {
public:
    virtual ~CompletionClient() = default;
    virtual CompletionResult complete(const CompletionRequest& request) = 0;
};

/// Dispatches a batch with at most max_in_flight requests concurrently.
/// Tags must be unique (validated before any dispatch); the result map is
/// complete - every tag maps to a success or an error - and its content does
/// not depend on completion arrival order.
std::map<std::string, CompletionResult> complete_batch(CompletionClient& client,
                                                       std::span<const CompletionRequest> requests,
                                                       int max_in_flight);

// ---------------------------------------------------------------------------
// Fixtures and mock
// ---------------------------------------------------------------------------

struct Fixture {
    std::string text;
    std::string finish_reason = "stop";
    std::optional<CompletionError> error;  // when set, the mock replies with it
};

/// Completions keyed by request tag, loadable from a directory of JSONL
/// files ({"tag": ..., "text": ..., "finish_reason"?, "error"?}).
class FixtureStore {
public:
    static FixtureStore load_dir(const std::filesystem::path& dir);

    void add(std::string tag, Fixture fixture);
    const Fixture* find(const std::string& tag) const;
    std::size_t size() const { return fixtures_.size(); }

private:
    std::map<std::string, Fixture> fixtures_;
};

/// In-process deterministic endpoint. Completions come from the fixture
/// store (exact tag for n=1, "<tag>/<i>" per sample otherwise) or, when no
/// fixture matches, from the optional handler. Tracks concurrency for
/// backpressure assertions.
class MockClient : public CompletionClient {
public:
    using Handler = std::function<std::optional<Fixture>(const CompletionRequest&)>;

    MockClient() = default;
    explicit MockClient(FixtureStore fixtures) : fixtures_(std::move(fixtures)) {}

    void add_fixture(std::string tag, std::string text, std::string finish_reason = "stop");
    void add_error(std::string tag, CompletionError error);
    void set_handler(Handler handler) { handler_ = std::move(handler); }
    void set_latency(std::chrono::milliseconds latency) { latency_ = latency; }

    CompletionResult complete(const CompletionRequest& request) override;

    int peak_in_flight() const { return peak_in_flight_.load(); }
    long total_calls() const { return total_calls_.load(); }

private:
    std::optional<Fixture> fixture_for(const CompletionRequest& request, int sample_index) const;

    FixtureStore fixtures_;
    Handler handler_;
    std::chrono::milliseconds latency_{0};
    std::atomic<int> in_flight_{0};
    std::atomic<int> peak_in_flight_{0};
    std::atomic<long> total_calls_{0};
};

/// HTTP client for the chat-completions wire format with exponential-backoff
/// retries on transient failures (transport errors, 429, 5xx).
class HttpChatClient : public CompletionClient {
public:
    explicit HttpChatClient(EndpointConfig config);

    CompletionResult complete(const CompletionRequest& request) override;

    const EndpointConfig& config() const { return config_; }

private:
    CompletionResult complete_once(const CompletionRequest& request, int n,
                                   std::optional<std::int64_t> seed);

    EndpointConfig config_;
    std::string origin_;       // scheme://host[:port]
    std::string path_prefix_;  // e.g. "/v1"
};

/// Builds the client for a config: MockClient for "mock:<dir>" base URLs,
/// HttpChatClient otherwise.
std::unique_ptr<CompletionClient> make_client(const EndpointConfig& config);

/// HTTP test double speaking the chat-completions schema, seeded from a
/// fixture store and keyed by the X-Request-Tag header. Failure scripts
/// allow per-tag sequences of error statuses before success.
class MockServer {
public:
    explicit MockServer(FixtureStore fixtures);
    ~MockServer();

    MockServer(const MockServer&) = delete;
    MockServer& operator=(const MockServer&) = delete;

    int start();  // binds 127.0.0.1 on an ephemeral port, returns it
    void stop();

    void set_failure_script(const std::string& tag, std::vector<int> statuses);
    long request_count() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace judgekit::inference
