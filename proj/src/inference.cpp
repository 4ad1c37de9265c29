#include "judgekit/inference.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "judgekit/parser.hpp"

namespace judgekit::inference {

using json = nlohmann::json;

void EndpointConfig::validate() const {
    if (base_url.empty()) throw std::invalid_argument("endpoint base_url must be set");
    if (timeout.count() <= 0) throw std::invalid_argument("endpoint timeout must be > 0");
    if (max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
    if (max_in_flight < 1) throw std::invalid_argument("max_in_flight must be >= 1");
}

// ---------------------------------------------------------------------------
// Batch dispatch
// ---------------------------------------------------------------------------

std::map<std::string, CompletionResult> complete_batch(CompletionClient& client,
                                                       std::span<const CompletionRequest> requests,
                                                       int max_in_flight) {
    if (max_in_flight < 1) throw std::invalid_argument("max_in_flight must be >= 1");
    std::set<std::string_view> tags;
    for (const auto& req : requests) {
        if (req.tag.empty()) throw std::invalid_argument("request tag must be non-empty");
        if (!tags.insert(req.tag).second) {
            throw std::invalid_argument("duplicate request tag: " + req.tag);
        }
    }
    if (requests.empty()) return {};

    std::vector<CompletionResult> results(requests.size());
    std::atomic<std::size_t> next{0};
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(max_in_flight), requests.size());

    auto work = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= requests.size()) break;
            try {
                results[i] = client.complete(requests[i]);
            } catch (const std::exception& e) {
                results[i] = CompletionError{ErrorClass::Transport, 0, e.what(), requests[i].tag};
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();

    std::map<std::string, CompletionResult> out;
    for (std::size_t i = 0; i < requests.size(); ++i) {
        out.emplace(requests[i].tag, std::move(results[i]));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fixtures
// ---------------------------------------------------------------------------

FixtureStore FixtureStore::load_dir(const std::filesystem::path& dir) {
    FixtureStore store;
    if (!std::filesystem::is_directory(dir)) {
        throw std::invalid_argument("fixtures directory not found: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
        std::ifstream in(file, std::ios::binary);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.find_first_not_of(" \t") == std::string::npos) continue;
            json record = json::parse(line, nullptr, false);
            if (record.is_discarded() || !record.is_object() || !record.contains("tag")) {
                throw std::invalid_argument("bad fixture line " + std::to_string(line_no) + " in " +
                                            file.string());
            }
            Fixture fixture;
            if (record.contains("error")) {
                const auto& err = record["error"];
                CompletionError ce;
                ce.cls = err.value("class", std::string("transport")) == "request"
                             ? ErrorClass::Request
                             : ErrorClass::Transport;
                ce.http_status = err.value("status", 0);
                ce.message = err.value("message", std::string("fixture error"));
                fixture.error = ce;
            } else {
                fixture.text = record.value("text", std::string());
                fixture.finish_reason = record.value("finish_reason", std::string("stop"));
            }
            store.add(record["tag"].get<std::string>(), std::move(fixture));
        }
    }
    return store;
}

void FixtureStore::add(std::string tag, Fixture fixture) {
    fixtures_[std::move(tag)] = std::move(fixture);
}

const Fixture* FixtureStore::find(const std::string& tag) const {
    const auto it = fixtures_.find(tag);
    return it == fixtures_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// MockClient
// ---------------------------------------------------------------------------

void MockClient::add_fixture(std::string tag, std::string text, std::string finish_reason) {
    fixtures_.add(std::move(tag), Fixture{std::move(text), std::move(finish_reason), std::nullopt});
}

void MockClient::add_error(std::string tag, CompletionError error) {
    Fixture fixture;
    fixture.error = std::move(error);
    fixtures_.add(std::move(tag), std::move(fixture));
}

std::optional<Fixture> MockClient::fixture_for(const CompletionRequest& request,
                                               int sample_index) const {
    const std::string key = request.params.n == 1
                                ? request.tag
                                : request.tag + "/" + std::to_string(sample_index);
    if (const Fixture* f = fixtures_.find(key)) return *f;
    if (handler_) return handler_(request);
    return std::nullopt;
}

CompletionResult MockClient::complete(const CompletionRequest& request) {
    total_calls_.fetch_add(1);
    const int now = in_flight_.fetch_add(1) + 1;
    int peak = peak_in_flight_.load();
    while (now > peak && !peak_in_flight_.compare_exchange_weak(peak, now)) {
    }
    if (latency_.count() > 0) std::this_thread::sleep_for(latency_);

    CompletionResult result;
    Completion completion;
    bool failed = false;
    for (int i = 0; i < request.params.n && !failed; ++i) {
        const auto fixture = fixture_for(request, i);
        if (!fixture) {
            result = CompletionError{ErrorClass::Request, 404,
                                     "no fixture for tag " + request.tag, request.tag};
            failed = true;
        } else if (fixture->error) {
            CompletionError err = *fixture->error;
            err.tag = request.tag;
            result = std::move(err);
            failed = true;
        } else {
            completion.choices.push_back({fixture->text, fixture->finish_reason});
            completion.usage.prompt_tokens += parser::count_tokens(request.prompt);
            completion.usage.completion_tokens += parser::count_tokens(fixture->text);
        }
    }
    if (!failed) result = std::move(completion);

    in_flight_.fetch_sub(1);
    return result;
}

// ---------------------------------------------------------------------------
// HttpChatClient
// ---------------------------------------------------------------------------

namespace {

bool retryable_status(int status) { return status == 429 || status >= 500; }

std::chrono::milliseconds backoff_delay(std::chrono::milliseconds base, int attempt) {
    thread_local std::mt19937_64 rng{std::random_device{}()};
    const double factor = std::pow(2.0, attempt);
    const double d = static_cast<double>(base.count()) * factor;
    std::uniform_real_distribution<double> jitter(0.5, 1.0);
    const double delay = std::min(d * jitter(rng), 60000.0);
    return std::chrono::milliseconds(static_cast<long>(delay));
}

}  // namespace

HttpChatClient::HttpChatClient(EndpointConfig config) : config_(std::move(config)) {
    config_.validate();
    const std::size_t scheme_end = config_.base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw std::invalid_argument("base_url must start with http:// or https://");
    }
    const std::size_t path_start = config_.base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        origin_ = config_.base_url;
    } else {
        origin_ = config_.base_url.substr(0, path_start);
        path_prefix_ = config_.base_url.substr(path_start);
        while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    }
}

CompletionResult HttpChatClient::complete_once(const CompletionRequest& request, int n,
                                               std::optional<std::int64_t> seed) {
    httplib::Client http(origin_);
    http.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(config_.timeout));
    http.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(config_.timeout));

    json body;
    body["model"] = config_.model;
    body["messages"] = json::array({{{"role", "user"}, {"content", request.prompt}}});
    body["temperature"] = request.params.temperature;
    body["top_p"] = request.params.top_p;
    body["max_tokens"] = request.params.max_tokens;
    body["n"] = n;
    if (seed) body["seed"] = *seed;

    httplib::Headers headers{{"X-Request-Tag", request.tag}};
    if (!config_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + config_.api_key);
    }

    int attempt = 0;
    while (true) {
        auto res = http.Post(path_prefix_ + "/chat/completions", headers, body.dump(),
                             "application/json");
        if (res && res->status == 200) {
            json payload = json::parse(res->body, nullptr, false);
            if (payload.is_discarded() || !payload.contains("choices") ||
                !payload["choices"].is_array() || payload["choices"].empty()) {
                return CompletionError{ErrorClass::Request, res->status,
                                       "malformed completion payload", request.tag};
            }
            Completion completion;
            for (const auto& choice : payload["choices"]) {
                CompletionChoice out;
                if (choice.contains("message") && choice["message"].contains("content")) {
                    out.text = choice["message"]["content"].get<std::string>();
                } else if (choice.contains("text")) {
                    out.text = choice["text"].get<std::string>();
                }
                out.finish_reason = choice.value("finish_reason", std::string("stop"));
                completion.choices.push_back(std::move(out));
            }
            if (payload.contains("usage")) {
                completion.usage.prompt_tokens = payload["usage"].value("prompt_tokens", 0L);
                completion.usage.completion_tokens =
                    payload["usage"].value("completion_tokens", 0L);
            }
            return completion;
        }

        const bool transport_failure = !res;
        const int status = res ? res->status : 0;
        if (!transport_failure && !retryable_status(status)) {
            return CompletionError{ErrorClass::Request, status,
                                   "request failed with status " + std::to_string(status),
                                   request.tag};
        }
        if (attempt >= config_.max_retries) {
            return CompletionError{ErrorClass::Transport, status,
                                   transport_failure
                                       ? "transport failure after " + std::to_string(attempt + 1) +
                                             " attempts"
                                       : "retries exhausted, last status " + std::to_string(status),
                                   request.tag};
        }
        std::this_thread::sleep_for(backoff_delay(config_.backoff_base, attempt));
        ++attempt;
    }
}

CompletionResult HttpChatClient::complete(const CompletionRequest& request) {
    request.params.validate();
    if (config_.native_n || request.params.n == 1) {
        return complete_once(request, request.params.n, request.params.seed);
    }
    // Endpoint without multi-sample support: n independent single-sample
    // requests with distinct seeds, merged in order.
    Completion merged;
    for (int i = 0; i < request.params.n; ++i) {
        std::optional<std::int64_t> seed;
        if (request.params.seed) seed = *request.params.seed + i;
        CompletionResult one = complete_once(request, 1, seed);
        if (!succeeded(one)) return one;
        auto& completion = std::get<Completion>(one);
        merged.usage.prompt_tokens += completion.usage.prompt_tokens;
        merged.usage.completion_tokens += completion.usage.completion_tokens;
        for (auto& choice : completion.choices) merged.choices.push_back(std::move(choice));
    }
    return merged;
}

std::unique_ptr<CompletionClient> make_client(const EndpointConfig& config) {
    if (config.is_mock()) {
        const std::string dir = config.base_url.substr(5);
        return std::make_unique<MockClient>(FixtureStore::load_dir(dir));
    }
    return std::make_unique<HttpChatClient>(config);
}

// ---------------------------------------------------------------------------
// MockServer
// ---------------------------------------------------------------------------

struct MockServer::Impl {
    FixtureStore fixtures;
    httplib::Server server;
    std::thread thread;
    std::mutex mutex;
    std::map<std::string, std::vector<int>> failure_scripts;
    std::atomic<long> requests{0};
    int port = 0;

    explicit Impl(FixtureStore store) : fixtures(std::move(store)) {}

    std::optional<int> next_failure(const std::string& tag) {
        std::lock_guard<std::mutex> lock(mutex);
        auto it = failure_scripts.find(tag);
        if (it == failure_scripts.end() || it->second.empty()) return std::nullopt;
        const int status = it->second.front();
        it->second.erase(it->second.begin());
        return status;
    }
};

MockServer::MockServer(FixtureStore fixtures) : impl_(std::make_unique<Impl>(std::move(fixtures))) {
    impl_->server.Post("/chat/completions", [this](const httplib::Request& req,
                                                   httplib::Response& res) {
        impl_->requests.fetch_add(1);
        const std::string tag = req.get_header_value("X-Request-Tag");
        if (const auto failure = impl_->next_failure(tag)) {
            res.status = *failure;
            res.set_content(R"({"error":{"message":"scripted failure"}})", "application/json");
            return;
        }

        json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded()) {
            res.status = 400;
            res.set_content(R"({"error":{"message":"bad request body"}})", "application/json");
            return;
        }
        const int n = body.value("n", 1);

        json choices = json::array();
        for (int i = 0; i < n; ++i) {
            const std::string key = n == 1 ? tag : tag + "/" + std::to_string(i);
            const Fixture* fixture = impl_->fixtures.find(key);
            if (!fixture || fixture->error) {
                res.status = fixture && fixture->error ? fixture->error->http_status : 404;
                if (res.status == 0) res.status = 503;
                res.set_content(R"({"error":{"message":"no fixture for tag"}})",
                                "application/json");
                return;
            }
            choices.push_back({{"index", i},
                               {"message", {{"role", "assistant"}, {"content", fixture->text}}},
                               {"finish_reason", fixture->finish_reason}});
        }
        json payload{{"object", "chat.completion"},
                     {"model", body.value("model", "mock")},
                     {"choices", choices},
                     {"usage", {{"prompt_tokens", 0}, {"completion_tokens", 0}}}};
        res.set_content(payload.dump(), "application/json");
    });
}

MockServer::~MockServer() { stop(); }

int MockServer::start() {
    impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
    if (impl_->port <= 0) throw std::runtime_error("mock server failed to bind");
    impl_->thread = std::thread([this]() { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return impl_->port;
}

void MockServer::stop() {
    if (impl_->thread.joinable()) {
        impl_->server.stop();
        impl_->thread.join();
    }
}

void MockServer::set_failure_script(const std::string& tag, std::vector<int> statuses) {
    std::lock_guard<std::mutex> lock(impl_->mutex);
    impl_->failure_scripts[tag] = std::move(statuses);
}

long MockServer::request_count() const { return impl_->requests.load(); }

}  // namespace judgekit::inference
