#pragma once

#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "judgekit/parser.hpp"

/// Stateless HTTP service exposing reward and advantage annotation so
/// external RL trainers can call this toolkit as a remote verifiable-reward
/// function. One trainer step maps naturally to one request: a batch of
/// rollout groups (sibling orderings included together for
/// sibling-dependent schemes).
namespace judgekit::reward_service {

/// Request/handler failure carrying the HTTP status class and, for schema
/// violations, the offending field path.
struct ApiError : std::runtime_error {
    ApiError(int status, std::string message, std::string field = "")
        : std::runtime_error(std::move(message)), status(status), field(std::move(field)) {}

    int status;
    std::string field;
};

/// Pure request handler behind POST /v1/reward. Parses every completion,
/// applies the scheme, and returns rewards, advantages, and per-rollout
/// parse statuses with shapes mirroring the request. Throws ApiError with a
/// 400-class status on schema violations (field path included) and 422 when
/// a sibling-dependent scheme lacks the sibling group.
nlohmann::json handle_reward(const nlohmann::json& request,
                             parser::Strictness default_strictness = parser::Strictness::Strict);

/// Constant-time readiness probe behind GET /healthz.
nlohmann::json handle_health();

struct ServiceConfig {
    std::string host = "0.0.0.0";
    int port = 8700;
    std::optional<std::string> auth_token;  // when set, X-Auth-Token must match
    parser::Strictness strictness = parser::Strictness::Strict;
};

class Server {
public:
    explicit Server(ServiceConfig config);
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds and serves on a background thread. Returns the bound port
    /// (useful with port 0 for ephemeral binding). Throws on bind failure.
    int start();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace judgekit::reward_service
