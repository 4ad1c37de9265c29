#include "judgekit/reward_service.hpp"

#include <map>
#include <thread>

#include <httplib.h>

#include "judgekit/reward.hpp"
#include "judgekit/version.hpp"

namespace judgekit::reward_service {

using json = nlohmann::json;

namespace {

std::string field_path(std::size_t group_index, const char* field) {
    return "groups[" + std::to_string(group_index) + "]." + field;
}

std::string require_string(const json& obj, const char* key, const std::string& path) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_string() || it->get_ref<const std::string&>().empty()) {
        throw ApiError(400, "missing or empty string field", path);
    }
    return it->get<std::string>();
}

struct ParsedGroup {
    Presentation presentation;
    Choice gold = Choice::A;
    std::vector<parser::ParsedJudgment> judgments;
    json echo;  // identity fields mirrored into the response
};

}  // namespace

json handle_health() {
    json schemes = json::array();
    for (auto kind :
         {reward::SchemeKind::VerdictCorrectness, reward::SchemeKind::VerdictConsistency,
          reward::SchemeKind::ScorePairwise, reward::SchemeKind::PointwisePair,
          reward::SchemeKind::VerdictWithScore}) {
        schemes.push_back(std::string(reward::to_string(kind)));
    }
    return json{{"status", "ok"}, {"version", kVersion}, {"supported_schemes", schemes}};
}

json handle_reward(const json& request, parser::Strictness default_strictness) {
    if (!request.is_object()) throw ApiError(400, "request body must be a JSON object", "");

    const auto scheme_obj = request.find("scheme");
    if (scheme_obj == request.end() || !scheme_obj->is_object()) {
        throw ApiError(400, "missing object field", "scheme");
    }
    const auto kind = reward::scheme_kind_from_string(
        scheme_obj->value("kind", std::string()));
    if (!kind) throw ApiError(400, "unknown scheme kind", "scheme.kind");
    reward::RewardScheme scheme;
    scheme.kind = *kind;
    scheme.negative_reward = scheme_obj->value("negative_reward", 0.0);
    scheme.format_bonus = scheme_obj->value("format_bonus", 0.0);
    try {
        scheme.validate();
    } catch (const std::exception& e) {
        throw ApiError(400, e.what(), "scheme");
    }

    const auto formulation_kind =
        formulation_kind_from_string(request.value("formulation", std::string()));
    if (!formulation_kind) throw ApiError(400, "unknown formulation", "formulation");
    if (!scheme.accepts(*formulation_kind)) {
        throw ApiError(400,
                       "scheme " + std::string(reward::to_string(scheme.kind)) +
                           " does not reward " + std::string(to_string(*formulation_kind)) +
                           " completions",
                       "formulation");
    }
    const Formulation formulation{*formulation_kind, PromptStyle::Thinking};
    const bool pointwise = *formulation_kind == FormulationKind::PoS;

    parser::Strictness strictness = default_strictness;
    if (request.contains("strictness")) {
        const auto s = parser::strictness_from_string(request["strictness"].get<std::string>());
        if (!s) throw ApiError(400, "strictness must be strict or lenient", "strictness");
        strictness = *s;
    }

    const auto groups_it = request.find("groups");
    if (groups_it == request.end() || !groups_it->is_array()) {
        throw ApiError(400, "missing array field", "groups");
    }

    std::vector<ParsedGroup> groups;
    groups.reserve(groups_it->size());
    std::map<std::string, std::size_t> by_presentation;

    for (std::size_t i = 0; i < groups_it->size(); ++i) {
        const json& g = (*groups_it)[i];
        if (!g.is_object()) throw ApiError(400, "group must be an object", field_path(i, ""));

        ParsedGroup parsed;
        parsed.presentation.example_id = require_string(g, "example_id", field_path(i, "example_id"));

        const auto gold = choice_from_string(g.value("gold", std::string()));
        if (!gold) throw ApiError(400, "gold must be \"A\" or \"B\"", field_path(i, "gold"));
        parsed.gold = *gold;

        Orientation orientation;
        if (pointwise) {
            const auto side = choice_from_string(g.value("side", std::string()));
            if (!side) throw ApiError(400, "pointwise groups need side \"A\" or \"B\"",
                                      field_path(i, "side"));
            orientation = *side == Choice::A ? Orientation::PointwiseA : Orientation::PointwiseB;
            parsed.echo["side"] = to_string(*side);
        } else {
            const auto order = orientation_from_string(g.value("order", std::string()));
            if (!order || !is_pairwise(*order)) {
                throw ApiError(400, "pairwise groups need order \"AB\" or \"BA\"",
                               field_path(i, "order"));
            }
            orientation = *order;
            parsed.echo["order"] = to_string(*order);
        }
        parsed.echo["example_id"] = parsed.presentation.example_id;
        parsed.presentation.orientation = orientation;
        parsed.presentation.id = presentation_id(parsed.presentation.example_id, orientation);

        const auto completions = g.find("completions");
        if (completions == g.end() || !completions->is_array() || completions->empty()) {
            throw ApiError(400, "completions must be a non-empty array",
                           field_path(i, "completions"));
        }
        for (const auto& c : *completions) {
            if (!c.is_string()) {
                throw ApiError(400, "completions must be strings", field_path(i, "completions"));
            }
            parsed.judgments.push_back(
                parser::parse(c.get<std::string>(), formulation, orientation, strictness));
        }

        if (!by_presentation.emplace(parsed.presentation.id, i).second) {
            throw ApiError(400, "duplicate group for presentation " + parsed.presentation.id,
                           field_path(i, ""));
        }
        groups.push_back(std::move(parsed));
    }

    // Sibling linkage by (example id, opposite orientation) within the request.
    for (auto& g : groups) {
        const std::string sibling =
            presentation_id(g.presentation.example_id, sibling_orientation(g.presentation.orientation));
        if (by_presentation.count(sibling)) g.presentation.sibling_id = sibling;
    }

    json out_groups = json::array();
    for (std::size_t i = 0; i < groups.size(); ++i) {
        auto& g = groups[i];
        std::span<const parser::ParsedJudgment> sibling_judgments;
        if (scheme.needs_sibling()) {
            if (g.presentation.sibling_id.empty()) {
                throw ApiError(422,
                               "scheme " + std::string(reward::to_string(scheme.kind)) +
                                   " requires both sibling groups in one request; missing sibling of " +
                                   g.presentation.id,
                               field_path(i, ""));
            }
            const auto& sibling = groups[by_presentation.at(g.presentation.sibling_id)];
            if (sibling.judgments.size() != g.judgments.size()) {
                throw ApiError(422, "sibling groups must have equal completion counts",
                               field_path(i, "completions"));
            }
            sibling_judgments = sibling.judgments;
        }

        reward::RolloutGroup group;
        group.presentation = g.presentation;
        group.group_size = static_cast<int>(g.judgments.size());
        reward::annotate_group(group, g.judgments, sibling_judgments, g.gold, scheme);

        json statuses = json::array();
        for (const auto& j : g.judgments) statuses.push_back(j.ok() ? "ok" : "parse-error");

        json out = g.echo;
        out["rewards"] = group.rewards;
        out["advantages"] = group.advantages;
        out["statuses"] = statuses;
        out_groups.push_back(std::move(out));
    }

    return json{{"groups", out_groups}};
}

// ---------------------------------------------------------------------------
// HTTP server
// ---------------------------------------------------------------------------

struct Server::Impl {
    ServiceConfig config;
    httplib::Server server;
    std::thread thread;

    explicit Impl(ServiceConfig cfg) : config(std::move(cfg)) {}

    bool authorized(const httplib::Request& req) const {
        if (!config.auth_token) return true;
        return req.get_header_value("X-Auth-Token") == *config.auth_token;
    }
};

Server::Server(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {
    impl_->server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(handle_health().dump(), "application/json");
    });

    impl_->server.Post("/v1/reward", [this](const httplib::Request& req, httplib::Response& res) {
        if (!impl_->authorized(req)) {
            res.status = 401;
            res.set_content(R"({"error":{"message":"unauthorized"}})", "application/json");
            return;
        }
        json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded()) {
            res.status = 400;
            res.set_content(R"({"error":{"message":"request body is not valid JSON"}})",
                            "application/json");
            return;
        }
        try {
            const json out = handle_reward(body, impl_->config.strictness);
            res.set_content(out.dump(), "application/json");
        } catch (const ApiError& e) {
            res.status = e.status;
            json err{{"error", {{"message", e.what()}}}};
            if (!e.field.empty()) err["error"]["field"] = e.field;
            res.set_content(err.dump(), "application/json");
        } catch (const std::exception& e) {
            res.status = 500;
            res.set_content(json{{"error", {{"message", e.what()}}}}.dump(), "application/json");
        }
    });
}

Server::~Server() { stop(); }

int Server::start() {
    int port = impl_->config.port;
    if (port == 0) {
        port = impl_->server.bind_to_any_port(impl_->config.host);
        if (port <= 0) throw std::runtime_error("reward service failed to bind");
    } else if (!impl_->server.bind_to_port(impl_->config.host, port)) {
        throw std::runtime_error("reward service failed to bind port " + std::to_string(port));
    }
    impl_->thread = std::thread([this]() { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port;
}

void Server::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace judgekit::reward_service
