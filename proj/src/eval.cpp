#include "judgekit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "judgekit/prompts.hpp"

namespace judgekit::eval {

using json = nlohmann::json;
using parser::ParsedJudgment;
using parser::ParseStatus;

namespace {

// Equal score means on the 0.1 grid stay well clear of this; it only absorbs
// float summation noise.
constexpr double kScoreTieEpsilon = 1e-9;

ParsedJudgment transport_failure_judgment(const Formulation& f) {
    ParsedJudgment j;
    j.formulation = f;
    j.status = ParseStatus::ParseError;
    j.error_kind = (f.kind == FormulationKind::PaS || f.kind == FormulationKind::PoS)
                       ? parser::ParseErrorKind::MissingScore
                       : parser::ParseErrorKind::MissingVerdict;
    return j;
}

}  // namespace

Formulation JudgmentLog::formulation() const {
    const auto kind = formulation_kind_from_string(config.value("formulation", "PaV"));
    const auto style = prompt_style_from_string(config.value("prompt_style", "thinking"));
    if (!kind || !style) throw std::invalid_argument("log config has an invalid formulation");
    return Formulation::make(*kind, *style);
}

SchedulingProtocol JudgmentLog::protocol() const {
    const auto p = protocol_from_string(config.value("protocol", "both-order"));
    if (!p) throw std::invalid_argument("log config has an invalid protocol");
    return *p;
}

parser::Strictness JudgmentLog::strictness() const {
    const auto s = parser::strictness_from_string(config.value("strictness", "lenient"));
    if (!s) throw std::invalid_argument("log config has an invalid strictness");
    return *s;
}

int JudgmentLog::rollouts() const { return config.value("/sampling/n"_json_pointer, 1); }

JudgmentLog run_eval(std::span<const PreferenceExample> dataset, const RunSpec& spec,
                     inference::CompletionClient& client, int max_in_flight) {
    spec.sampling.validate();
    const bool twin = spec.protocol == SchedulingProtocol::PointwiseTwin;
    const bool pointwise = spec.formulation.kind == FormulationKind::PoS;
    if (twin != pointwise) {
        throw std::invalid_argument("PoS requires the pointwise-twin protocol and vice versa");
    }

    JudgmentLog log;
    log.config = json{
        {"formulation", to_string(spec.formulation.kind)},
        {"prompt_style", to_string(spec.formulation.prompt_style)},
        {"protocol", to_string(spec.protocol)},
        {"strictness", to_string(spec.strictness)},
        {"seed", spec.seed},
        {"model", spec.model},
        {"sampling",
         {{"temperature", spec.sampling.temperature},
          {"top_p", spec.sampling.top_p},
          {"max_tokens", spec.sampling.max_tokens},
          {"n", spec.sampling.n}}},
    };
    if (spec.sampling.seed) log.config["sampling"]["seed"] = *spec.sampling.seed;

    struct Scheduled {
        const PreferenceExample* example;
        Presentation presentation;
    };
    std::vector<Scheduled> scheduled;
    for (const auto& example : dataset) {
        for (auto& p : make_presentations(example, spec.protocol, spec.seed)) {
            scheduled.push_back({&example, std::move(p)});
        }
    }

    std::vector<inference::CompletionRequest> requests;
    requests.reserve(scheduled.size() * static_cast<std::size_t>(spec.sampling.n));
    for (const auto& s : scheduled) {
        const std::string prompt =
            prompts::render_presentation(spec.formulation, *s.example, s.presentation.orientation);
        for (int r = 0; r < spec.sampling.n; ++r) {
            inference::CompletionRequest req;
            req.prompt = prompt;
            req.params = spec.sampling;
            req.params.n = 1;
            if (spec.sampling.seed) req.params.seed = *spec.sampling.seed + r;
            req.tag = s.presentation.id + "/" + std::to_string(r);
            requests.push_back(std::move(req));
        }
    }

    const auto results = inference::complete_batch(client, requests, max_in_flight);

    for (const auto& s : scheduled) {
        for (int r = 0; r < spec.sampling.n; ++r) {
            const std::string tag = s.presentation.id + "/" + std::to_string(r);
            const auto& result = results.at(tag);
            LogEntry entry;
            entry.example_id = s.presentation.example_id;
            entry.orientation = s.presentation.orientation;
            entry.rollout = r;
            if (inference::succeeded(result)) {
                const auto& completion = std::get<inference::Completion>(result);
                const std::string& text =
                    completion.choices.empty() ? std::string() : completion.choices.front().text;
                entry.judgment = parser::parse(text, spec.formulation, s.presentation.orientation,
                                               spec.strictness);
            } else {
                entry.judgment = transport_failure_judgment(spec.formulation);
                entry.transport_error = true;
            }
            entry.think_tokens = entry.judgment.think_tokens();
            log.entries.push_back(std::move(entry));
        }
    }
    return log;
}

// ---------------------------------------------------------------------------
// Log serialization
// ---------------------------------------------------------------------------

namespace {

json entry_to_json(const LogEntry& e) {
    json out{
        {"example_id", e.example_id},
        {"order", to_string(e.orientation)},
        {"rollout", e.rollout},
        {"formulation", to_string(e.judgment.formulation.kind)},
        {"status", e.judgment.ok() ? "ok" : "parse-error"},
        {"think_tokens", e.think_tokens},
    };
    if (e.judgment.error_kind) out["error_kind"] = to_string(*e.judgment.error_kind);
    if (e.transport_error) out["transport"] = true;
    if (e.judgment.verdict) out["verdict"] = to_string(e.judgment.verdict->winner);
    if (e.judgment.score_a) out["score_a"] = e.judgment.score_a->value;
    if (e.judgment.score_b) out["score_b"] = e.judgment.score_b->value;
    if (e.judgment.score) out["score"] = e.judgment.score->value;
    return out;
}

LogEntry entry_from_json(const json& record) {
    LogEntry e;
    e.example_id = record.at("example_id").get<std::string>();
    const auto orientation = orientation_from_string(record.at("order").get<std::string>());
    if (!orientation) throw std::invalid_argument("log entry has an invalid order");
    e.orientation = *orientation;
    e.rollout = record.value("rollout", 0);
    const auto kind = formulation_kind_from_string(record.at("formulation").get<std::string>());
    if (!kind) throw std::invalid_argument("log entry has an invalid formulation");
    e.judgment.formulation = Formulation{*kind, PromptStyle::Thinking};
    e.judgment.status =
        record.at("status").get<std::string>() == "ok" ? ParseStatus::Ok : ParseStatus::ParseError;
    if (record.contains("error_kind")) {
        e.judgment.error_kind =
            parser::parse_error_kind_from_string(record["error_kind"].get<std::string>());
    }
    e.transport_error = record.value("transport", false);
    if (record.contains("verdict")) {
        const auto winner = choice_from_string(record["verdict"].get<std::string>());
        if (winner && is_pairwise(e.orientation)) {
            e.judgment.verdict = Verdict{*winner, raw_slot_for(*winner, e.orientation)};
        }
    }
    auto read_score = [&](const char* key, std::optional<Score>& slot) {
        if (record.contains(key)) slot = Score::make(record[key].get<double>());
    };
    read_score("score_a", e.judgment.score_a);
    read_score("score_b", e.judgment.score_b);
    read_score("score", e.judgment.score);
    e.think_tokens = record.value("think_tokens", 0);
    return e;
}

}  // namespace

void save_log(const JudgmentLog& log, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write log file: " + path.string());
    json header = log.config;
    header["type"] = "judgment-log";
    out << header.dump() << '\n';
    for (const auto& entry : log.entries) out << entry_to_json(entry).dump() << '\n';
}

JudgmentLog load_log(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open log file: " + path.string());
    JudgmentLog log;
    std::string line;
    bool first = true;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded()) {
            throw std::runtime_error("bad JSON at line " + std::to_string(line_no) + " of " +
                                     path.string());
        }
        if (first) {
            log.config = record;
            first = false;
        } else {
            log.entries.push_back(entry_from_json(record));
        }
    }
    if (first) throw std::runtime_error("log file is empty: " + path.string());
    return log;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

std::string_view to_string(StrategyKind k) {
    switch (k) {
        case StrategyKind::Single: return "single";
        case StrategyKind::MajorityVote: return "majority";
        case StrategyKind::MeanScore: return "mean-score";
    }
    return "single";
}

std::optional<StrategyKind> strategy_kind_from_string(std::string_view s) {
    if (s == "single") return StrategyKind::Single;
    if (s == "majority") return StrategyKind::MajorityVote;
    if (s == "mean-score") return StrategyKind::MeanScore;
    return std::nullopt;
}

void AggregationStrategy::validate() const {
    if (N < 1) throw std::invalid_argument("aggregation N must be >= 1");
    if (kind == StrategyKind::Single && N != 1) {
        throw std::invalid_argument("single strategy requires N = 1");
    }
}

namespace {

std::optional<Choice> pairwise_rollout_winner(const LogEntry& e, FormulationKind kind) {
    if (!e.judgment.ok()) return std::nullopt;
    switch (kind) {
        case FormulationKind::PaV:
        case FormulationKind::PaVS:
            if (e.judgment.verdict) return e.judgment.verdict->winner;
            return std::nullopt;
        case FormulationKind::PaS: {
            if (!e.judgment.score_a || !e.judgment.score_b) return std::nullopt;
            const double a = e.judgment.score_a->value;
            const double b = e.judgment.score_b->value;
            if (a > b) return Choice::A;
            if (b > a) return Choice::B;
            return std::nullopt;  // score tie carries no vote
        }
        case FormulationKind::PoS:
            return std::nullopt;
    }
    return std::nullopt;
}

/// Mean of the first n valid scores; nullopt when none are valid.
std::optional<double> mean_score(std::span<const LogEntry> entries, int n,
                                 double (*extract)(const LogEntry&), bool (*valid)(const LogEntry&)) {
    double sum = 0.0;
    int count = 0;
    int seen = 0;
    for (const auto& e : entries) {
        if (seen++ >= n) break;
        if (!valid(e)) continue;
        sum += extract(e);
        ++count;
    }
    if (count == 0) return std::nullopt;
    return sum / count;
}

bool has_pair_scores(const LogEntry& e) {
    return e.judgment.ok() && e.judgment.score_a && e.judgment.score_b;
}

bool has_point_score(const LogEntry& e) { return e.judgment.ok() && e.judgment.score.has_value(); }

}  // namespace

ExampleVerdict verdict_of(std::span<const LogEntry> entries, const Formulation& formulation,
                          const AggregationStrategy& strategy) {
    strategy.validate();
    if (formulation.kind == FormulationKind::PoS) {
        throw std::invalid_argument("pointwise logs aggregate via pointwise_verdict");
    }

    ExampleVerdict out;
    const int n = strategy.N;

    if (strategy.kind == StrategyKind::MeanScore) {
        if (formulation.kind != FormulationKind::PaS) {
            throw std::invalid_argument("mean-score aggregation requires score formulations");
        }
        const auto mean_a = mean_score(
            entries, n, [](const LogEntry& e) { return e.judgment.score_a->value; },
            has_pair_scores);
        const auto mean_b = mean_score(
            entries, n, [](const LogEntry& e) { return e.judgment.score_b->value; },
            has_pair_scores);
        if (!mean_a || !mean_b) {
            out.all_error = true;
            return out;
        }
        if (std::abs(*mean_a - *mean_b) <= kScoreTieEpsilon) {
            out.tie = true;
            return out;
        }
        out.winner = *mean_a > *mean_b ? Choice::A : Choice::B;
        return out;
    }

    // Single and majority: per-rollout verdicts over the first N rollouts,
    // parse errors (and PaS score ties) carry no vote.
    int votes_a = 0;
    int votes_b = 0;
    std::optional<Choice> first_valid;
    int seen = 0;
    for (const auto& e : entries) {
        if (seen++ >= n) break;
        const auto w = pairwise_rollout_winner(e, formulation.kind);
        if (!w) continue;
        if (!first_valid) first_valid = w;
        (*w == Choice::A ? votes_a : votes_b)++;
    }
    if (votes_a == 0 && votes_b == 0) {
        out.all_error = true;
        // A PaS rollout that tied is a tie, not an error; surface it as such
        // for single-sample aggregation.
        if (formulation.kind == FormulationKind::PaS) {
            int checked = 0;
            for (const auto& e : entries) {
                if (checked++ >= n) break;
                if (has_pair_scores(e)) {
                    out.all_error = false;
                    out.tie = true;
                    break;
                }
            }
        }
        return out;
    }
    if (votes_a == votes_b) {
        out.tie = true;
        out.winner = first_valid;  // even split resolves to the first valid rollout
        return out;
    }
    out.winner = votes_a > votes_b ? Choice::A : Choice::B;
    return out;
}

ExampleVerdict pointwise_verdict(std::span<const LogEntry> side_a,
                                 std::span<const LogEntry> side_b, int n_rollouts) {
    ExampleVerdict out;
    const auto mean_a = mean_score(
        side_a, n_rollouts, [](const LogEntry& e) { return e.judgment.score->value; },
        has_point_score);
    const auto mean_b = mean_score(
        side_b, n_rollouts, [](const LogEntry& e) { return e.judgment.score->value; },
        has_point_score);
    if (!mean_a || !mean_b) {
        out.all_error = true;
        return out;
    }
    if (std::abs(*mean_a - *mean_b) <= kScoreTieEpsilon) {
        out.tie = true;
        return out;
    }
    out.winner = *mean_a > *mean_b ? Choice::A : Choice::B;
    return out;
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

GoldMap gold_map(std::span<const PreferenceExample> dataset) {
    GoldMap map;
    for (const auto& ex : dataset) {
        map[ex.id] = GoldInfo{ex.gold, ex.category.value_or("")};
    }
    return map;
}

namespace {

struct ExampleEntries {
    std::vector<const LogEntry*> by_orientation[4];  // indexed by Orientation
};

std::size_t orientation_index(Orientation o) { return static_cast<std::size_t>(o); }

std::vector<LogEntry> sorted_copy(const std::vector<const LogEntry*>& entries) {
    std::vector<LogEntry> out;
    out.reserve(entries.size());
    for (const auto* e : entries) out.push_back(*e);
    std::sort(out.begin(), out.end(),
              [](const LogEntry& a, const LogEntry& b) { return a.rollout < b.rollout; });
    return out;
}

struct CategoryAccumulator {
    std::size_t count = 0;
    std::size_t random_order_correct_twice = 0;  // counts both orders, halved later
    std::size_t random_order_denominator = 0;
    std::size_t consistent_correct = 0;
    std::size_t flip_or_tie = 0;
};

}  // namespace

EvalReport compute_report(const JudgmentLog& log, const AggregationStrategy& strategy,
                          const GoldMap& gold) {
    strategy.validate();
    const Formulation formulation = log.formulation();
    const SchedulingProtocol protocol = log.protocol();
    if (strategy.N > log.rollouts()) {
        throw std::invalid_argument("strategy N = " + std::to_string(strategy.N) +
                                    " exceeds log rollouts = " + std::to_string(log.rollouts()));
    }
    if (strategy.kind == StrategyKind::MajorityVote &&
        formulation.kind == FormulationKind::PoS) {
        throw std::invalid_argument("majority vote is undefined for pointwise logs");
    }
    if (strategy.kind == StrategyKind::MeanScore && (formulation.kind == FormulationKind::PaV ||
                                                     formulation.kind == FormulationKind::PaVS)) {
        throw std::invalid_argument("mean-score aggregation requires score formulations");
    }

    std::map<std::string, ExampleEntries> grouped;
    for (const auto& entry : log.entries) {
        grouped[entry.example_id].by_orientation[orientation_index(entry.orientation)].push_back(
            &entry);
    }

    EvalReport report;
    report.n_entries = log.entries.size();
    report.score_hist.assign(11, 0);
    report.delta_hist.assign(21, 0);

    std::size_t correct_ab = 0, correct_ba = 0, both_correct = 0, agree_incorrect = 0, flips = 0;
    std::size_t ties = 0, flips_or_ties = 0, parse_errors = 0;
    std::size_t single_correct = 0, single_total = 0;
    std::map<std::string, CategoryAccumulator> categories;
    std::vector<int> think_tokens;
    think_tokens.reserve(log.entries.size());

    for (const auto& entry : log.entries) {
        think_tokens.push_back(entry.think_tokens);
        if (!entry.judgment.ok()) ++parse_errors;
    }

    auto bucket_score = [&](const Score& s) {
        const std::size_t b = std::min<std::size_t>(10, static_cast<std::size_t>(s.value));
        ++report.score_hist[b];
    };
    auto bucket_delta = [&](double delta) {
        const int floored = static_cast<int>(std::floor(delta));
        const int idx = std::clamp(floored - kDeltaHistMin, 0, 20);
        ++report.delta_hist[static_cast<std::size_t>(idx)];
    };

    const bool pointwise = protocol == SchedulingProtocol::PointwiseTwin;
    const bool both_order = protocol == SchedulingProtocol::BothOrder;

    for (const auto& [example_id, entries] : grouped) {
        const auto gold_it = gold.find(example_id);
        if (gold_it == gold.end()) {
            throw std::invalid_argument("no gold label for example " + example_id);
        }
        const Choice g = gold_it->second.gold;
        auto& cat = categories[gold_it->second.category.empty() ? "uncategorized"
                                                                : gold_it->second.category];
        ++cat.count;
        ++report.n_examples;

        // Score distributions, canonical chosen-minus-rejected deltas.
        if (pointwise) {
            const auto a_entries =
                sorted_copy(entries.by_orientation[orientation_index(Orientation::PointwiseA)]);
            const auto b_entries =
                sorted_copy(entries.by_orientation[orientation_index(Orientation::PointwiseB)]);
            for (const auto& e : a_entries)
                if (has_point_score(e)) bucket_score(*e.judgment.score);
            for (const auto& e : b_entries)
                if (has_point_score(e)) bucket_score(*e.judgment.score);
            const std::size_t paired = std::min(a_entries.size(), b_entries.size());
            for (std::size_t r = 0; r < paired; ++r) {
                if (has_point_score(a_entries[r]) && has_point_score(b_entries[r])) {
                    const double score_a = a_entries[r].judgment.score->value;
                    const double score_b = b_entries[r].judgment.score->value;
                    bucket_delta(g == Choice::A ? score_a - score_b : score_b - score_a);
                }
            }

            const ExampleVerdict v = pointwise_verdict(a_entries, b_entries, strategy.N);
            const bool correct = v.winner && *v.winner == g;
            if (correct) {
                ++both_correct;  // the single comparison is order-free
            } else {
                ++agree_incorrect;
            }
            if (v.tie) {
                ++ties;
                ++flips_or_ties;
                ++cat.flip_or_tie;
            }
            cat.consistent_correct += correct ? 1 : 0;
            cat.random_order_correct_twice += correct ? 2 : 0;
            cat.random_order_denominator += 2;
            continue;
        }

        for (Orientation o : {Orientation::AB, Orientation::BA}) {
            for (const auto* e : entries.by_orientation[orientation_index(o)]) {
                if (has_pair_scores(*e)) {
                    bucket_score(*e->judgment.score_a);
                    bucket_score(*e->judgment.score_b);
                    const double chosen = g == Choice::A ? e->judgment.score_a->value
                                                         : e->judgment.score_b->value;
                    const double rejected = g == Choice::A ? e->judgment.score_b->value
                                                           : e->judgment.score_a->value;
                    bucket_delta(chosen - rejected);
                }
            }
        }

        if (both_order) {
            const auto ab = sorted_copy(entries.by_orientation[orientation_index(Orientation::AB)]);
            const auto ba = sorted_copy(entries.by_orientation[orientation_index(Orientation::BA)]);
            const ExampleVerdict va = verdict_of(ab, formulation, strategy);
            const ExampleVerdict vb = verdict_of(ba, formulation, strategy);
            const bool ca = va.winner && *va.winner == g;
            const bool cb = vb.winner && *vb.winner == g;
            correct_ab += ca ? 1 : 0;
            correct_ba += cb ? 1 : 0;
            const bool flipped = va.winner != vb.winner;
            if (ca && cb) {
                ++both_correct;
            } else if (flipped) {
                ++flips;
            } else {
                ++agree_incorrect;
            }
            const bool tied = va.tie || vb.tie;
            if (tied) ++ties;
            if (flipped || tied) {
                ++flips_or_ties;
                ++cat.flip_or_tie;
            }
            cat.consistent_correct += (ca && cb) ? 1 : 0;
            cat.random_order_correct_twice += (ca ? 1 : 0) + (cb ? 1 : 0);
            cat.random_order_denominator += 2;
        } else {
            // Random single order: exactly one orientation per example.
            for (Orientation o : {Orientation::AB, Orientation::BA}) {
                const auto& bucket = entries.by_orientation[orientation_index(o)];
                if (bucket.empty()) continue;
                const auto sorted = sorted_copy(bucket);
                const ExampleVerdict v = verdict_of(sorted, formulation, strategy);
                const bool correct = v.winner && *v.winner == g;
                ++single_total;
                single_correct += correct ? 1 : 0;
                if (v.tie) {
                    ++ties;
                    ++flips_or_ties;
                    ++cat.flip_or_tie;
                }
                cat.random_order_correct_twice += correct ? 2 : 0;
                cat.random_order_denominator += 2;
            }
        }
    }

    const double n = static_cast<double>(report.n_examples);
    if (report.n_examples > 0) {
        if (both_order) {
            report.acc_ab = static_cast<double>(correct_ab) / n;
            report.acc_ba = static_cast<double>(correct_ba) / n;
            report.acc_random_order = (*report.acc_ab + *report.acc_ba) / 2.0;
            report.acc_consistent = static_cast<double>(both_correct) / n;
            report.consistent_incorrect_rate = static_cast<double>(agree_incorrect) / n;
            report.flip_rate = static_cast<double>(flips) / n;
        } else if (pointwise) {
            report.acc_consistent = static_cast<double>(both_correct) / n;
            report.consistent_incorrect_rate = static_cast<double>(agree_incorrect) / n;
            report.acc_random_order = *report.acc_consistent;
            report.flip_rate = 0.0;
        } else {
            report.acc_random_order =
                single_total > 0 ? static_cast<double>(single_correct) / single_total : 0.0;
        }
        report.tie_rate = static_cast<double>(ties) / n;
        report.flip_or_tie_rate = static_cast<double>(flips_or_ties) / n;
    }
    report.parse_error_rate =
        report.n_entries > 0 ? static_cast<double>(parse_errors) / report.n_entries : 0.0;

    for (const auto& [name, acc] : categories) {
        CategoryMetrics m;
        m.count = acc.count;
        m.acc_random_order = acc.random_order_denominator > 0
                                 ? static_cast<double>(acc.random_order_correct_twice) /
                                       acc.random_order_denominator
                                 : 0.0;
        m.acc_consistent =
            acc.count > 0 ? static_cast<double>(acc.consistent_correct) / acc.count : 0.0;
        m.flip_or_tie_rate = acc.count > 0 ? static_cast<double>(acc.flip_or_tie) / acc.count : 0.0;
        report.per_category[name] = m;
    }

    report.thought_stats = parser::thought_stats_from_counts(think_tokens);
    report.config = log.config;
    report.config["strategy"] = {{"kind", to_string(strategy.kind)}, {"N", strategy.N}};
    return report;
}

json EvalReport::to_json() const {
    json metrics{
        {"n_examples", n_examples},
        {"n_entries", n_entries},
        {"acc_random_order", acc_random_order},
        {"flip_rate", flip_rate},
        {"tie_rate", tie_rate},
        {"flip_or_tie_rate", flip_or_tie_rate},
        {"parse_error_rate", parse_error_rate},
    };
    metrics["acc_ab"] = acc_ab ? json(*acc_ab) : json(nullptr);
    metrics["acc_ba"] = acc_ba ? json(*acc_ba) : json(nullptr);
    metrics["acc_consistent"] = acc_consistent ? json(*acc_consistent) : json(nullptr);
    metrics["consistent_incorrect_rate"] =
        consistent_incorrect_rate ? json(*consistent_incorrect_rate) : json(nullptr);

    json cats = json::object();
    for (const auto& [name, m] : per_category) {
        cats[name] = {{"count", m.count},
                      {"acc_random_order", m.acc_random_order},
                      {"acc_consistent", m.acc_consistent},
                      {"flip_or_tie_rate", m.flip_or_tie_rate}};
    }

    return json{
        {"type", "eval-report"},
        {"config", config},
        {"metrics", metrics},
        {"per_category", cats},
        {"score_hist", score_hist},
        {"delta_hist", {{"min_delta", kDeltaHistMin}, {"counts", delta_hist}}},
        {"thought_stats",
         {{"count", thought_stats.count},
          {"mean_len", thought_stats.mean_len},
          {"median_len", thought_stats.median_len},
          {"bucket_width", 50},
          {"histogram", thought_stats.histogram}}},
    };
}

std::string EvalReport::to_csv() const {
    std::ostringstream out;
    out << "category,count,acc_random_order,acc_consistent,flip_or_tie_rate\n";
    for (const auto& [name, m] : per_category) {
        out << name << ',' << m.count << ',' << m.acc_random_order << ',' << m.acc_consistent
            << ',' << m.flip_or_tie_rate << '\n';
    }
    return out.str();
}

std::vector<ScalingPoint> scaling_curve(const JudgmentLog& log, StrategyKind kind,
                                        std::span<const int> Ns, const GoldMap& gold) {
    if (kind == StrategyKind::Single) {
        throw std::invalid_argument("scaling curves need majority or mean-score aggregation");
    }
    std::vector<ScalingPoint> points;
    points.reserve(Ns.size());
    for (int n : Ns) {
        if (n < 1 || n > log.rollouts()) {
            throw std::invalid_argument("scaling N = " + std::to_string(n) +
                                        " outside log rollouts = " + std::to_string(log.rollouts()));
        }
        const EvalReport report = compute_report(log, AggregationStrategy{kind, n}, gold);
        if (!report.acc_consistent) {
            throw std::invalid_argument("scaling curves need a both-order or pointwise log");
        }
        points.push_back({n, *report.acc_consistent, report.tie_rate});
    }
    return points;
}

}  // namespace judgekit::eval
