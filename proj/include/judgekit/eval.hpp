#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "judgekit/core.hpp"
#include "judgekit/inference.hpp"
#include "judgekit/parser.hpp"

/// Benchmark runner, position-bias metrics, test-time scaling aggregators,
/// and score-distribution reports.
namespace judgekit::eval {

/// One parsed rollout of one presentation.
struct LogEntry {
    std::string example_id;
    Orientation orientation = Orientation::AB;
    int rollout = 0;
    parser::ParsedJudgment judgment;
    bool transport_error = false;
    int think_tokens = 0;
};

struct RunSpec {
    Formulation formulation;
    SchedulingProtocol protocol = SchedulingProtocol::BothOrder;
    SamplingParams sampling;
    parser::Strictness strictness = parser::Strictness::Lenient;
    std::uint64_t seed = 0;
    std::string model;
};

/// Complete record of a judging run: the resolved configuration and one
/// entry per (example, presentation, rollout). Serialized as JSONL with the
/// config echoed on the first line.
struct JudgmentLog {
    nlohmann::json config;
    std::vector<LogEntry> entries;

    Formulation formulation() const;
    SchedulingProtocol protocol() const;
    parser::Strictness strictness() const;
    int rollouts() const;
};

/// Schedules presentations, renders prompts, completes them through the
/// client, and parses every completion. Transport failures are recorded as
/// parse-errors with the transport flag; the run always completes.
JudgmentLog run_eval(std::span<const PreferenceExample> dataset, const RunSpec& spec,
                     inference::CompletionClient& client, int max_in_flight);

void save_log(const JudgmentLog& log, const std::filesystem::path& path);
JudgmentLog load_log(const std::filesystem::path& path);

enum class StrategyKind { Single, MajorityVote, MeanScore };

std::string_view to_string(StrategyKind k);
std::optional<StrategyKind> strategy_kind_from_string(std::string_view s);

struct AggregationStrategy {
    StrategyKind kind = StrategyKind::Single;
    int N = 1;

    void validate() const;  // N >= 1 and N = 1 <=> kind = single is relaxed to N >= 1
};

/// Aggregated outcome for one example (or one orientation of it). An
/// even-split majority vote resolves to the first valid rollout's verdict
/// with tie=true; equal score means stay unresolved (winner empty, tie=true)
/// and count as incorrect.
struct ExampleVerdict {
    std::optional<Choice> winner;
    bool tie = false;
    bool all_error = false;
};

/// Verdict over the entries of one pairwise orientation (sorted by rollout).
ExampleVerdict verdict_of(std::span<const LogEntry> entries, const Formulation& formulation,
                          const AggregationStrategy& strategy);

/// Verdict for a pointwise twin pair: compares the mean of the first N valid
/// scores of each side.
ExampleVerdict pointwise_verdict(std::span<const LogEntry> side_a,
                                 std::span<const LogEntry> side_b, int n_rollouts);

struct CategoryMetrics {
    std::size_t count = 0;
    double acc_random_order = 0.0;
    double acc_consistent = 0.0;
    double flip_or_tie_rate = 0.0;
};

struct EvalReport {
    std::size_t n_examples = 0;
    std::size_t n_entries = 0;
    double acc_random_order = 0.0;
    std::optional<double> acc_ab;
    std::optional<double> acc_ba;
    std::optional<double> acc_consistent;
    std::optional<double> consistent_incorrect_rate;
    double flip_rate = 0.0;
    double tie_rate = 0.0;
    double flip_or_tie_rate = 0.0;
    double parse_error_rate = 0.0;
    std::map<std::string, CategoryMetrics> per_category;
    std::vector<std::size_t> score_hist;            // bucket 1.0, scores 0..10
    std::vector<std::size_t> delta_hist;            // floor(chosen - rejected), -10..10
    parser::ThoughtStats thought_stats;
    nlohmann::json config;                          // run + strategy echo

    nlohmann::json to_json() const;
    std::string to_csv() const;  // per-category table
};

inline constexpr int kDeltaHistMin = -10;

struct GoldInfo {
    Choice gold = Choice::A;
    std::string category;  // empty = uncategorized
};

using GoldMap = std::map<std::string, GoldInfo>;

GoldMap gold_map(std::span<const PreferenceExample> dataset);

/// Computes the full report. Consistency metrics require a both-order or
/// pointwise-twin log; strategies that need scores reject verdict-only
/// formulations (configuration error).
EvalReport compute_report(const JudgmentLog& log, const AggregationStrategy& strategy,
                          const GoldMap& gold);

struct ScalingPoint {
    int N = 0;
    double acc_consistent = 0.0;
    double tie_rate = 0.0;
};

/// Re-evaluates the log at increasing sample counts using rollout prefixes,
/// so points at different N share identical randomness.
std::vector<ScalingPoint> scaling_curve(const JudgmentLog& log, StrategyKind kind,
                                        std::span<const int> Ns, const GoldMap& gold);

}  // namespace judgekit::eval
