#pragma once

#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "judgekit/core.hpp"
#include "judgekit/parser.hpp"

/// Verifiable reward schemes over parsed judgments plus group-relative
/// advantage computation for export to RL trainers.
namespace judgekit::reward {

enum class SchemeKind {
    VerdictCorrectness,
    VerdictConsistency,
    ScorePairwise,
    PointwisePair,
    VerdictWithScore,
};

std::string_view to_string(SchemeKind k);
std::optional<SchemeKind> scheme_kind_from_string(std::string_view s);

/// Reward configuration. Defaults reproduce the primary scheme: +1 for a
/// correct verdict, 0 otherwise. negative_reward and format_bonus are the
/// ablation knobs (typical ablation values -1 and +0.2) and apply to the
/// verdict-based kinds.
struct RewardScheme {
    SchemeKind kind = SchemeKind::VerdictCorrectness;
    double negative_reward = 0.0;
    double format_bonus = 0.0;

    void validate() const;
    bool needs_sibling() const {
        return kind == SchemeKind::VerdictConsistency || kind == SchemeKind::PointwisePair;
    }
    /// Formulation whose completions this scheme can reward.
    bool accepts(FormulationKind f) const;
};

/// Binary verdict-correctness reward. Incorrect verdicts and parse failures
/// earn negative_reward (0 by default); format_bonus is added whenever the
/// completion carried a well-formed think block.
double reward_verdict(const parser::ParsedJudgment& judgment, Choice gold,
                      const RewardScheme& scheme);

/// Consistency reward over the two orderings of a pair: both rollouts earn
/// +1 only when both canonical winners match gold, else both earn 0.
std::pair<double, double> reward_consistency(const parser::ParsedJudgment& judgment_ab,
                                             const parser::ParsedJudgment& judgment_ba,
                                             Choice gold);

/// Pairwise-score reward: +1 iff the gold side's score strictly exceeds the
/// other side's. Ties, reversals, and parse failures earn 0.
double reward_score_pairwise(const parser::ParsedJudgment& judgment, Choice gold);

/// Distant-supervision reward over twin pointwise judgments of the same
/// rollout index: both earn +1 iff score(gold side) > score(other side).
std::pair<double, double> reward_pointwise_pair(const parser::ParsedJudgment& judgment_a,
                                                const parser::ParsedJudgment& judgment_b,
                                                Choice gold);

inline constexpr double kAdvantageEpsilon = 1e-6;

/// Group-relative advantages: (r_i - mean) / max(std, epsilon) with the
/// population standard deviation. All-equal reward groups map to exact zeros.
std::vector<double> grpo_advantages(std::span<const double> rewards);

/// All rollouts of one presentation with their rewards and advantages.
/// Sibling-dependent schemes pair rollout i of this presentation with
/// rollout i of the sibling presentation.
struct RolloutGroup {
    Presentation presentation;
    int group_size = 5;
    std::vector<double> rewards;
    std::vector<double> advantages;
};

/// Error for unlinked siblings, wrong sizes, and scheme mismatches.
struct PairingError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Fills rewards via the scheme-appropriate rule and advantages via
/// grpo_advantages over this presentation's rewards. sibling_judgments must
/// be non-empty (and index-aligned) for sibling-dependent schemes.
void annotate_group(RolloutGroup& group, std::span<const parser::ParsedJudgment> judgments,
                    std::span<const parser::ParsedJudgment> sibling_judgments, Choice gold,
                    const RewardScheme& scheme);

/// Annotated-group record, the file contract consumed by external trainers:
/// {"presentation": {...}, "rewards": [..], "advantages": [..], "scheme": {...}}.
nlohmann::json to_json(const RolloutGroup& group, const RewardScheme& scheme);
void save_groups_jsonl(std::span<const RolloutGroup> groups, const RewardScheme& scheme,
                       const std::filesystem::path& path);

}  // namespace judgekit::reward
