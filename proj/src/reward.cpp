#include "judgekit/reward.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace judgekit::reward {

using parser::ParsedJudgment;

std::string_view to_string(SchemeKind k) {
    switch (k) {
        case SchemeKind::VerdictCorrectness: return "verdict-correctness";
        case SchemeKind::VerdictConsistency: return "verdict-consistency";
        case SchemeKind::ScorePairwise: return "score-pairwise";
        case SchemeKind::PointwisePair: return "pointwise-pair";
        case SchemeKind::VerdictWithScore: return "verdict-with-score";
    }
    return "verdict-correctness";
}

std::optional<SchemeKind> scheme_kind_from_string(std::string_view s) {
    if (s == "verdict-correctness") return SchemeKind::VerdictCorrectness;
    if (s == "verdict-consistency") return SchemeKind::VerdictConsistency;
    if (s == "score-pairwise") return SchemeKind::ScorePairwise;
    if (s == "pointwise-pair") return SchemeKind::PointwisePair;
    if (s == "verdict-with-score") return SchemeKind::VerdictWithScore;
    return std::nullopt;
}

void RewardScheme::validate() const {
    if (negative_reward > 0.0)
        throw std::invalid_argument("negative_reward must be <= 0");
    if (format_bonus < 0.0)
        throw std::invalid_argument("format_bonus must be >= 0");
}

bool RewardScheme::accepts(FormulationKind f) const {
    switch (kind) {
        case SchemeKind::VerdictCorrectness:
        case SchemeKind::VerdictConsistency:
            return f == FormulationKind::PaV || f == FormulationKind::PaVS;
        case SchemeKind::VerdictWithScore:
            return f == FormulationKind::PaVS;
        case SchemeKind::ScorePairwise:
            return f == FormulationKind::PaS;
        case SchemeKind::PointwisePair:
            return f == FormulationKind::PoS;
    }
    return false;
}

namespace {

bool verdict_correct(const ParsedJudgment& j, Choice gold) {
    return j.ok() && j.verdict && j.verdict->winner == gold;
}

bool scores_prefer(const ParsedJudgment& j, Choice gold) {
    if (!j.ok() || !j.score_a || !j.score_b) return false;
    const double gold_score = gold == Choice::A ? j.score_a->value : j.score_b->value;
    const double other_score = gold == Choice::A ? j.score_b->value : j.score_a->value;
    return gold_score > other_score;
}

}  // namespace

double reward_verdict(const ParsedJudgment& judgment, Choice gold, const RewardScheme& scheme) {
    if (scheme.kind != SchemeKind::VerdictCorrectness &&
        scheme.kind != SchemeKind::VerdictWithScore) {
        throw PairingError("reward_verdict requires a verdict-based scheme, got " +
                           std::string(to_string(scheme.kind)));
    }
    scheme.validate();
    double r = verdict_correct(judgment, gold) ? 1.0 : scheme.negative_reward;
    if (judgment.think) r += scheme.format_bonus;
    return r;
}

std::pair<double, double> reward_consistency(const ParsedJudgment& judgment_ab,
                                             const ParsedJudgment& judgment_ba, Choice gold) {
    const bool both = verdict_correct(judgment_ab, gold) && verdict_correct(judgment_ba, gold);
    const double r = both ? 1.0 : 0.0;
    return {r, r};
}

double reward_score_pairwise(const ParsedJudgment& judgment, Choice gold) {
    if (judgment.formulation.kind != FormulationKind::PaS) {
        throw PairingError("reward_score_pairwise requires a PaS judgment");
    }
    return scores_prefer(judgment, gold) ? 1.0 : 0.0;
}

std::pair<double, double> reward_pointwise_pair(const ParsedJudgment& judgment_a,
                                                const ParsedJudgment& judgment_b, Choice gold) {
    if (judgment_a.formulation.kind != FormulationKind::PoS ||
        judgment_b.formulation.kind != FormulationKind::PoS) {
        throw PairingError("reward_pointwise_pair requires PoS judgments");
    }
    if (!judgment_a.ok() || !judgment_b.ok() || !judgment_a.score || !judgment_b.score) {
        return {0.0, 0.0};
    }
    const double score_a = judgment_a.score->value;
    const double score_b = judgment_b.score->value;
    const double gold_score = gold == Choice::A ? score_a : score_b;
    const double other_score = gold == Choice::A ? score_b : score_a;
    const double r = gold_score > other_score ? 1.0 : 0.0;
    return {r, r};
}

std::vector<double> grpo_advantages(std::span<const double> rewards) {
    if (rewards.empty()) throw std::invalid_argument("grpo_advantages: empty reward group");

    const bool all_equal =
        std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards[0]; });
    if (all_equal) return std::vector<double>(rewards.size(), 0.0);

    double sum = 0.0;
    for (double r : rewards) sum += r;
    const double mean = sum / static_cast<double>(rewards.size());

    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= static_cast<double>(rewards.size());
    const double denom = std::max(std::sqrt(var), kAdvantageEpsilon);

    std::vector<double> advantages;
    advantages.reserve(rewards.size());
    for (double r : rewards) advantages.push_back((r - mean) / denom);
    return advantages;
}

void annotate_group(RolloutGroup& group, std::span<const ParsedJudgment> judgments,
                    std::span<const ParsedJudgment> sibling_judgments, Choice gold,
                    const RewardScheme& scheme) {
    scheme.validate();
    if (group.group_size <= 0) throw std::invalid_argument("group_size must be positive");
    if (judgments.size() != static_cast<std::size_t>(group.group_size)) {
        throw std::invalid_argument("annotate_group: expected " +
                                    std::to_string(group.group_size) + " judgments, got " +
                                    std::to_string(judgments.size()));
    }
    if (scheme.needs_sibling()) {
        if (group.presentation.sibling_id.empty()) {
            throw PairingError("scheme " + std::string(to_string(scheme.kind)) +
                               " requires a sibling-linked presentation");
        }
        if (sibling_judgments.size() != judgments.size()) {
            throw PairingError("sibling judgments must align by rollout index");
        }
    }

    group.rewards.clear();
    group.rewards.reserve(judgments.size());
    const bool this_is_first_side = group.presentation.orientation == Orientation::AB ||
                                    group.presentation.orientation == Orientation::PointwiseA;

    for (std::size_t i = 0; i < judgments.size(); ++i) {
        switch (scheme.kind) {
            case SchemeKind::VerdictCorrectness:
            case SchemeKind::VerdictWithScore:
                group.rewards.push_back(reward_verdict(judgments[i], gold, scheme));
                break;
            case SchemeKind::ScorePairwise:
                group.rewards.push_back(reward_score_pairwise(judgments[i], gold));
                break;
            case SchemeKind::VerdictConsistency: {
                const auto& ab = this_is_first_side ? judgments[i] : sibling_judgments[i];
                const auto& ba = this_is_first_side ? sibling_judgments[i] : judgments[i];
                group.rewards.push_back(reward_consistency(ab, ba, gold).first);
                break;
            }
            case SchemeKind::PointwisePair: {
                const auto& a = this_is_first_side ? judgments[i] : sibling_judgments[i];
                const auto& b = this_is_first_side ? sibling_judgments[i] : judgments[i];
                group.rewards.push_back(reward_pointwise_pair(a, b, gold).first);
                break;
            }
        }
    }
    group.advantages = grpo_advantages(group.rewards);
}

nlohmann::json to_json(const RolloutGroup& group, const RewardScheme& scheme) {
    nlohmann::json presentation{
        {"example_id", group.presentation.example_id},
        {"id", group.presentation.id},
    };
    if (is_pairwise(group.presentation.orientation)) {
        presentation["order"] = to_string(group.presentation.orientation);
    } else {
        presentation["side"] =
            group.presentation.orientation == Orientation::PointwiseA ? "A" : "B";
    }
    if (!group.presentation.sibling_id.empty()) {
        presentation["sibling_id"] = group.presentation.sibling_id;
    }
    return nlohmann::json{
        {"presentation", presentation},
        {"rewards", group.rewards},
        {"advantages", group.advantages},
        {"scheme",
         {{"kind", to_string(scheme.kind)},
          {"negative_reward", scheme.negative_reward},
          {"format_bonus", scheme.format_bonus}}},
    };
}

void save_groups_jsonl(std::span<const RolloutGroup> groups, const RewardScheme& scheme,
                       const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write groups file: " + path.string());
    for (const auto& group : groups) out << to_json(group, scheme).dump() << '\n';
}

}  // namespace judgekit::reward
