#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "judgekit/reward.hpp"
#include "testutil.hpp"

using namespace judgekit;
using namespace judgekit::reward;
using parser::ParsedJudgment;
using parser::ParseStatus;

namespace {

const Formulation kPaV{FormulationKind::PaV, PromptStyle::Thinking};
const Formulation kPaS{FormulationKind::PaS, PromptStyle::Thinking};
const Formulation kPoS{FormulationKind::PoS, PromptStyle::Thinking};

ParsedJudgment verdict_judgment(Choice winner, Orientation o = Orientation::AB,
                                bool with_think = true) {
    ParsedJudgment j;
    j.formulation = kPaV;
    if (with_think) j.think = "some reasoning";
    j.verdict = Verdict{winner, raw_slot_for(winner, o)};
    return j;
}

ParsedJudgment error_judgment(FormulationKind kind = FormulationKind::PaV) {
    ParsedJudgment j;
    j.formulation = Formulation{kind, PromptStyle::Thinking};
    j.status = ParseStatus::ParseError;
    j.error_kind = parser::ParseErrorKind::MissingVerdict;
    return j;
}

ParsedJudgment pas_judgment(double score_a, double score_b) {
    ParsedJudgment j;
    j.formulation = kPaS;
    j.think = "t";
    j.score_a = Score::make(score_a);
    j.score_b = Score::make(score_b);
    return j;
}

ParsedJudgment pos_judgment(double score) {
    ParsedJudgment j;
    j.formulation = kPoS;
    j.think = "t";
    j.score = Score::make(score);
    return j;
}

const RewardScheme kDefault{};

}  // namespace

TEST_CASE("verdict correctness: +1 correct, negative reward otherwise") {
    CHECK(reward_verdict(verdict_judgment(Choice::A), Choice::A, kDefault) == 1.0);
    CHECK(reward_verdict(verdict_judgment(Choice::B), Choice::A, kDefault) == 0.0);

    RewardScheme punishing;
    punishing.negative_reward = -1.0;
    CHECK(reward_verdict(verdict_judgment(Choice::B), Choice::A, punishing) == -1.0);

    CHECK(reward_verdict(error_judgment(), Choice::A, kDefault) == 0.0);
    CHECK(reward_verdict(error_judgment(), Choice::A, punishing) == -1.0);
}

TEST_CASE("format bonus applies iff the think block is well-formed") {
    RewardScheme bonused;
    bonused.format_bonus = 0.2;
    CHECK(reward_verdict(verdict_judgment(Choice::A), Choice::A, bonused) == doctest::Approx(1.2));
    CHECK(reward_verdict(verdict_judgment(Choice::B), Choice::A, bonused) == doctest::Approx(0.2));
    CHECK(reward_verdict(verdict_judgment(Choice::A, Orientation::AB, /*with_think=*/false),
                         Choice::A, bonused) == doctest::Approx(1.0));
}

TEST_CASE("verdict reward rejects mismatched schemes") {
    RewardScheme wrong;
    wrong.kind = SchemeKind::ScorePairwise;
    CHECK_THROWS_AS(reward_verdict(verdict_judgment(Choice::A), Choice::A, wrong), PairingError);
}

TEST_CASE("consistency reward requires both orderings correct") {
    const auto correct_ab = verdict_judgment(Choice::A, Orientation::AB);
    const auto correct_ba = verdict_judgment(Choice::A, Orientation::BA);
    const auto wrong_ba = verdict_judgment(Choice::B, Orientation::BA);

    CHECK((reward_consistency(correct_ab, correct_ba, Choice::A) == std::pair<double, double>(1.0, 1.0)));
    CHECK((reward_consistency(correct_ab, wrong_ba, Choice::A) == std::pair<double, double>(0.0, 0.0)));
    CHECK((reward_consistency(error_judgment(), correct_ba, Choice::A) == std::pair<double, double>(0.0, 0.0)));
}

TEST_CASE("pairwise score reward requires strict preference of the gold side") {
    CHECK(reward_score_pairwise(pas_judgment(8.0, 6.0), Choice::A) == 1.0);
    CHECK(reward_score_pairwise(pas_judgment(7.0, 7.0), Choice::A) == 0.0);
    CHECK(reward_score_pairwise(pas_judgment(5.0, 9.5), Choice::A) == 0.0);
    CHECK(reward_score_pairwise(pas_judgment(5.0, 9.5), Choice::B) == 1.0);
    CHECK(reward_score_pairwise(error_judgment(FormulationKind::PaS), Choice::A) == 0.0);
    CHECK_THROWS_AS(reward_score_pairwise(verdict_judgment(Choice::A), Choice::A), PairingError);
}

TEST_CASE("pointwise pair reward evaluates both twins jointly") {
    CHECK((reward_pointwise_pair(pos_judgment(8.0), pos_judgment(6.5), Choice::A) ==
           std::pair<double, double>(1.0, 1.0)));
    CHECK((reward_pointwise_pair(pos_judgment(6.0), pos_judgment(6.0), Choice::A) ==
           std::pair<double, double>(0.0, 0.0)));
    CHECK((reward_pointwise_pair(error_judgment(FormulationKind::PoS), pos_judgment(9.0),
                                 Choice::A) == std::pair<double, double>(0.0, 0.0)));
    CHECK((reward_pointwise_pair(pos_judgment(6.0), pos_judgment(9.0), Choice::B) ==
           std::pair<double, double>(1.0, 1.0)));
}

TEST_CASE("grpo advantages: frozen expected vectors") {
    SUBCASE("[1,1,0,0,0] -> [1.2247 x2, -0.8165 x3]") {
        const double rewards[] = {1, 1, 0, 0, 0};
        const auto adv = grpo_advantages(rewards);
        REQUIRE(adv.size() == 5);
        CHECK(adv[0] == doctest::Approx(1.2247).epsilon(1e-3));
        CHECK(adv[1] == doctest::Approx(1.2247).epsilon(1e-3));
        CHECK(adv[2] == doctest::Approx(-0.8165).epsilon(1e-3));
        CHECK(adv[3] == doctest::Approx(-0.8165).epsilon(1e-3));
        CHECK(adv[4] == doctest::Approx(-0.8165).epsilon(1e-3));
    }
    SUBCASE("constant groups are exactly zero") {
        const double rewards[] = {1, 1, 1, 1, 1};
        for (double a : grpo_advantages(rewards)) CHECK(a == 0.0);
        const double fractional[] = {0.2, 0.2, 0.2, 0.2, 0.2};
        for (double a : grpo_advantages(fractional)) CHECK(a == 0.0);
    }
    SUBCASE("[1,0] -> [1,-1]") {
        const double rewards[] = {1, 0};
        const auto adv = grpo_advantages(rewards);
        CHECK(adv[0] == doctest::Approx(1.0));
        CHECK(adv[1] == doctest::Approx(-1.0));
    }
    SUBCASE("empty groups are rejected") {
        CHECK_THROWS_AS(grpo_advantages({}), std::invalid_argument);
    }
}

TEST_CASE("grpo advantages: sum zero, unit variance, monotone") {
    std::mt19937_64 rng{11};
    std::uniform_int_distribution<int> size(2, 16);
    std::uniform_real_distribution<double> reward(-1.0, 1.5);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> rewards(size(rng));
        for (auto& r : rewards) r = reward(rng);
        const auto adv = grpo_advantages(rewards);

        double sum = 0.0;
        for (double a : adv) sum += a;
        CHECK(std::abs(sum) <= 1e-9);

        double mean = 0.0;
        for (double r : rewards) mean += r;
        mean /= rewards.size();
        double var = 0.0;
        for (double r : rewards) var += (r - mean) * (r - mean);
        var /= rewards.size();
        if (std::sqrt(var) > kAdvantageEpsilon) {
            double adv_var = 0.0;
            for (double a : adv) adv_var += a * a;
            adv_var /= adv.size();
            CHECK(adv_var == doctest::Approx(1.0).epsilon(1e-6));
        }
        for (std::size_t i = 0; i < rewards.size(); ++i) {
            for (std::size_t j = 0; j < rewards.size(); ++j) {
                if (rewards[i] > rewards[j]) CHECK(adv[i] > adv[j]);
            }
        }
    }
}

TEST_CASE("annotate_group composes the scheme over rollouts") {
    Presentation pres{"e1", Orientation::AB, "e1/AB", "e1/BA"};

    SUBCASE("PaV group of 5 with 3 correct verdicts") {
        std::vector<ParsedJudgment> judgments{
            verdict_judgment(Choice::A), verdict_judgment(Choice::A), verdict_judgment(Choice::A),
            verdict_judgment(Choice::B), verdict_judgment(Choice::B)};
        RolloutGroup group{pres, 5, {}, {}};
        annotate_group(group, judgments, {}, Choice::A, kDefault);
        const std::vector<double> expected{1, 1, 1, 0, 0};
        CHECK(group.rewards == expected);
        REQUIRE(group.advantages.size() == 5);
        double sum = 0.0;
        for (double a : group.advantages) sum += a;
        CHECK(std::abs(sum) <= 1e-9);
    }

    SUBCASE("consistency scheme with an all-correct sibling") {
        std::vector<ParsedJudgment> judgments(5, verdict_judgment(Choice::A, Orientation::AB));
        std::vector<ParsedJudgment> sibling(5, verdict_judgment(Choice::A, Orientation::BA));
        RolloutGroup group{pres, 5, {}, {}};
        RewardScheme scheme;
        scheme.kind = SchemeKind::VerdictConsistency;
        annotate_group(group, judgments, sibling, Choice::A, scheme);
        CHECK(group.rewards == std::vector<double>(5, 1.0));
        for (double a : group.advantages) CHECK(a == 0.0);
    }

    SUBCASE("sibling-dependent scheme without sibling judgments fails") {
        std::vector<ParsedJudgment> judgments(5, verdict_judgment(Choice::A));
        RolloutGroup group{pres, 5, {}, {}};
        RewardScheme scheme;
        scheme.kind = SchemeKind::VerdictConsistency;
        CHECK_THROWS_AS(annotate_group(group, judgments, {}, Choice::A, scheme), PairingError);

        RolloutGroup unlinked{Presentation{"e1", Orientation::AB, "e1/AB", ""}, 5, {}, {}};
        std::vector<ParsedJudgment> sibling(5, verdict_judgment(Choice::A, Orientation::BA));
        CHECK_THROWS_AS(annotate_group(unlinked, judgments, sibling, Choice::A, scheme),
                        PairingError);
    }

    SUBCASE("judgment count must match group size") {
        std::vector<ParsedJudgment> judgments(3, verdict_judgment(Choice::A));
        RolloutGroup group{pres, 5, {}, {}};
        CHECK_THROWS_AS(annotate_group(group, judgments, {}, Choice::A, kDefault),
                        std::invalid_argument);
    }
}

TEST_CASE("annotated groups export the trainer-facing record shape") {
    Presentation pres{"e9", Orientation::BA, "e9/BA", "e9/AB"};
    std::vector<ParsedJudgment> judgments{verdict_judgment(Choice::A, Orientation::BA),
                                          verdict_judgment(Choice::B, Orientation::BA)};
    RolloutGroup group{pres, 2, {}, {}};
    annotate_group(group, judgments, {}, Choice::A, kDefault);

    const auto record = to_json(group, kDefault);
    CHECK(record["presentation"]["example_id"] == "e9");
    CHECK(record["presentation"]["order"] == "BA");
    CHECK(record["presentation"]["sibling_id"] == "e9/AB");
    CHECK(record["rewards"].size() == 2);
    CHECK(record["advantages"].size() == 2);
    CHECK(record["scheme"]["kind"] == "verdict-correctness");

    const auto path = std::filesystem::temp_directory_path() / "judgekit_groups.jsonl";
    const RolloutGroup groups[] = {group};
    save_groups_jsonl(groups, kDefault, path);
    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(nlohmann::json::parse(line) == record);
    std::filesystem::remove(path);
}

TEST_CASE("consistency dominance: consistency reward never exceeds either correctness reward") {
    std::mt19937_64 rng{17};
    std::uniform_int_distribution<int> coin(0, 2);
    for (int trial = 0; trial < 300; ++trial) {
        auto pick = [&](Orientation o) {
            const int c = coin(rng);
            if (c == 2) return error_judgment();
            return verdict_judgment(c == 0 ? Choice::A : Choice::B, o);
        };
        const auto ab = pick(Orientation::AB);
        const auto ba = pick(Orientation::BA);
        const auto [r_ab, r_ba] = reward_consistency(ab, ba, Choice::A);
        CHECK(r_ab == r_ba);
        CHECK(r_ab <= reward_verdict(ab, Choice::A, kDefault));
        CHECK(r_ab <= reward_verdict(ba, Choice::A, kDefault));
    }
}

TEST_CASE("label-swap symmetry through the parser") {
    // Swapping (response_a <-> response_b) and gold flips the orientation a
    // fixed physical prompt corresponds to; every reward must be unchanged.
    std::mt19937_64 rng{23};
    int checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const bool use_scores = trial % 2 == 1;
        const Formulation f = use_scores ? kPaS : kPaV;
        const auto synth = testutil::synthesize(rng, f, Orientation::AB);
        const Choice gold = trial % 4 < 2 ? Choice::A : Choice::B;

        const auto as_ab = parser::parse(synth.completion, f, Orientation::AB,
                                         parser::Strictness::Strict);
        const auto as_ba = parser::parse(synth.completion, f, Orientation::BA,
                                         parser::Strictness::Strict);
        REQUIRE(as_ab.ok());
        REQUIRE(as_ba.ok());
        if (use_scores) {
            CHECK(reward_score_pairwise(as_ab, gold) ==
                  reward_score_pairwise(as_ba, opposite(gold)));
        } else {
            CHECK(reward_verdict(as_ab, gold, kDefault) ==
                  reward_verdict(as_ba, opposite(gold), kDefault));
        }
        ++checked;
    }
    CHECK(checked == 1000);
}

TEST_CASE("PaS-PaV coherence: untied scores induce the verdict reward") {
    std::mt19937_64 rng{29};
    for (int trial = 0; trial < 300; ++trial) {
        const double a = testutil::random_grid_score(rng);
        const double b = testutil::random_grid_score(rng);
        if (a == b) continue;
        const Choice gold = trial % 2 == 0 ? Choice::A : Choice::B;
        const auto scored = pas_judgment(a, b);
        const Choice implied = a > b ? Choice::A : Choice::B;
        const auto verdict = verdict_judgment(implied);
        CHECK(reward_score_pairwise(scored, gold) == reward_verdict(verdict, gold, kDefault));
    }
}
