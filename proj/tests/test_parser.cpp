#include <doctest.h>

#include <random>

#include "judgekit/parser.hpp"
#include "testutil.hpp"

using namespace judgekit;
using namespace judgekit::parser;

namespace {

const Formulation kPaV{FormulationKind::PaV, PromptStyle::Thinking};
const Formulation kPaS{FormulationKind::PaS, PromptStyle::Thinking};
const Formulation kPaVS{FormulationKind::PaVS, PromptStyle::Thinking};
const Formulation kPoS{FormulationKind::PoS, PromptStyle::Thinking};

}  // namespace

TEST_CASE("verdict slots canonicalize through the presentation order") {
    const auto j = parse("<think>t</think> <answer> [[A]] </answer>", kPaV, Orientation::BA,
                         Strictness::Strict);
    REQUIRE(j.ok());
    REQUIRE(j.verdict);
    CHECK(j.verdict->raw_slot == Slot::First);
    CHECK(j.verdict->winner == Choice::B);  // first slot holds B under BA

    const auto j2 = parse("<think>t</think> <answer> [[A]] </answer>", kPaV, Orientation::AB,
                          Strictness::Strict);
    CHECK(j2.verdict->winner == Choice::A);
}

TEST_CASE("pairwise scores parse and canonicalize") {
    const auto j = parse("<think>t</think> <score_A>7.5</score_A> <score_B>6</score_B>", kPaS,
                         Orientation::AB, Strictness::Strict);
    REQUIRE(j.ok());
    CHECK(j.score_a->value == doctest::Approx(7.5));
    CHECK(j.score_b->value == doctest::Approx(6.0));

    const auto swapped = parse("<think>t</think> <score_A>7.5</score_A> <score_B>6</score_B>",
                               kPaS, Orientation::BA, Strictness::Strict);
    REQUIRE(swapped.ok());
    CHECK(swapped.score_a->value == doctest::Approx(6.0));
    CHECK(swapped.score_b->value == doctest::Approx(7.5));
}

TEST_CASE("strict mode rejects over-precise scores, lenient rounds half away from zero") {
    const auto strict = parse("<think>t</think> <score>7.35</score>", kPoS,
                              Orientation::PointwiseA, Strictness::Strict);
    CHECK_FALSE(strict.ok());
    CHECK(strict.error_kind == ParseErrorKind::MalformedScore);

    const auto lenient = parse("<think>t</think> <score>7.35</score>", kPoS,
                               Orientation::PointwiseA, Strictness::Lenient);
    REQUIRE(lenient.ok());
    CHECK(lenient.score->value == doctest::Approx(7.4));

    const auto lenient2 = parse("<think>t</think> <score>7.24</score>", kPoS,
                                Orientation::PointwiseA, Strictness::Lenient);
    CHECK(lenient2.score->value == doctest::Approx(7.2));
}

TEST_CASE("missing payloads produce the documented error kinds") {
    const auto no_tags = parse("no tags at all", kPaV, Orientation::AB, Strictness::Strict);
    CHECK_FALSE(no_tags.ok());
    CHECK(no_tags.error_kind == ParseErrorKind::MissingVerdict);

    const auto no_score = parse("<think>t</think> the answer is good", kPoS,
                                Orientation::PointwiseA, Strictness::Strict);
    CHECK(no_score.error_kind == ParseErrorKind::MissingScore);

    const auto half_scores = parse("<think>t</think> <score_A>5</score_A>", kPaS, Orientation::AB,
                                   Strictness::Strict);
    CHECK(half_scores.error_kind == ParseErrorKind::MissingScore);

    const auto bad_score = parse("<think>t</think> <score>not-a-number</score>", kPoS,
                                 Orientation::PointwiseA, Strictness::Strict);
    CHECK(bad_score.error_kind == ParseErrorKind::MalformedScore);

    const auto out_of_range = parse("<think>t</think> <score>11</score>", kPoS,
                                    Orientation::PointwiseA, Strictness::Strict);
    CHECK(out_of_range.error_kind == ParseErrorKind::OutOfRange);
}

TEST_CASE("truncated tags are parse errors, not best-effort extractions") {
    const auto truncated_answer =
        parse("<think>t</think> <answer> [[A]]", kPaV, Orientation::AB, Strictness::Lenient);
    CHECK_FALSE(truncated_answer.ok());
    CHECK(truncated_answer.error_kind == ParseErrorKind::MissingVerdict);

    const auto truncated_score = parse("<think>t</think> <score>7.1", kPoS,
                                       Orientation::PointwiseA, Strictness::Lenient);
    CHECK(truncated_score.error_kind == ParseErrorKind::MissingScore);
}

TEST_CASE("missing think block fails only in strict mode") {
    const auto strict =
        parse("<answer> [[B]] </answer>", kPaV, Orientation::AB, Strictness::Strict);
    CHECK_FALSE(strict.ok());
    CHECK(strict.error_kind == ParseErrorKind::MissingThink);

    const auto lenient =
        parse("<answer> [[B]] </answer>", kPaV, Orientation::AB, Strictness::Lenient);
    REQUIRE(lenient.ok());
    CHECK(lenient.verdict->winner == Choice::B);
    CHECK_FALSE(lenient.think.has_value());
}

TEST_CASE("conflicting verdict markers: strict flags, lenient takes the first") {
    const std::string text = "<think>t</think> <answer> [[B]] or maybe [[A]] </answer>";
    const auto strict = parse(text, kPaV, Orientation::AB, Strictness::Strict);
    CHECK_FALSE(strict.ok());
    CHECK(strict.error_kind == ParseErrorKind::AmbiguousDuplicate);

    const auto lenient = parse(text, kPaV, Orientation::AB, Strictness::Lenient);
    REQUIRE(lenient.ok());
    CHECK(lenient.verdict->winner == Choice::B);
}

TEST_CASE("verdict-like text inside the reasoning is ignored") {
    const std::string text =
        "<think>I first thought <answer> [[B]] </answer> but that is wrong</think>"
        "<answer> [[A]] </answer>";
    const auto j = parse(text, kPaV, Orientation::AB, Strictness::Strict);
    REQUIRE(j.ok());
    CHECK(j.verdict->winner == Choice::A);
}

TEST_CASE("PaVS requires the verdict and keeps scores for reporting") {
    const std::string text =
        "<think>t</think> <score_A>8</score_A> <score_B>5.5</score_B> <answer>[[B]]</answer>";
    const auto j = parse(text, kPaVS, Orientation::AB, Strictness::Strict);
    REQUIRE(j.ok());
    CHECK(j.verdict->winner == Choice::B);
    CHECK(j.score_a->value == doctest::Approx(8.0));
    CHECK(j.score_b->value == doctest::Approx(5.5));

    // Verdict present but scores malformed: still ok, scores dropped.
    const auto partial = parse("<think>t</think> <score_A>x</score_A> <answer>[[A]]</answer>",
                               kPaVS, Orientation::AB, Strictness::Strict);
    REQUIRE(partial.ok());
    CHECK_FALSE(partial.score_a.has_value());

    // Missing verdict is fatal even with good scores.
    const auto no_verdict = parse("<think>t</think> <score_A>8</score_A> <score_B>5</score_B>",
                                  kPaVS, Orientation::AB, Strictness::Strict);
    CHECK_FALSE(no_verdict.ok());
    CHECK(no_verdict.error_kind == ParseErrorKind::MissingVerdict);
}

TEST_CASE("canonicalization involution: AB and BA winners are complements") {
    std::mt19937_64 rng{20240601};
    for (int i = 0; i < 200; ++i) {
        const auto synth = testutil::synthesize(rng, kPaV, Orientation::AB);
        const auto j_ab = parse(synth.completion, kPaV, Orientation::AB, Strictness::Strict);
        const auto j_ba = parse(synth.completion, kPaV, Orientation::BA, Strictness::Strict);
        REQUIRE(j_ab.ok());
        REQUIRE(j_ba.ok());
        CHECK(j_ab.verdict->winner == opposite(j_ba.verdict->winner));
    }
}

TEST_CASE("round-trip: synthesized completions parse back exactly") {
    std::mt19937_64 rng{7};
    const Formulation formulations[] = {kPaV, kPaS, kPaVS, kPoS,
                                        Formulation{FormulationKind::PaV, PromptStyle::PlanExecute}};
    for (int i = 0; i < 500; ++i) {
        const Formulation& f = formulations[i % 5];
        const Orientation o = f.kind == FormulationKind::PoS
                                  ? (i % 2 == 0 ? Orientation::PointwiseA : Orientation::PointwiseB)
                                  : (i % 2 == 0 ? Orientation::AB : Orientation::BA);
        const auto synth = testutil::synthesize(rng, f, o);
        const auto j = parse(synth.completion, f, o, Strictness::Strict);
        REQUIRE(j.ok());
        CHECK(j.think.value() == synth.think);
        if (synth.verdict_slot) {
            CHECK(j.verdict->raw_slot == *synth.verdict_slot);
            CHECK(j.verdict->winner == canonical_winner(*synth.verdict_slot, o));
        }
        if (synth.first_slot_score) {
            const double expect_a =
                o == Orientation::BA ? *synth.second_slot_score : *synth.first_slot_score;
            const double expect_b =
                o == Orientation::BA ? *synth.first_slot_score : *synth.second_slot_score;
            CHECK(j.score_a->value == doctest::Approx(expect_a));
            CHECK(j.score_b->value == doctest::Approx(expect_b));
        }
        if (synth.point_score) {
            CHECK(j.score->value == doctest::Approx(*synth.point_score));
        }
    }
}

TEST_CASE("parser is total over fuzzed byte strings") {
    std::mt19937_64 rng{99};
    for (int i = 0; i < 2000; ++i) {
        const std::string junk = testutil::fuzz_string(rng);
        const auto j = parse(junk, kPaV, Orientation::AB, Strictness::Lenient);
        if (!j.ok()) CHECK(j.error_kind.has_value());
        const auto j2 = parse(junk, kPoS, Orientation::PointwiseB, Strictness::Strict);
        if (!j2.ok()) CHECK(j2.error_kind.has_value());
    }
}

TEST_CASE("formulation/orientation mismatches throw") {
    CHECK_THROWS_AS(parse("x", kPaV, Orientation::PointwiseA, Strictness::Strict),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse("x", kPoS, Orientation::AB, Strictness::Strict), std::invalid_argument);
}

TEST_CASE("thought stats: mean, median, histogram") {
    auto with_tokens = [](int n) {
        ParsedJudgment j;
        std::string text;
        for (int i = 0; i < n; ++i) text += "w ";
        j.think = text;
        return j;
    };

    SUBCASE("two thoughts of 10 and 20 tokens have mean 15") {
        const ParsedJudgment js[] = {with_tokens(10), with_tokens(20)};
        const auto stats = thought_stats(js);
        CHECK(stats.mean_len == doctest::Approx(15.0));
        CHECK(stats.median_len == doctest::Approx(15.0));
    }
    SUBCASE("median of 300/400/500 tokens is 400") {
        const ParsedJudgment js[] = {with_tokens(300), with_tokens(500), with_tokens(400)};
        const auto stats = thought_stats(js);
        CHECK(stats.median_len == doctest::Approx(400.0));
        // bucket width 50: 300 -> bucket 6, 400 -> 8, 500 -> 10
        REQUIRE(stats.histogram.size() == 11);
        CHECK(stats.histogram[6] == 1);
        CHECK(stats.histogram[8] == 1);
        CHECK(stats.histogram[10] == 1);
    }
    SUBCASE("empty list yields all-zero stats") {
        const auto stats = thought_stats({});
        CHECK(stats.count == 0);
        CHECK(stats.mean_len == 0.0);
        CHECK(stats.median_len == 0.0);
        CHECK(stats.histogram.empty());
    }
    SUBCASE("absent thoughts count as zero-length") {
        const ParsedJudgment js[] = {ParsedJudgment{}, with_tokens(10)};
        const auto stats = thought_stats(js);
        CHECK(stats.mean_len == doctest::Approx(5.0));
    }
}
