#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "judgekit/core.hpp"

/// Extraction of thoughts, verdicts, and scores from raw completions. The
/// parser is total: any byte string yields a ParsedJudgment, never an
/// exception (misconfigured formulation/orientation combinations are
/// programming errors and do throw).
namespace judgekit::parser {

enum class Strictness { Strict, Lenient };

std::string_view to_string(Strictness s);
std::optional<Strictness> strictness_from_string(std::string_view s);

enum class ParseErrorKind {
    MissingVerdict,
    MissingScore,
    MalformedScore,
    OutOfRange,
    AmbiguousDuplicate,
    MissingThink,
};

std::string_view to_string(ParseErrorKind k);
std::optional<ParseErrorKind> parse_error_kind_from_string(std::string_view s);

enum class ParseStatus { Ok, ParseError };

/// Structured extraction of one completion. Verdict and pairwise scores are
/// canonicalized to the original example labels via the presentation
/// orientation; `score` carries the single pointwise score.
struct ParsedJudgment {
    Formulation formulation;
    std::optional<std::string> think;
    std::optional<Verdict> verdict;
    std::optional<Score> score_a;
    std::optional<Score> score_b;
    std::optional<Score> score;
    ParseStatus status = ParseStatus::Ok;
    std::optional<ParseErrorKind> error_kind;

    bool ok() const { return status == ParseStatus::Ok; }
    /// Whitespace-delimited token count of the thought text; 0 when absent.
    int think_tokens() const;
};

/// Parses a completion under the tag grammar of the given formulation.
///
/// The answer region is everything after the last "</think>" when that tag
/// is present, else the whole completion; verdict-like text inside the
/// reasoning is never read as the answer. Strict mode additionally rejects
/// scores that are not multiples of 0.1, completions without a well-formed
/// <think> block, and answer regions carrying both [[A]] and [[B]] markers;
/// lenient mode rounds scores half-away-from-zero to one fractional digit
/// and resolves duplicate markers to the first occurrence.
ParsedJudgment parse(std::string_view completion, const Formulation& formulation,
                     Orientation orientation, Strictness strictness);

struct ThoughtStats {
    std::size_t count = 0;
    double mean_len = 0.0;
    double median_len = 0.0;
    std::vector<std::size_t> histogram;  // bucket width 50 tokens
};

ThoughtStats thought_stats(std::span<const ParsedJudgment> judgments);
ThoughtStats thought_stats_from_counts(std::span<const int> token_counts);

/// Token count of an arbitrary text (whitespace-delimited).
int count_tokens(std::string_view text);

}  // namespace judgekit::parser
