#include "judgekit/parser.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>

namespace judgekit::parser {

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

/// Content of the first properly closed <open>...<close> pair, searched from
/// `from`. Unclosed tags yield nothing: truncated output is not rewardable.
std::optional<std::string_view> first_tag_content(std::string_view region, std::string_view open,
                                                  std::string_view close, std::size_t from = 0) {
    const std::size_t o = region.find(open, from);
    if (o == std::string_view::npos) return std::nullopt;
    const std::size_t body = o + open.size();
    const std::size_t c = region.find(close, body);
    if (c == std::string_view::npos) return std::nullopt;
    return region.substr(body, c - body);
}

struct SlotMark {
    std::size_t pos;
    Slot slot;
};

/// All [[A]]/[[B]] markers inside properly closed <answer> blocks, in order.
std::vector<SlotMark> answer_markers(std::string_view region) {
    std::vector<SlotMark> marks;
    std::size_t cursor = 0;
    while (true) {
        const std::size_t o = region.find("<answer>", cursor);
        if (o == std::string_view::npos) break;
        const std::size_t body = o + 8;
        const std::size_t c = region.find("</answer>", body);
        if (c == std::string_view::npos) break;
        const std::string_view inner = region.substr(body, c - body);
        for (std::size_t p = 0; p + 5 <= inner.size(); ++p) {
            if (inner.compare(p, 5, "[[A]]") == 0) marks.push_back({body + p, Slot::First});
            else if (inner.compare(p, 5, "[[B]]") == 0) marks.push_back({body + p, Slot::Second});
        }
        cursor = c + 9;
    }
    return marks;
}

enum class ScoreParse { Ok, Missing, Malformed, OutOfRange };

/// Parses the first <open>...<close> block in the region as a score.
ScoreParse parse_score_tag(std::string_view region, std::string_view open, std::string_view close,
                           Strictness strictness, std::optional<Score>& out) {
    const auto content = first_tag_content(region, open, close);
    if (!content) return ScoreParse::Missing;
    const std::string_view text = trim(*content);
    if (text.empty()) return ScoreParse::Missing;

    const std::string buf(text);
    char* end = nullptr;
    errno = 0;
    const double value = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size() || errno == ERANGE || !std::isfinite(value)) {
        return ScoreParse::Malformed;
    }
    if (value < 0.0 || value > 10.0) return ScoreParse::OutOfRange;

    const double tenths = value * 10.0;
    if (std::abs(tenths - std::round(tenths)) > 1e-6) {
        if (strictness == Strictness::Strict) return ScoreParse::Malformed;
        // Half-away-from-zero to one fractional digit.
        const double rounded = std::floor(std::abs(tenths) + 0.5) / 10.0;
        out = Score{std::copysign(rounded, value)};
        return ScoreParse::Ok;
    }
    out = Score{std::round(tenths) / 10.0};
    return ScoreParse::Ok;
}

ParseErrorKind to_error_kind(ScoreParse p) {
    switch (p) {
        case ScoreParse::Missing: return ParseErrorKind::MissingScore;
        case ScoreParse::Malformed: return ParseErrorKind::MalformedScore;
        case ScoreParse::OutOfRange: return ParseErrorKind::OutOfRange;
        case ScoreParse::Ok: break;
    }
    return ParseErrorKind::MissingScore;
}

void fail(ParsedJudgment& j, ParseErrorKind kind) {
    j.status = ParseStatus::ParseError;
    j.error_kind = kind;
}

}  // namespace

std::string_view to_string(Strictness s) {
    return s == Strictness::Strict ? "strict" : "lenient";
}

std::optional<Strictness> strictness_from_string(std::string_view s) {
    if (s == "strict") return Strictness::Strict;
    if (s == "lenient") return Strictness::Lenient;
    return std::nullopt;
}

std::string_view to_string(ParseErrorKind k) {
    switch (k) {
        case ParseErrorKind::MissingVerdict: return "missing-verdict";
        case ParseErrorKind::MissingScore: return "missing-score";
        case ParseErrorKind::MalformedScore: return "malformed-score";
        case ParseErrorKind::OutOfRange: return "out-of-range";
        case ParseErrorKind::AmbiguousDuplicate: return "ambiguous-duplicate";
        case ParseErrorKind::MissingThink: return "missing-think";
    }
    return "missing-verdict";
}

std::optional<ParseErrorKind> parse_error_kind_from_string(std::string_view s) {
    if (s == "missing-verdict") return ParseErrorKind::MissingVerdict;
    if (s == "missing-score") return ParseErrorKind::MissingScore;
    if (s == "malformed-score") return ParseErrorKind::MalformedScore;
    if (s == "out-of-range") return ParseErrorKind::OutOfRange;
    if (s == "ambiguous-duplicate") return ParseErrorKind::AmbiguousDuplicate;
    if (s == "missing-think") return ParseErrorKind::MissingThink;
    return std::nullopt;
}

int count_tokens(std::string_view text) {
    int count = 0;
    bool in_token = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++count;
        }
    }
    return count;
}

int ParsedJudgment::think_tokens() const { return think ? count_tokens(*think) : 0; }

ParsedJudgment parse(std::string_view completion, const Formulation& formulation,
                     Orientation orientation, Strictness strictness) {
    if (formulation.pairwise() != is_pairwise(orientation)) {
        throw std::invalid_argument("formulation/orientation mismatch: " +
                                    std::string(to_string(formulation.kind)) + " with " +
                                    std::string(to_string(orientation)));
    }

    ParsedJudgment j;
    j.formulation = formulation;

    // Thought block. The answer region starts after the LAST close tag so
    // verdict-like text inside the reasoning is never read as the answer.
    const std::size_t think_open = completion.find(kThinkOpen);
    const std::size_t think_close = completion.rfind(kThinkClose);
    const bool think_well_formed = think_open != std::string_view::npos &&
                                   think_close != std::string_view::npos &&
                                   think_open + kThinkOpen.size() <= think_close;
    if (think_well_formed) {
        j.think = std::string(
            completion.substr(think_open + kThinkOpen.size(),
                              think_close - think_open - kThinkOpen.size()));
    }
    const std::string_view answer_region = think_close != std::string_view::npos
                                               ? completion.substr(think_close + kThinkClose.size())
                                               : completion;

    switch (formulation.kind) {
        case FormulationKind::PaV:
        case FormulationKind::PaVS: {
            const auto marks = answer_markers(answer_region);
            if (marks.empty()) {
                fail(j, ParseErrorKind::MissingVerdict);
            } else {
                const bool has_a = std::any_of(marks.begin(), marks.end(),
                                               [](auto& m) { return m.slot == Slot::First; });
                const bool has_b = std::any_of(marks.begin(), marks.end(),
                                               [](auto& m) { return m.slot == Slot::Second; });
                if (has_a && has_b && strictness == Strictness::Strict) {
                    fail(j, ParseErrorKind::AmbiguousDuplicate);
                } else {
                    const Slot slot = marks.front().slot;
                    j.verdict = Verdict{canonical_winner(slot, orientation), slot};
                }
            }
            if (formulation.kind == FormulationKind::PaVS) {
                // Scores are observations only; kept for reporting, never
                // required and never a parse failure.
                std::optional<Score> first_slot, second_slot;
                parse_score_tag(answer_region, "<score_A>", "</score_A>", strictness, first_slot);
                parse_score_tag(answer_region, "<score_B>", "</score_B>", strictness, second_slot);
                const bool swapped = orientation == Orientation::BA;
                j.score_a = swapped ? second_slot : first_slot;
                j.score_b = swapped ? first_slot : second_slot;
            }
            break;
        }
        case FormulationKind::PaS: {
            std::optional<Score> first_slot, second_slot;
            const ScoreParse pa =
                parse_score_tag(answer_region, "<score_A>", "</score_A>", strictness, first_slot);
            const ScoreParse pb =
                parse_score_tag(answer_region, "<score_B>", "</score_B>", strictness, second_slot);
            if (pa != ScoreParse::Ok) {
                fail(j, to_error_kind(pa));
            } else if (pb != ScoreParse::Ok) {
                fail(j, to_error_kind(pb));
            } else {
                const bool swapped = orientation == Orientation::BA;
                j.score_a = swapped ? second_slot : first_slot;
                j.score_b = swapped ? first_slot : second_slot;
            }
            break;
        }
        case FormulationKind::PoS: {
            std::optional<Score> score;
            const ScoreParse p =
                parse_score_tag(answer_region, "<score>", "</score>", strictness, score);
            if (p != ScoreParse::Ok) {
                fail(j, to_error_kind(p));
            } else {
                j.score = score;
            }
            break;
        }
    }

    if (j.ok() && strictness == Strictness::Strict && !think_well_formed) {
        fail(j, ParseErrorKind::MissingThink);
    }
    return j;
}

ThoughtStats thought_stats_from_counts(std::span<const int> token_counts) {
    ThoughtStats stats;
    stats.count = token_counts.size();
    if (token_counts.empty()) return stats;

    std::vector<int> sorted(token_counts.begin(), token_counts.end());
    std::sort(sorted.begin(), sorted.end());

    double sum = 0.0;
    for (int len : sorted) sum += len;
    stats.mean_len = sum / static_cast<double>(sorted.size());

    const std::size_t mid = sorted.size() / 2;
    stats.median_len = (sorted.size() % 2 == 1)
                           ? static_cast<double>(sorted[mid])
                           : (static_cast<double>(sorted[mid - 1]) + sorted[mid]) / 2.0;

    const std::size_t max_bucket = static_cast<std::size_t>(sorted.back()) / 50;
    stats.histogram.assign(max_bucket + 1, 0);
    for (int len : sorted) ++stats.histogram[static_cast<std::size_t>(len) / 50];
    return stats;
}

ThoughtStats thought_stats(std::span<const ParsedJudgment> judgments) {
    std::vector<int> counts;
    counts.reserve(judgments.size());
    for (const auto& j : judgments) counts.push_back(j.think_tokens());
    return thought_stats_from_counts(counts);
}

}  // namespace judgekit::parser
