#include "judgekit/datagen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <regex>
#include <span>

namespace judgekit::datagen {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// Section headers as instructed by the generation prompt. Models echo the
// apostrophe either as U+2019 or as ASCII; both spellings are accepted.
constexpr std::string_view kHeaderModified = "User Question Modified";
constexpr std::string_view kHeaderAnswerStart[] = {
    "The start of Assistant’s answer to the modified instruction",
    "The start of Assistant's answer to the modified instruction",
};
constexpr std::string_view kHeaderAnswerEnd[] = {
    "The end of Assistant’s answer to the modified instruction",
    "The end of Assistant's answer to the modified instruction",
};

struct HeaderHit {
    std::size_t begin = std::string_view::npos;
    std::size_t end = std::string_view::npos;
    bool found() const { return begin != std::string_view::npos; }
};

HeaderHit find_header(std::string_view text, std::span<const std::string_view> variants,
                      std::size_t from) {
    HeaderHit best;
    for (std::string_view v : variants) {
        const std::size_t pos = text.find(v, from);
        if (pos != std::string_view::npos && pos < best.begin) {
            best.begin = pos;
            best.end = pos + v.size();
        }
    }
    return best;
}

bool set_error(std::string* error, std::string_view message) {
    if (error) *error = std::string(message);
    return false;
}

}  // namespace

void DatagenRecord::validate() const {
    if (original_instruction.empty())
        throw std::invalid_argument("datagen record: original_instruction must be non-empty");
    if (baseline_response.empty())
        throw std::invalid_argument("datagen record: baseline_response must be non-empty");
    if (modified_instruction.empty())
        throw std::invalid_argument("datagen record: modified_instruction must be non-empty");
    if (modified_response.empty())
        throw std::invalid_argument("datagen record: modified_response must be non-empty");
    if (modified_instruction == original_instruction)
        throw std::invalid_argument("datagen record: modified instruction equals the original");
}

std::optional<DatagenSections> parse_datagen_completion(std::string_view completion,
                                                        std::string* error) {
    const std::size_t h1 = completion.find(kHeaderModified);
    if (h1 == std::string_view::npos) {
        set_error(error, "missing header: User Question Modified");
        return std::nullopt;
    }
    const std::size_t h1_end = h1 + kHeaderModified.size();

    const HeaderHit h2 = find_header(completion, kHeaderAnswerStart, h1_end);
    if (!h2.found()) {
        set_error(error, "missing header: The start of Assistant's answer to the modified instruction");
        return std::nullopt;
    }
    const HeaderHit h3 = find_header(completion, kHeaderAnswerEnd, h2.end);
    if (!h3.found()) {
        set_error(error, "missing header: The end of Assistant's answer to the modified instruction");
        return std::nullopt;
    }

    DatagenSections sections;
    sections.modified_instruction = std::string(trim(completion.substr(h1_end, h2.begin - h1_end)));
    sections.modified_response = std::string(trim(completion.substr(h2.end, h3.begin - h2.end)));
    if (sections.modified_instruction.empty()) {
        set_error(error, "empty modified-instruction section");
        return std::nullopt;
    }
    if (sections.modified_response.empty()) {
        set_error(error, "empty modified-response section");
        return std::nullopt;
    }
    return sections;
}

PreferenceExample make_openended_pair(const DatagenRecord& record, std::string_view id) {
    record.validate();
    if (id.empty()) throw std::invalid_argument("make_openended_pair: id must be non-empty");

    const bool chosen_in_slot_a = (stable_hash64(id) & 1u) == 0;
    PreferenceExample ex;
    ex.id = std::string(id);
    ex.instruction = record.original_instruction;
    if (chosen_in_slot_a) {
        ex.response_a = record.baseline_response;
        ex.response_b = record.modified_response;
        ex.gold = Choice::A;
    } else {
        ex.response_a = record.modified_response;
        ex.response_b = record.baseline_response;
        ex.gold = Choice::B;
    }
    ex.source = Source::SyntheticOpenended;
    ex.validate();
    return ex;
}

namespace {

/// Argument of the last balanced \boxed{...} group, if any.
std::optional<std::string_view> last_boxed_argument(std::string_view text) {
    constexpr std::string_view kBoxed = "\\boxed{";
    std::size_t pos = text.rfind(kBoxed);
    while (pos != std::string_view::npos) {
        const std::size_t body = pos + kBoxed.size();
        int depth = 1;
        for (std::size_t i = body; i < text.size(); ++i) {
            if (text[i] == '{') ++depth;
            else if (text[i] == '}' && --depth == 0) return text.substr(body, i - body);
        }
        // Unbalanced; try an earlier occurrence.
        pos = pos == 0 ? std::string_view::npos : text.rfind(kBoxed, pos - 1);
    }
    return std::nullopt;
}

std::optional<std::string> last_number_token(const std::string& text) {
    static const std::regex kNumber(
        R"([-+]?(?:\d[\d,]*(?:\.\d+)?|\.\d+)(?:\s*/\s*\d+)?(?:[eE][-+]?\d+)?)");
    std::optional<std::string> last;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), kNumber);
         it != std::sregex_iterator(); ++it) {
        last = it->str();
    }
    return last;
}

std::string normalize_answer(std::string_view raw) {
    std::string_view s = trim(raw);
    if (s.size() >= 2 && s.front() == '$' && s.back() == '$') s = trim(s.substr(1, s.size() - 2));
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        // Thousands separators: a comma flanked by digits.
        if (c == ',' && i > 0 && i + 1 < s.size() &&
            std::isdigit(static_cast<unsigned char>(s[i - 1])) &&
            std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
            continue;
        }
        out.push_back(c);
    }
    while (!out.empty() && out.back() == '.') out.pop_back();
    return out;
}

struct Rational {
    long long num = 0;
    long long den = 1;
};

/// Parses integers, a/b fractions, and plain decimals into an exact
/// rational. Anything else (exponents, symbols) falls through to the
/// floating comparison.
std::optional<Rational> parse_rational(const std::string& s) {
    if (s.empty()) return std::nullopt;
    std::size_t i = 0;
    long long sign = 1;
    if (s[i] == '+' || s[i] == '-') {
        if (s[i] == '-') sign = -1;
        ++i;
    }
    long long ipart = 0;
    bool any_digit = false;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
        if (ipart > (std::numeric_limits<long long>::max() - 9) / 10) return std::nullopt;
        ipart = ipart * 10 + (s[i] - '0');
        any_digit = true;
        ++i;
    }
    if (i == s.size()) {
        return any_digit ? std::optional<Rational>({sign * ipart, 1}) : std::nullopt;
    }
    if (s[i] == '/') {
        ++i;
        long long den = 0;
        bool den_digit = false;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
            if (den > (std::numeric_limits<long long>::max() - 9) / 10) return std::nullopt;
            den = den * 10 + (s[i] - '0');
            den_digit = true;
            ++i;
        }
        if (i != s.size() || !den_digit || den == 0 || !any_digit) return std::nullopt;
        return Rational{sign * ipart, den};
    }
    if (s[i] == '.') {
        ++i;
        long long num = ipart;
        long long den = 1;
        bool frac_digit = false;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
            if (num > (std::numeric_limits<long long>::max() - 9) / 10 ||
                den > std::numeric_limits<long long>::max() / 10) {
                return std::nullopt;
            }
            num = num * 10 + (s[i] - '0');
            den *= 10;
            frac_digit = true;
            ++i;
        }
        if (i != s.size() || (!frac_digit && !any_digit)) return std::nullopt;
        return Rational{sign * num, den};
    }
    return std::nullopt;
}

bool rational_equal(const Rational& a, const Rational& b) {
    return static_cast<__int128>(a.num) * b.den == static_cast<__int128>(b.num) * a.den;
}

std::optional<double> parse_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) return std::nullopt;
    return v;
}

}  // namespace

std::string extract_final_answer(std::string_view text) {
    if (auto boxed = last_boxed_argument(text)) return std::string(trim(*boxed));
    const std::string whole(text);
    if (auto number = last_number_token(whole)) return *number;
    return std::string(trim(text));
}

namespace {

/// Candidate answer readings in priority order: boxed argument, trailing
/// number, whole text. Comparing every pair of readings lets a bare
/// symbolic gold ("\frac{1}{2}") match its boxed form without loosening the
/// numeric paths.
std::vector<std::string> answer_variants(std::string_view text) {
    std::vector<std::string> variants;
    if (auto boxed = last_boxed_argument(text)) {
        variants.push_back(normalize_answer(*boxed));
    } else {
        const std::string whole(text);
        if (auto number = last_number_token(whole)) variants.push_back(normalize_answer(*number));
    }
    std::string whole = normalize_answer(text);
    if (std::find(variants.begin(), variants.end(), whole) == variants.end() && !whole.empty()) {
        variants.push_back(std::move(whole));
    }
    variants.erase(std::remove(variants.begin(), variants.end(), std::string()), variants.end());
    return variants;
}

bool variants_match(const std::string& a, const std::string& b) {
    if (a == b) return true;
    const auto rat_a = parse_rational(a);
    const auto rat_b = parse_rational(b);
    if (rat_a && rat_b) return rational_equal(*rat_a, *rat_b);
    const auto dbl_a = parse_double(a);
    const auto dbl_b = parse_double(b);
    if (dbl_a && dbl_b) return std::abs(*dbl_a - *dbl_b) <= 1e-9;
    return false;
}

}  // namespace

bool answers_equivalent(std::string_view candidate, std::string_view gold) {
    const auto candidate_variants = answer_variants(candidate);
    const auto gold_variants = answer_variants(gold);
    for (const auto& c : candidate_variants) {
        for (const auto& g : gold_variants) {
            if (variants_match(c, g)) return true;
        }
    }
    return false;
}

std::string_view to_string(MathSkipReason r) {
    return r == MathSkipReason::NoChosen ? "no-chosen" : "no-rejected";
}

MathPairs make_math_pairs(const MathSeed& seed, std::string_view id_prefix,
                          int max_pairs_per_seed) {
    if (seed.gold_answer.empty())
        throw std::invalid_argument("math seed: gold_answer must be non-empty");
    if (seed.problem.empty()) throw std::invalid_argument("math seed: problem must be non-empty");
    if (max_pairs_per_seed < 1)
        throw std::invalid_argument("max_pairs_per_seed must be positive");

    const std::string* chosen = nullptr;
    std::vector<const std::string*> wrong;
    for (const auto& candidate : seed.candidate_responses) {
        if (candidate.empty()) continue;
        if (answers_equivalent(candidate, seed.gold_answer)) {
            if (!chosen) chosen = &candidate;
        } else {
            wrong.push_back(&candidate);
        }
    }

    MathPairs out;
    if (!chosen) {
        out.skipped = MathSkipReason::NoChosen;
        return out;
    }
    if (wrong.empty()) {
        out.skipped = MathSkipReason::NoRejected;
        return out;
    }

    const std::size_t limit = std::min<std::size_t>(wrong.size(), max_pairs_per_seed);
    for (std::size_t k = 0; k < limit; ++k) {
        std::string id(id_prefix);
        id += '-';
        id += std::to_string(k);
        const bool chosen_in_slot_a = (stable_hash64(id) & 1u) == 0;
        PreferenceExample ex;
        ex.id = std::move(id);
        ex.instruction = seed.problem;
        ex.response_a = chosen_in_slot_a ? *chosen : *wrong[k];
        ex.response_b = chosen_in_slot_a ? *wrong[k] : *chosen;
        ex.gold = chosen_in_slot_a ? Choice::A : Choice::B;
        ex.source = Source::SyntheticMath;
        ex.validate();
        out.examples.push_back(std::move(ex));
    }
    return out;
}

}  // namespace judgekit::datagen
