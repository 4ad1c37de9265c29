#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "judgekit/core.hpp"

/// Synthetic preference-pair construction: noisy-instruction pairs for
/// open-ended prompts and wrong-answer mining for math prompts.
namespace judgekit::datagen {

/// One generated noisy-instruction record. The baseline response answers the
/// original instruction (chosen); the modified response answers the noisy
/// instruction and is rejected against the original.
struct DatagenRecord {
    std::string original_instruction;
    std::string baseline_response;
    std::string modified_instruction;
    std::string modified_response;
    std::string provenance;  // generator model id + params

    void validate() const;
};

struct DatagenSections {
    std::string modified_instruction;
    std::string modified_response;
};

/// Extracts the modified instruction and its response from a completion that
/// follows the generation prompt's section format. Both the typographic and
/// ASCII apostrophe spellings of the section headers are accepted. Missing
/// or out-of-order headers and empty sections yield nullopt with a message
/// in *error.
std::optional<DatagenSections> parse_datagen_completion(std::string_view completion,
                                                        std::string* error = nullptr);

/// Builds a preference example from a record. The chosen response's slot is
/// a deterministic per-id coin so stored datasets never encode gold by
/// position.
PreferenceExample make_openended_pair(const DatagenRecord& record, std::string_view id);

/// Answer equivalence for math mining: compares the last \boxed{...}
/// argument when present, else the trailing number; by normalized string
/// equality, then exact rational arithmetic, then decimal comparison with
/// tolerance 1e-9. Deliberately conservative - unparseable answers are never
/// equivalent.
bool answers_equivalent(std::string_view candidate, std::string_view gold);

/// The final answer substring compared by answers_equivalent.
std::string extract_final_answer(std::string_view text);

struct MathSeed {
    std::string problem;
    std::string gold_answer;  // normalized gold, e.g. "105"
    std::vector<std::string> candidate_responses;
};

enum class MathSkipReason { NoChosen, NoRejected };

std::string_view to_string(MathSkipReason r);

struct MathPairs {
    std::vector<PreferenceExample> examples;
    std::optional<MathSkipReason> skipped;
};

/// Pairs the first gold-equivalent candidate with each non-equivalent
/// candidate (up to max_pairs_per_seed). Seeds without a correct candidate
/// or without a wrong candidate are skipped with the reason recorded.
MathPairs make_math_pairs(const MathSeed& seed, std::string_view id_prefix,
                          int max_pairs_per_seed);

}  // namespace judgekit::datagen
