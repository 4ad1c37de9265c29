#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

/// Core domain types shared by every other module: preference examples,
/// judge formulations, presentation scheduling, verdict/score value types,
/// and the JSONL dataset loader.
namespace judgekit {

/// One of the two responses of a preference pair, in the original
/// (dataset) labeling.
enum class Choice { A, B };

constexpr Choice opposite(Choice c) { return c == Choice::A ? Choice::B : Choice::A; }

std::string_view to_string(Choice c);
std::optional<Choice> choice_from_string(std::string_view s);

enum class Source { SyntheticOpenended, SyntheticMath, Benchmark };

std::string_view to_string(Source s);
std::optional<Source> source_from_string(std::string_view s);

/// An instruction with two candidate responses and a gold chosen side.
/// The unit of all pairwise supervision.
struct PreferenceExample {
    std::string id;
    std::string instruction;
    std::string response_a;
    std::string response_b;
    Choice gold = Choice::A;
    std::optional<std::string> category;
    Source source = Source::Benchmark;

    const std::string& response(Choice side) const {
        return side == Choice::A ? response_a : response_b;
    }
    const std::string& chosen() const { return response(gold); }
    const std::string& rejected() const { return response(opposite(gold)); }

    /// Throws std::invalid_argument when id/instruction/responses are empty.
    void validate() const;
};

enum class FormulationKind { PaV, PaS, PaVS, PoS };
enum class PromptStyle { Thinking, PlanExecute };

std::string_view to_string(FormulationKind k);
std::optional<FormulationKind> formulation_kind_from_string(std::string_view s);
std::string_view to_string(PromptStyle s);
std::optional<PromptStyle> prompt_style_from_string(std::string_view s);

/// Judge task formulation: what the prompt asks for and what the completion
/// must carry. PlanExecute is only defined for PaV.
struct Formulation {
    FormulationKind kind = FormulationKind::PaV;
    PromptStyle prompt_style = PromptStyle::Thinking;

    bool pairwise() const { return kind != FormulationKind::PoS; }

    static Formulation make(FormulationKind kind, PromptStyle style = PromptStyle::Thinking);
};

/// How one prompt instance presents the example: pairwise in AB or BA order,
/// or pointwise showing just one side.
enum class Orientation { AB, BA, PointwiseA, PointwiseB };

std::string_view to_string(Orientation o);
std::optional<Orientation> orientation_from_string(std::string_view s);

constexpr bool is_pairwise(Orientation o) {
    return o == Orientation::AB || o == Orientation::BA;
}

Orientation sibling_orientation(Orientation o);

/// Position of a response in the rendered prompt (Assistant A slot = first).
enum class Slot { First, Second };

/// Maps a slot parsed out of a completion back to the original labeling.
Choice canonical_winner(Slot raw_slot, Orientation orientation);
Slot raw_slot_for(Choice winner, Orientation orientation);

/// A pairwise judgment, stored both as parsed (raw slot) and canonicalized
/// to the original example labels.
struct Verdict {
    Choice winner = Choice::A;
    Slot raw_slot = Slot::First;
};

/// A judge-assigned quality score: value in [0, 10] with at most one
/// fractional digit.
struct Score {
    double value = 0.0;

    static std::optional<Score> make(double v);

    friend bool operator==(const Score& a, const Score& b) { return a.value == b.value; }
};

struct SamplingParams {
    double temperature = 0.6;
    double top_p = 0.95;
    int max_tokens = 4096;
    int n = 1;
    std::optional<std::int64_t> seed;

    void validate() const;

    /// Rollout generation defaults: temperature 1.0, top-p 0.95, 4096 tokens,
    /// 5 samples per prompt.
    static SamplingParams training_rollouts();
    /// Single-sample evaluation defaults: temperature 0.6, top-p 0.95.
    static SamplingParams eval_single();
};

enum class SchedulingProtocol { BothOrder, RandomSingleOrder, PointwiseTwin };

std::string_view to_string(SchedulingProtocol p);
std::optional<SchedulingProtocol> protocol_from_string(std::string_view s);

/// One scheduled prompt instance for an example. Presentations produced
/// together by make_presentations are sibling-linked: the opposite order for
/// pairwise, the other side for pointwise twins.
struct Presentation {
    std::string example_id;
    Orientation orientation = Orientation::AB;
    std::string id;          // "<example_id>/<orientation>"
    std::string sibling_id;  // empty when scheduled without a sibling
};

std::string presentation_id(std::string_view example_id, Orientation o);

/// Expands an example into presentation instances. For RandomSingleOrder the
/// order is a pure function of (seed, example id).
std::vector<Presentation> make_presentations(const PreferenceExample& example,
                                             SchedulingProtocol protocol,
                                             std::uint64_t seed);

/// Stable 64-bit hash (FNV-1a with a 64-bit finalizer). Identical across
/// platforms and runs; used wherever reproducible pseudo-randomness is
/// derived from identifiers.
std::uint64_t stable_hash64(std::string_view bytes);
std::uint64_t stable_hash64(std::uint64_t seed, std::string_view bytes);

// ---------------------------------------------------------------------------
// Dataset loading
// ---------------------------------------------------------------------------

enum class DatasetSchema { Pairwise, Pointwise };

struct RecordError {
    std::size_t line = 0;  // 1-based
    std::string message;
};

/// Dataset-level failure: unreadable file or duplicate example id.
struct DatasetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LoadResult {
    std::vector<PreferenceExample> examples;
    std::vector<RecordError> rejects;
};

/// Loads a JSONL preference dataset. Malformed records are collected in
/// `rejects` with their line numbers; duplicate ids abort with DatasetError.
/// Pointwise runs consume the same pairwise records (twin presentations are
/// formed later), so both schema values accept the same record shape.
LoadResult load_dataset(const std::filesystem::path& path,
                        DatasetSchema schema = DatasetSchema::Pairwise);

}  // namespace judgekit
