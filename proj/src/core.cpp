#include "judgekit/core.hpp"

#include <cmath>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

namespace judgekit {

using json = nlohmann::json;

std::string_view to_string(Choice c) { return c == Choice::A ? "A" : "B"; }

std::optional<Choice> choice_from_string(std::string_view s) {
    if (s == "A") return Choice::A;
    if (s == "B") return Choice::B;
    return std::nullopt;
}

std::string_view to_string(Source s) {
    switch (s) {
        case Source::SyntheticOpenended: return "synthetic-openended";
        case Source::SyntheticMath: return "synthetic-math";
        case Source::Benchmark: return "benchmark";
    }
    return "benchmark";
}

std::optional<Source> source_from_string(std::string_view s) {
    if (s == "synthetic-openended") return Source::SyntheticOpenended;
    if (s == "synthetic-math") return Source::SyntheticMath;
    if (s == "benchmark") return Source::Benchmark;
    return std::nullopt;
}

void PreferenceExample::validate() const {
    if (id.empty()) throw std::invalid_argument("example id must be non-empty");
    if (instruction.empty())
        throw std::invalid_argument("example " + id + ": instruction must be non-empty");
    if (response_a.empty())
        throw std::invalid_argument("example " + id + ": response_a must be non-empty");
    if (response_b.empty())
        throw std::invalid_argument("example " + id + ": response_b must be non-empty");
}

std::string_view to_string(FormulationKind k) {
    switch (k) {
        case FormulationKind::PaV: return "PaV";
        case FormulationKind::PaS: return "PaS";
        case FormulationKind::PaVS: return "PaVS";
        case FormulationKind::PoS: return "PoS";
    }
    return "PaV";
}

std::optional<FormulationKind> formulation_kind_from_string(std::string_view s) {
    if (s == "PaV") return FormulationKind::PaV;
    if (s == "PaS") return FormulationKind::PaS;
    if (s == "PaVS") return FormulationKind::PaVS;
    if (s == "PoS") return FormulationKind::PoS;
    return std::nullopt;
}

std::string_view to_string(PromptStyle s) {
    return s == PromptStyle::Thinking ? "thinking" : "plan-execute";
}

std::optional<PromptStyle> prompt_style_from_string(std::string_view s) {
    if (s == "thinking") return PromptStyle::Thinking;
    if (s == "plan-execute") return PromptStyle::PlanExecute;
    return std::nullopt;
}

Formulation Formulation::make(FormulationKind kind, PromptStyle style) {
    if (style == PromptStyle::PlanExecute && kind != FormulationKind::PaV) {
        throw std::invalid_argument("plan-execute prompt style is only defined for PaV");
    }
    return Formulation{kind, style};
}

std::string_view to_string(Orientation o) {
    switch (o) {
        case Orientation::AB: return "AB";
        case Orientation::BA: return "BA";
        case Orientation::PointwiseA: return "pointwise-A";
        case Orientation::PointwiseB: return "pointwise-B";
    }
    return "AB";
}

std::optional<Orientation> orientation_from_string(std::string_view s) {
    if (s == "AB") return Orientation::AB;
    if (s == "BA") return Orientation::BA;
    if (s == "pointwise-A") return Orientation::PointwiseA;
    if (s == "pointwise-B") return Orientation::PointwiseB;
    return std::nullopt;
}

Orientation sibling_orientation(Orientation o) {
    switch (o) {
        case Orientation::AB: return Orientation::BA;
        case Orientation::BA: return Orientation::AB;
        case Orientation::PointwiseA: return Orientation::PointwiseB;
        case Orientation::PointwiseB: return Orientation::PointwiseA;
    }
    return Orientation::BA;
}

Choice canonical_winner(Slot raw_slot, Orientation orientation) {
    switch (orientation) {
        case Orientation::AB:
            return raw_slot == Slot::First ? Choice::A : Choice::B;
        case Orientation::BA:
            return raw_slot == Slot::First ? Choice::B : Choice::A;
        case Orientation::PointwiseA:
            return Choice::A;
        case Orientation::PointwiseB:
            return Choice::B;
    }
    return Choice::A;
}

Slot raw_slot_for(Choice winner, Orientation orientation) {
    if (!is_pairwise(orientation)) {
        throw std::invalid_argument("raw_slot_for is only defined for pairwise orientations");
    }
    const bool first = (orientation == Orientation::AB) == (winner == Choice::A);
    return first ? Slot::First : Slot::Second;
}

std::optional<Score> Score::make(double v) {
    if (!std::isfinite(v) || v < 0.0 || v > 10.0) return std::nullopt;
    const double tenths = v * 10.0;
    const double snapped = std::round(tenths);
    if (std::abs(tenths - snapped) > 1e-6) return std::nullopt;
    return Score{snapped / 10.0};
}

void SamplingParams::validate() const {
    if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw std::invalid_argument("top_p must be in (0, 1]");
    if (max_tokens < 1) throw std::invalid_argument("max_tokens must be positive");
    if (n < 1) throw std::invalid_argument("n must be positive");
}

SamplingParams SamplingParams::training_rollouts() {
    return SamplingParams{1.0, 0.95, 4096, 5, std::nullopt};
}

SamplingParams SamplingParams::eval_single() {
    return SamplingParams{0.6, 0.95, 4096, 1, std::nullopt};
}

std::string_view to_string(SchedulingProtocol p) {
    switch (p) {
        case SchedulingProtocol::BothOrder: return "both-order";
        case SchedulingProtocol::RandomSingleOrder: return "random-single-order";
        case SchedulingProtocol::PointwiseTwin: return "pointwise-twin";
    }
    return "both-order";
}

std::optional<SchedulingProtocol> protocol_from_string(std::string_view s) {
    if (s == "both-order") return SchedulingProtocol::BothOrder;
    if (s == "random-single-order") return SchedulingProtocol::RandomSingleOrder;
    if (s == "pointwise-twin") return SchedulingProtocol::PointwiseTwin;
    return std::nullopt;
}

std::string presentation_id(std::string_view example_id, Orientation o) {
    std::string out(example_id);
    out += '/';
    out += to_string(o);
    return out;
}

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(std::uint64_t h, std::string_view bytes) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

// 64-bit finalizer; FNV's low bits alone are too regular for coin flips on
// short, similar ids.
std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ULL;
    x ^= x >> 33;
    return x;
}

}  // namespace

std::uint64_t stable_hash64(std::string_view bytes) {
    return mix64(fnv1a(kFnvOffset, bytes));
}

std::uint64_t stable_hash64(std::uint64_t seed, std::string_view bytes) {
    std::uint64_t h = kFnvOffset;
    for (int i = 0; i < 8; ++i) {
        h ^= static_cast<unsigned char>(seed >> (8 * i));
        h *= kFnvPrime;
    }
    return mix64(fnv1a(h, bytes));
}

std::vector<Presentation> make_presentations(const PreferenceExample& example,
                                             SchedulingProtocol protocol,
                                             std::uint64_t seed) {
    example.validate();
    const std::string& id = example.id;

    auto make = [&](Orientation o, Orientation sib) {
        return Presentation{id, o, presentation_id(id, o), presentation_id(id, sib)};
    };

    switch (protocol) {
        case SchedulingProtocol::BothOrder:
            return {make(Orientation::AB, Orientation::BA),
                    make(Orientation::BA, Orientation::AB)};
        case SchedulingProtocol::PointwiseTwin:
            return {make(Orientation::PointwiseA, Orientation::PointwiseB),
                    make(Orientation::PointwiseB, Orientation::PointwiseA)};
        case SchedulingProtocol::RandomSingleOrder: {
            const Orientation o =
                (stable_hash64(seed, id) & 1u) ? Orientation::BA : Orientation::AB;
            return {Presentation{id, o, presentation_id(id, o), ""}};
        }
    }
    return {};
}

namespace {

std::optional<std::string> required_string(const json& record, const char* key,
                                           std::string& error) {
    auto it = record.find(key);
    if (it == record.end() || !it->is_string() || it->get_ref<const std::string&>().empty()) {
        error = std::string("missing or empty string field \"") + key + "\"";
        return std::nullopt;
    }
    return it->get<std::string>();
}

}  // namespace

LoadResult load_dataset(const std::filesystem::path& path, DatasetSchema /*schema*/) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError("cannot open dataset file: " + path.string());

    LoadResult result;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;

        json record = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (record.is_discarded() || !record.is_object()) {
            result.rejects.push_back({line_no, "invalid JSON object"});
            continue;
        }

        std::string error;
        PreferenceExample ex;
        bool ok = true;
        if (auto v = required_string(record, "id", error)) ex.id = std::move(*v); else ok = false;
        if (ok) {
            if (auto v = required_string(record, "instruction", error)) ex.instruction = std::move(*v);
            else ok = false;
        }
        if (ok) {
            if (auto v = required_string(record, "response_a", error)) ex.response_a = std::move(*v);
            else ok = false;
        }
        if (ok) {
            if (auto v = required_string(record, "response_b", error)) ex.response_b = std::move(*v);
            else ok = false;
        }
        if (ok) {
            if (auto v = required_string(record, "gold", error)) {
                if (auto g = choice_from_string(*v)) {
                    ex.gold = *g;
                } else {
                    error = "field \"gold\" must be \"A\" or \"B\"";
                    ok = false;
                }
            } else {
                ok = false;
            }
        }
        if (ok && record.contains("category")) {
            if (!record["category"].is_string()) {
                error = "field \"category\" must be a string";
                ok = false;
            } else {
                ex.category = record["category"].get<std::string>();
            }
        }
        if (ok && record.contains("source")) {
            if (auto s = record["source"].is_string()
                             ? source_from_string(record["source"].get_ref<const std::string&>())
                             : std::nullopt) {
                ex.source = *s;
            } else {
                error = "field \"source\" must be one of synthetic-openended, synthetic-math, benchmark";
                ok = false;
            }
        }

        if (!ok) {
            result.rejects.push_back({line_no, error});
            continue;
        }
        if (!seen_ids.insert(ex.id).second) {
            throw DatasetError("duplicate example id \"" + ex.id + "\" at line " +
                               std::to_string(line_no));
        }
        result.examples.push_back(std::move(ex));
    }
    return result;
}

}  // namespace judgekit
