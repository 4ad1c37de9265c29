#include "judgekit/prompts.hpp"

#include <algorithm>
#include <array>
#include <vector>

#include "judgekit/templates_data.hpp"

namespace judgekit::prompts {

namespace {

constexpr std::string_view kPlaceholderInstruction = "{instruction}";
constexpr std::string_view kPlaceholderResponseA = "{response A}";
constexpr std::string_view kPlaceholderResponseB = "{response B}";
constexpr std::string_view kPlaceholderResponse = "{response}";
constexpr std::string_view kPlaceholderBaseline = "{baseline response}";

std::vector<std::string_view> declared_placeholders(const PromptTemplate& tpl) {
    if (tpl.is_datagen) return {kPlaceholderInstruction, kPlaceholderBaseline};
    if (tpl.formulation.kind == FormulationKind::PoS)
        return {kPlaceholderInstruction, kPlaceholderResponse};
    return {kPlaceholderInstruction, kPlaceholderResponseA, kPlaceholderResponseB};
}

std::size_t count_occurrences(std::string_view body, std::string_view needle) {
    std::size_t count = 0;
    for (std::size_t pos = body.find(needle); pos != std::string_view::npos;
         pos = body.find(needle, pos + needle.size())) {
        ++count;
    }
    return count;
}

/// Substitutes each (placeholder, value) pair exactly once, building the
/// output from template segments so inserted text is never rescanned.
std::string substitute(std::string_view body,
                       std::span<const std::pair<std::string_view, std::string_view>> subs) {
    struct Hit {
        std::size_t pos;
        std::string_view placeholder;
        std::string_view value;
    };
    std::vector<Hit> hits;
    hits.reserve(subs.size());
    for (const auto& [ph, value] : subs) {
        const std::size_t pos = body.find(ph);
        if (pos == std::string_view::npos) {
            throw std::invalid_argument("template is missing placeholder " + std::string(ph));
        }
        hits.push_back({pos, ph, value});
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.pos < b.pos; });

    std::string out;
    out.reserve(body.size() + 1024);
    std::size_t cursor = 0;
    for (const Hit& hit : hits) {
        out.append(body.substr(cursor, hit.pos - cursor));
        out.append(hit.value);
        cursor = hit.pos + hit.placeholder.size();
    }
    out.append(body.substr(cursor));
    return out;
}

std::vector<PromptTemplate> build_templates() {
    std::vector<PromptTemplate> templates;
    templates.push_back({"pav-thinking", false,
                         Formulation{FormulationKind::PaV, PromptStyle::Thinking},
                         detail::kPavThinking});
    templates.push_back({"pav-plan-execute", false,
                         Formulation{FormulationKind::PaV, PromptStyle::PlanExecute},
                         detail::kPavPlanExecute});
    templates.push_back({"pas-thinking", false,
                         Formulation{FormulationKind::PaS, PromptStyle::Thinking},
                         detail::kPasThinking});
    templates.push_back({"pavs-thinking", false,
                         Formulation{FormulationKind::PaVS, PromptStyle::Thinking},
                         detail::kPavsThinking});
    templates.push_back({"pos-thinking", false,
                         Formulation{FormulationKind::PoS, PromptStyle::Thinking},
                         detail::kPosThinking});
    templates.push_back({"datagen", true, Formulation{}, detail::kDatagen});
    for (const auto& tpl : templates) tpl.validate();
    return templates;
}

const std::vector<PromptTemplate>& templates_store() {
    static const std::vector<PromptTemplate> store = build_templates();
    return store;
}

}  // namespace

void PromptTemplate::validate() const {
    const auto declared = declared_placeholders(*this);
    for (std::string_view ph : declared) {
        const std::size_t n = count_occurrences(body, ph);
        if (n != 1) {
            throw std::invalid_argument("template " + name + ": placeholder " + std::string(ph) +
                                        " must appear exactly once, found " + std::to_string(n));
        }
    }
    // Any other single-line {token} brace group is an undeclared placeholder.
    std::size_t open = body.find('{');
    while (open != std::string::npos) {
        const std::size_t close = body.find('}', open);
        if (close == std::string::npos) break;
        const std::string_view token = std::string_view(body).substr(open, close - open + 1);
        if (token.find('\n') == std::string_view::npos &&
            std::find(declared.begin(), declared.end(), token) == declared.end()) {
            throw std::invalid_argument("template " + name + ": undeclared placeholder " +
                                        std::string(token));
        }
        open = body.find('{', open + 1);
    }
}

std::span<const PromptTemplate> all_templates() { return templates_store(); }

const PromptTemplate& template_for(const Formulation& f) {
    for (const auto& tpl : templates_store()) {
        if (!tpl.is_datagen && tpl.formulation.kind == f.kind &&
            tpl.formulation.prompt_style == f.prompt_style) {
            return tpl;
        }
    }
    throw std::invalid_argument("no template for formulation " + std::string(to_string(f.kind)) +
                                "/" + std::string(to_string(f.prompt_style)));
}

const PromptTemplate& datagen_template() {
    for (const auto& tpl : templates_store()) {
        if (tpl.is_datagen) return tpl;
    }
    throw std::logic_error("datagen template missing");
}

std::string render_pairwise(const PromptTemplate& tpl, const PreferenceExample& example,
                            Orientation orientation) {
    if (tpl.is_datagen || !tpl.formulation.pairwise()) {
        throw std::invalid_argument("render_pairwise requires a pairwise template, got " + tpl.name);
    }
    if (!is_pairwise(orientation)) {
        throw std::invalid_argument("render_pairwise requires orientation AB or BA");
    }
    example.validate();
    const bool swapped = orientation == Orientation::BA;
    const std::pair<std::string_view, std::string_view> subs[] = {
        {kPlaceholderInstruction, example.instruction},
        {kPlaceholderResponseA, swapped ? example.response_b : example.response_a},
        {kPlaceholderResponseB, swapped ? example.response_a : example.response_b},
    };
    return substitute(tpl.body, subs);
}

std::string render_pointwise(const PromptTemplate& tpl, const PreferenceExample& example,
                             Choice side) {
    if (tpl.is_datagen || tpl.formulation.kind != FormulationKind::PoS) {
        throw std::invalid_argument("render_pointwise requires the PoS template, got " + tpl.name);
    }
    example.validate();
    const std::pair<std::string_view, std::string_view> subs[] = {
        {kPlaceholderInstruction, example.instruction},
        {kPlaceholderResponse, example.response(side)},
    };
    return substitute(tpl.body, subs);
}

std::string render_datagen(std::string_view instruction, std::string_view baseline_response) {
    if (instruction.empty()) throw std::invalid_argument("datagen instruction must be non-empty");
    if (baseline_response.empty())
        throw std::invalid_argument("datagen baseline response must be non-empty");
    const std::pair<std::string_view, std::string_view> subs[] = {
        {kPlaceholderInstruction, instruction},
        {kPlaceholderBaseline, baseline_response},
    };
    return substitute(datagen_template().body, subs);
}

std::string render_presentation(const Formulation& f, const PreferenceExample& example,
                                Orientation orientation) {
    const PromptTemplate& tpl = template_for(f);
    switch (orientation) {
        case Orientation::AB:
        case Orientation::BA:
            return render_pairwise(tpl, example, orientation);
        case Orientation::PointwiseA:
            return render_pointwise(tpl, example, Choice::A);
        case Orientation::PointwiseB:
            return render_pointwise(tpl, example, Choice::B);
    }
    throw std::invalid_argument("unknown orientation");
}

}  // namespace judgekit::prompts
