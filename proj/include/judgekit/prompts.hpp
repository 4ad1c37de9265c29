#pragma once

#include <span>
#include <string>
#include <string_view>

#include "judgekit/core.hpp"

/// Deterministic rendering of the seed prompt templates: one template per
/// judge formulation plus the preference-pair generation prompt. Template
/// bodies are embedded at build time from assets/templates/ and checksummed
/// against assets/templates/manifest.json.
namespace judgekit::prompts {

struct PromptTemplate {
    std::string name;
    bool is_datagen = false;
    Formulation formulation;  // meaningful only when !is_datagen
    std::string body;

    std::uint64_t checksum() const { return stable_hash64(body); }

    /// Enforces the placeholder contract: each declared placeholder appears
    /// exactly once and no undeclared {token} placeholders exist.
    void validate() const;
};

std::span<const PromptTemplate> all_templates();
const PromptTemplate& template_for(const Formulation& f);
const PromptTemplate& datagen_template();

/// Renders a pairwise prompt. For Orientation::BA the example's responses are
/// swapped into the Assistant A / Assistant B slots.
std::string render_pairwise(const PromptTemplate& tpl, const PreferenceExample& example,
                            Orientation orientation);

/// Renders a pointwise prompt with the selected response in the single
/// {response} slot.
std::string render_pointwise(const PromptTemplate& tpl, const PreferenceExample& example,
                             Choice side);

/// Renders the preference-pair generation prompt.
std::string render_datagen(std::string_view instruction, std::string_view baseline_response);

/// Convenience: renders the appropriate prompt for a scheduled presentation.
std::string render_presentation(const Formulation& f, const PreferenceExample& example,
                                Orientation orientation);

}  // namespace judgekit::prompts
