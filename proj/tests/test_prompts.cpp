#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "judgekit/prompts.hpp"

using namespace judgekit;
using namespace judgekit::prompts;

namespace {

PreferenceExample sample_example() {
    PreferenceExample ex;
    ex.id = "e1";
    ex.instruction = "INSTRUCTION-TEXT";
    ex.response_a = "RESPONSE-A-TEXT";
    ex.response_b = "RESPONSE-B-TEXT";
    ex.gold = Choice::A;
    return ex;
}

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
    std::size_t count = 0;
    for (std::size_t pos = text.find(needle); pos != std::string::npos;
         pos = text.find(needle, pos + needle.size())) {
        ++count;
    }
    return count;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string content = buf.str();
    if (!content.empty() && content.back() == '\n') content.pop_back();
    return content;
}

std::string hex64(std::uint64_t v) {
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << v;
    return out.str();
}

}  // namespace

TEST_CASE("embedded templates match the shipped assets and manifest checksums") {
    const std::filesystem::path asset_dir =
        std::filesystem::path(JUDGEKIT_SOURCE_DIR) / "assets" / "templates";
    std::ifstream manifest_in(asset_dir / "manifest.json");
    REQUIRE(manifest_in);
    const auto manifest = nlohmann::json::parse(manifest_in);

    std::size_t matched = 0;
    for (const auto& entry : manifest["templates"]) {
        const std::string name = entry["name"];
        for (const auto& tpl : all_templates()) {
            if (tpl.name != name) continue;
            ++matched;
            const std::string file_body = read_file(asset_dir / entry["file"].get<std::string>());
            CHECK(tpl.body == file_body);
            CHECK(hex64(tpl.checksum()) == entry["fnv1a64"].get<std::string>());
        }
    }
    CHECK(matched == all_templates().size());
    CHECK(matched == 6);
}

TEST_CASE("every template passes placeholder validation") {
    for (const auto& tpl : all_templates()) {
        CHECK_NOTHROW(tpl.validate());
    }
    PromptTemplate broken{"broken", false, Formulation{}, "no placeholders at all"};
    CHECK_THROWS_AS(broken.validate(), std::invalid_argument);
    PromptTemplate duplicated{"dup", false, Formulation{},
                              "{instruction} {response A} {response B} {response A}"};
    CHECK_THROWS_AS(duplicated.validate(), std::invalid_argument);
    PromptTemplate undeclared{"undeclared", false, Formulation{},
                              "{instruction} {response A} {response B} {mystery}"};
    CHECK_THROWS_AS(undeclared.validate(), std::invalid_argument);
}

TEST_CASE("pairwise rendering embeds responses per order") {
    const auto& tpl = template_for(Formulation{FormulationKind::PaV, PromptStyle::Thinking});
    const auto ex = sample_example();

    const std::string ab = render_pairwise(tpl, ex, Orientation::AB);
    CHECK(count_occurrences(ab, "[The Start of Assistant A's Answer]") == 1);
    CHECK(count_occurrences(ab, "[The Start of Assistant B's Answer]") == 1);
    const std::size_t a_slot = ab.find("[The Start of Assistant A's Answer]");
    CHECK(ab.find("RESPONSE-A-TEXT") > a_slot);
    CHECK(ab.find("RESPONSE-A-TEXT") < ab.find("RESPONSE-B-TEXT"));
    CHECK(ab.find("INSTRUCTION-TEXT") != std::string::npos);

    const std::string ba = render_pairwise(tpl, ex, Orientation::BA);
    CHECK(ba.find("RESPONSE-B-TEXT") < ba.find("RESPONSE-A-TEXT"));
}

TEST_CASE("AB and BA renders differ only in the response slots") {
    const auto& tpl = template_for(Formulation{FormulationKind::PaV, PromptStyle::Thinking});
    const auto ex = sample_example();
    std::string ab = render_pairwise(tpl, ex, Orientation::AB);
    std::string ba = render_pairwise(tpl, ex, Orientation::BA);
    // Swapping the two response payloads inside the BA render must
    // reconstruct the AB render exactly.
    const std::string marker_a = "RESPONSE-A-TEXT";
    const std::string marker_b = "RESPONSE-B-TEXT";
    const std::string tmp = "@@TMP@@";
    ba.replace(ba.find(marker_b), marker_b.size(), tmp);
    ba.replace(ba.find(marker_a), marker_a.size(), marker_b);
    ba.replace(ba.find(tmp), tmp.size(), marker_a);
    CHECK(ab == ba);
}

TEST_CASE("plan-execute template carries plan tags") {
    const auto& tpl = template_for(Formulation{FormulationKind::PaV, PromptStyle::PlanExecute});
    const std::string text = render_pairwise(tpl, sample_example(), Orientation::AB);
    CHECK(text.find("<plan> and </plan>") != std::string::npos);
    CHECK(text.find("<execution> and </execution>") != std::string::npos);
}

TEST_CASE("score templates carry their tag instructions") {
    const auto pas = render_pairwise(template_for(Formulation{FormulationKind::PaS}),
                                     sample_example(), Orientation::AB);
    CHECK(pas.find("<score_A>") != std::string::npos);
    CHECK(pas.find("<score_B>") != std::string::npos);

    const auto pos = render_pointwise(template_for(Formulation{FormulationKind::PoS}),
                                      sample_example(), Choice::A);
    CHECK(pos.find("<score> and </score>") != std::string::npos);
}

TEST_CASE("pointwise rendering substitutes the selected side only") {
    const auto& tpl = template_for(Formulation{FormulationKind::PoS});
    const auto ex = sample_example();
    const std::string a = render_pointwise(tpl, ex, Choice::A);
    CHECK(a.find("RESPONSE-A-TEXT") != std::string::npos);
    CHECK(a.find("RESPONSE-B-TEXT") == std::string::npos);
    const std::string b = render_pointwise(tpl, ex, Choice::B);
    CHECK(b.find("RESPONSE-B-TEXT") != std::string::npos);
    CHECK(b.find("RESPONSE-A-TEXT") == std::string::npos);
}

TEST_CASE("formulation mismatches are rejected") {
    const auto ex = sample_example();
    CHECK_THROWS_AS(render_pairwise(template_for(Formulation{FormulationKind::PoS}), ex,
                                    Orientation::AB),
                    std::invalid_argument);
    CHECK_THROWS_AS(render_pointwise(template_for(Formulation{FormulationKind::PaV}), ex,
                                     Choice::A),
                    std::invalid_argument);
}

TEST_CASE("datagen prompt embeds both inputs and keeps the section anchors") {
    const std::string text = render_datagen("ORIGINAL-Q", "BASELINE-R");
    const std::size_t q = text.find("ORIGINAL-Q");
    const std::size_t r = text.find("BASELINE-R");
    CHECK(q != std::string::npos);
    CHECK(r != std::string::npos);
    CHECK(q < r);
    CHECK(text.find("User Question Modified") != std::string::npos);
    CHECK(text.find("The start of Assistant’s answer to the modified instruction") !=
          std::string::npos);
    const std::string anchor = "The end of Assistant’s answer to the modified instruction";
    CHECK(text.rfind(anchor) == text.size() - anchor.size());

    CHECK_THROWS_AS(render_datagen("", "r"), std::invalid_argument);
    CHECK_THROWS_AS(render_datagen("q", ""), std::invalid_argument);
}

TEST_CASE("rendering is deterministic") {
    const auto& tpl = template_for(Formulation{FormulationKind::PaVS});
    const auto ex = sample_example();
    CHECK(render_pairwise(tpl, ex, Orientation::AB) == render_pairwise(tpl, ex, Orientation::AB));
    CHECK(render_datagen("q", "r") == render_datagen("q", "r"));
}
