#include "hsdef/taxonomy.hpp"

#include "test_support.hpp"

#include <json.hpp>

#include <gtest/gtest.h>

#include <algorithm>

using namespace hsdef;
using testing_support::read_file;
using testing_support::source_dir;

namespace {

std::vector<DefinitionSpec> all_presets() {
    auto specs = enumerate_step1();
    for (auto& s : enumerate_step2(resolve_preset("HSB"))) specs.push_back(std::move(s));
    return specs;
}

std::filesystem::path golden_path(const DefinitionSpec& spec) {
    const bool step2 = spec.name.starts_with('+');
    return source_dir() / "data" / "golden" / (step2 ? "step2_HSB" : "step1") / (spec.name + ".txt");
}

bool is_subsequence(const std::string& small, const std::string& big) {
    std::size_t i = 0;
    for (char c : big) {
        if (i < small.size() && small[i] == c) ++i;
    }
    return i == small.size();
}

// Dependency rules restated independently of the library.
bool oracle_valid(const std::vector<std::string>& names) {
    auto has = [&](const char* n) { return std::find(names.begin(), names.end(), n) != names.end(); };
    if (names.empty()) return false;
    for (const char* bad : {"sPI", "iPI", "Exa", "Law"}) {
        if (has(bad)) return false;
    }
    if (!has("FoC") || !has("T") || !has("PC")) return false;
    if (has("EDFoC") && !has("FoC")) return false;
    if (has("EDT") && !has("T")) return false;
    if (has("EDPC") && !has("PC")) return false;
    if (has("LAA") && !has("AA")) return false;
    for (const char* acc : {"PI", "Exc", "IHS"}) {
        if (has(acc) && !has("AA")) return false;
    }
    return true;
}

} // namespace

TEST(Taxonomy, FourteenSourceElementsInThreeLayers) {
    int source = 0;
    std::map<Layer, int> per_layer;
    for (auto e : kAllElements) {
        if (!is_source_element(e)) continue;
        ++source;
        ++per_layer[layer_of(e)];
    }
    EXPECT_EQ(source, 14);
    EXPECT_EQ(per_layer[Layer::Foundational], 4);
    EXPECT_EQ(per_layer[Layer::ExtensiveDefinition], 4);
    EXPECT_EQ(per_layer[Layer::Accessory], 6);
    EXPECT_FALSE(is_source_element(Element::PI));
    EXPECT_TRUE(is_renderable(Element::PI));
}

TEST(Taxonomy, ElementNamesRoundTrip) {
    for (auto e : kAllElements) EXPECT_EQ(parse_element(to_string(e)), e);
    EXPECT_FALSE(parse_element("foc"));
    EXPECT_THROW(ElementSet::parse_list("FoC,Bogus"), TaxonomyError);
    EXPECT_EQ(ElementSet::parse_list(" PC, FoC ,T").str(), "FoC,T,PC");
}

TEST(Taxonomy, ComposesGoldenFilesByteForByte) {
    const auto specs = all_presets();
    ASSERT_EQ(specs.size(), 17u);
    for (const auto& spec : specs) {
        const auto path = golden_path(spec);
        ASSERT_TRUE(std::filesystem::exists(path)) << path;
        EXPECT_EQ(compose(spec), read_file(path)) << spec.name;
    }
}

TEST(Taxonomy, OffensiveLanguageLacksAttributes) {
    const auto ol = compose(resolve_preset("OL"));
    const auto hsb = compose(resolve_preset("HSB"));
    EXPECT_EQ(ol.find("inherent characteristics"), std::string::npos);
    EXPECT_NE(hsb.find("inherent characteristics"), std::string::npos);
}

TEST(Taxonomy, SpanWordingIsStableAcrossPresets) {
    const auto& registry = SpanRegistry::builtin();
    for (const auto& spec : all_presets()) {
        const auto text = compose(spec);
        for (auto e : spec.elements.elements()) {
            EXPECT_NE(text.find(registry.span(e).text), std::string::npos) << spec.name << " lacks " << to_string(e);
        }
    }
}

TEST(Taxonomy, ComposeMatchesIndependentSkeletonExpansion) {
    const auto doc = nlohmann::json::parse(read_file(source_dir() / "data/taxonomy/spans.json"));
    const auto skeleton = doc.at("skeleton").get<std::string>();
    for (const auto& spec : all_presets()) {
        std::string expected = skeleton;
        for (auto e : kAllElements) {
            if (!is_renderable(e)) continue;
            const std::string anchor = "{" + std::string(to_string(e)) + "}";
            std::string replacement;
            if (spec.elements.contains(e)) {
                const auto& s = doc.at("spans").at(std::string(to_string(e)));
                replacement = s.value("lead", "") + s.at("text").get<std::string>() + s.value("trail", "");
            }
            expected.replace(expected.find(anchor), anchor.size(), replacement);
        }
        EXPECT_EQ(compose(spec), expected) << spec.name;
    }
}

TEST(Taxonomy, ValidationAgreesWithBruteForceOracle) {
    for (std::uint32_t mask = 0; mask < (1u << kElementCount); ++mask) {
        ElementSet set;
        std::vector<std::string> names;
        for (std::size_t i = 0; i < kElementCount; ++i) {
            if (mask & (1u << i)) {
                set.insert(kAllElements[i]);
                names.emplace_back(to_string(kAllElements[i]));
            }
        }
        ASSERT_EQ(validate_spec(set).valid(), oracle_valid(names)) << set.str();
    }
}

TEST(Taxonomy, AddingAnElementOnlyInsertsText) {
    std::vector<ElementSet> valid;
    for (std::uint32_t mask = 0; mask < (1u << kElementCount); ++mask) {
        ElementSet set;
        for (std::size_t i = 0; i < kElementCount; ++i) {
            if (mask & (1u << i)) set.insert(kAllElements[i]);
        }
        if (validate_spec(set).valid()) valid.push_back(set);
    }
    ASSERT_FALSE(valid.empty());
    for (const auto& set : valid) {
        const auto text = compose(DefinitionSpec::composed("x", set));
        for (auto e : kAllElements) {
            if (set.contains(e)) continue;
            auto bigger = set;
            bigger.insert(e);
            if (!validate_spec(bigger).valid()) continue;
            const auto grown = compose(DefinitionSpec::composed("y", bigger));
            ASSERT_GT(grown.size(), text.size());
            ASSERT_TRUE(is_subsequence(text, grown)) << set.str() << " + " << to_string(e);
        }
    }
}

TEST(Taxonomy, ReportsEachViolation) {
    auto result = validate_spec(ElementSet{Element::EDT});
    ASSERT_FALSE(result.valid());
    EXPECT_EQ(result.violations.front().kind, Violation::Kind::MissingDependency);
    EXPECT_EQ(result.violations.front().element, Element::EDT);
    EXPECT_EQ(result.violations.front().missing, ElementSet{Element::T});
    EXPECT_NE(result.message().find("MissingDependency(EDT, T)"), std::string::npos);

    EXPECT_EQ(validate_spec({}).violations.front().kind, Violation::Kind::EmptySpec);

    auto partial = validate_spec(ElementSet{Element::FoC, Element::T, Element::PC, Element::AA, Element::sPI});
    ASSERT_EQ(partial.violations.size(), 1u);
    EXPECT_EQ(partial.violations.front().kind, Violation::Kind::NonRenderable);

    auto no_pc = validate_spec(ElementSet{Element::FoC, Element::T});
    ASSERT_EQ(no_pc.violations.size(), 1u);
    EXPECT_EQ(no_pc.violations.front().kind, Violation::Kind::IncompleteFoundation);

    EXPECT_THROW(compose(DefinitionSpec::composed("bad", ElementSet{Element::EDT})), TaxonomyError);
}

TEST(Taxonomy, EnumeratesBothSteps) {
    const auto step1 = enumerate_step1();
    ASSERT_EQ(step1.size(), 9u);
    EXPECT_EQ(step1.front().name, "OL");
    EXPECT_EQ(step1.back().elements, (kHateSpeechBase | ElementSet{Element::EDFoC, Element::EDT, Element::EDPC}));
    for (const auto& s : step1) EXPECT_TRUE(validate_spec(s.elements).valid()) << s.name;

    const auto base = resolve_preset("HSB_EDT");
    const auto step2 = enumerate_step2(base);
    ASSERT_EQ(step2.size(), 8u);
    for (const auto& s : step2) {
        EXPECT_TRUE(s.elements.includes(base.elements));
        EXPECT_TRUE(s.elements.contains(Element::LAA));
        EXPECT_TRUE(validate_spec(s.elements).valid()) << s.name;
    }
}

TEST(Taxonomy, RejectsUnusableStep2Bases) {
    EXPECT_THROW(enumerate_step2(resolve_preset("OL")), TaxonomyError);
    EXPECT_THROW(enumerate_step2(DefinitionSpec::no_definition()), TaxonomyError);
    EXPECT_THROW(enumerate_step2(resolve_preset("+LAA")), TaxonomyError);
    EXPECT_THROW(enumerate_step2(DefinitionSpec::composed("bad", ElementSet{Element::T})), TaxonomyError);
}

TEST(Taxonomy, ResolvesPresetNames) {
    EXPECT_EQ(resolve_preset("NO").kind, DefinitionKind::NoDefinition);
    EXPECT_EQ(resolve_preset("Own").kind, DefinitionKind::Own);
    EXPECT_EQ(resolve_preset("+LAA_PI").elements, (kHateSpeechBase | ElementSet{Element::LAA, Element::PI}));

    const auto stacked = resolve_preset("HSB_EDT+LAA_IHS");
    EXPECT_EQ(stacked.name, "HSB_EDT+LAA_IHS");
    EXPECT_EQ(stacked.elements, (kHateSpeechBase | ElementSet{Element::EDT, Element::LAA, Element::IHS}));
    EXPECT_EQ(resolve_preset("+LAA", "HSB_EDPC").elements,
              (kHateSpeechBase | ElementSet{Element::EDPC, Element::LAA}));
    EXPECT_THROW(resolve_preset("HSB_LAA"), TaxonomyError);
    EXPECT_THROW(resolve_preset("+PI"), TaxonomyError);
}

TEST(Taxonomy, NonComposedSpecsDoNotCompose) {
    EXPECT_THROW(compose(DefinitionSpec::no_definition()), TaxonomyError);
    EXPECT_THROW(compose(DefinitionSpec::own()), TaxonomyError);
}

TEST(Taxonomy, RegistryRejectsBrokenSkeletons) {
    std::map<Element, Span> spans;
    for (auto e : kAllElements) {
        if (is_renderable(e)) spans[e] = Span{"", std::string(to_string(e)), ""};
    }
    EXPECT_THROW(SpanRegistry("{FoC} only", spans), TaxonomyError);

    std::string skeleton;
    for (auto e : kAllElements) {
        if (is_renderable(e)) skeleton += "{" + std::string(to_string(e)) + "}";
    }
    EXPECT_NO_THROW(SpanRegistry(skeleton, spans));
    auto extra = spans;
    extra[Element::Exa] = Span{"", "x", ""};
    EXPECT_THROW(SpanRegistry(skeleton, extra), TaxonomyError);
    EXPECT_THROW(SpanRegistry(skeleton + "{FoC}", spans), TaxonomyError);
}

TEST(Taxonomy, OwnDefinitionsCoverTheThreeDatasets) {
    const auto& own = OwnDefinitions::builtin();
    for (const char* key : {"hatecheck", "lftw", "mhs"}) {
        auto text = own.find(key);
        ASSERT_TRUE(text) << key;
        EXPECT_FALSE(text->empty());
    }
    EXPECT_FALSE(own.find("unknown"));
}
