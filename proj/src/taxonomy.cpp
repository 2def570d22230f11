#include "hsdef/taxonomy.hpp"

#include "hsdef/embedded.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace hsdef {

namespace {

struct ElementInfo {
    std::string_view name;
    Layer layer;
    bool source;
    bool renderable;
};

constexpr std::array<ElementInfo, kElementCount> kInfo{{
    {"FoC", Layer::Foundational, true, true},
    {"T", Layer::Foundational, true, true},
    {"PC", Layer::Foundational, true, true},
    {"AA", Layer::Foundational, true, true},
    {"EDFoC", Layer::ExtensiveDefinition, true, true},
    {"EDT", Layer::ExtensiveDefinition, true, true},
    {"EDPC", Layer::ExtensiveDefinition, true, true},
    {"LAA", Layer::ExtensiveDefinition, true, true},
    {"sPI", Layer::Accessory, true, false},
    {"iPI", Layer::Accessory, true, false},
    {"PI", Layer::Accessory, false, true},
    {"Exc", Layer::Accessory, true, true},
    {"IHS", Layer::Accessory, true, true},
    {"Exa", Layer::Accessory, true, false},
    {"Law", Layer::Accessory, true, false},
}};

const ElementInfo& info(Element e) { return kInfo[static_cast<std::size_t>(e)]; }

std::string anchor(Element e) { return "{" + std::string(to_string(e)) + "}"; }

} // namespace

std::string_view to_string(Element e) { return info(e).name; }

std::string_view to_string(Layer l) {
    switch (l) {
    case Layer::Foundational: return "Foundational";
    case Layer::ExtensiveDefinition: return "ExtensiveDefinition";
    case Layer::Accessory: return "Accessory";
    }
    return "?";
}

std::optional<Element> parse_element(std::string_view name) {
    for (Element e : kAllElements) {
        if (info(e).name == name) return e;
    }
    return std::nullopt;
}

Layer layer_of(Element e) { return info(e).layer; }
bool is_source_element(Element e) { return info(e).source; }
bool is_renderable(Element e) { return info(e).renderable; }

ElementSet::ElementSet(std::initializer_list<Element> elements) {
    for (Element e : elements) insert(e);
}

ElementSet ElementSet::operator|(const ElementSet& other) const {
    ElementSet out;
    out.bits_ = bits_ | other.bits_;
    return out;
}

ElementSet ElementSet::operator-(const ElementSet& other) const {
    ElementSet out;
    out.bits_ = bits_ & ~other.bits_;
    return out;
}

std::vector<Element> ElementSet::elements() const {
    std::vector<Element> out;
    for (Element e : kAllElements) {
        if (contains(e)) out.push_back(e);
    }
    return out;
}

std::string ElementSet::str() const {
    std::string out;
    for (Element e : elements()) {
        if (!out.empty()) out += ',';
        out += to_string(e);
    }
    return out;
}

ElementSet ElementSet::parse_list(std::string_view comma_separated) {
    ElementSet out;
    std::size_t pos = 0;
    while (pos <= comma_separated.size()) {
        auto next = comma_separated.find(',', pos);
        if (next == std::string_view::npos) next = comma_separated.size();
        auto token = comma_separated.substr(pos, next - pos);
        while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
        while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
        if (!token.empty()) {
            auto e = parse_element(token);
            if (!e) throw TaxonomyError("unknown conceptual element: " + std::string(token));
            out.insert(*e);
        }
        pos = next + 1;
    }
    return out;
}

ElementSet requirements(Element e) {
    switch (e) {
    case Element::AA: return kOffensiveLanguage;
    case Element::EDFoC: return {Element::FoC};
    case Element::EDT: return {Element::T};
    case Element::EDPC: return {Element::PC};
    case Element::LAA: return {Element::AA};
    default: break;
    }
    if (layer_of(e) == Layer::Accessory) return kHateSpeechBase;
    return {};
}

std::string Violation::message() const {
    switch (kind) {
    case Kind::EmptySpec: return "EmptySpec: no conceptual elements given";
    case Kind::MissingDependency:
        return "MissingDependency(" + std::string(to_string(*element)) + ", " + missing.str() + ")";
    case Kind::IncompleteFoundation:
        return "IncompleteFoundation(" + missing.str() + "): FoC, T and PC are all required";
    case Kind::NonRenderable: return "NonRenderable(" + std::string(to_string(*element)) + ")";
    }
    return "?";
}

std::string ValidationResult::message() const {
    if (valid()) return "Valid";
    std::string out;
    for (const auto& v : violations) {
        if (!out.empty()) out += "; ";
        out += v.message();
    }
    return out;
}

ValidationResult validate_spec(const ElementSet& elements) {
    ValidationResult result;
    if (elements.empty()) {
        result.violations.push_back({Violation::Kind::EmptySpec, std::nullopt, {}});
        return result;
    }
    for (Element e : elements.elements()) {
        if (!is_renderable(e)) {
            result.violations.push_back({Violation::Kind::NonRenderable, e, {}});
        }
    }
    for (Element e : elements.elements()) {
        auto missing = requirements(e) - elements;
        if (!missing.empty()) {
            result.violations.push_back({Violation::Kind::MissingDependency, e, missing});
        }
    }
    auto missing_base = kOffensiveLanguage - elements;
    if (!missing_base.empty()) {
        result.violations.push_back({Violation::Kind::IncompleteFoundation, std::nullopt, missing_base});
    }
    return result;
}

DefinitionSpec DefinitionSpec::no_definition() {
    return {std::string(kNoDefinitionName), {}, DefinitionKind::NoDefinition};
}

DefinitionSpec DefinitionSpec::own() { return {std::string(kOwnName), {}, DefinitionKind::Own}; }

DefinitionSpec DefinitionSpec::composed(std::string name, ElementSet elements) {
    return {std::move(name), elements, DefinitionKind::Composed};
}

SpanRegistry::SpanRegistry(std::string skeleton, std::map<Element, Span> spans)
    : skeleton_(std::move(skeleton)), spans_(std::move(spans)) {
    for (Element e : kAllElements) {
        const bool has_span = spans_.count(e) != 0;
        if (is_renderable(e) && !has_span) {
            throw TaxonomyError("span registry lacks a span for " + std::string(to_string(e)));
        }
        if (!is_renderable(e) && has_span) {
            throw TaxonomyError("span registry defines a span for non-renderable " + std::string(to_string(e)));
        }
        if (!is_renderable(e)) continue;
        auto first = skeleton_.find(anchor(e));
        if (first == std::string::npos || skeleton_.find(anchor(e), first + 1) != std::string::npos) {
            throw TaxonomyError("skeleton must contain anchor " + anchor(e) + " exactly once");
        }
    }
}

SpanRegistry SpanRegistry::from_json(std::string_view json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& ex) {
        throw TaxonomyError(std::string("span registry is not valid JSON: ") + ex.what());
    }
    std::map<Element, Span> spans;
    for (const auto& [name, value] : doc.at("spans").items()) {
        auto e = parse_element(name);
        if (!e) throw TaxonomyError("span registry names unknown element " + name);
        spans[*e] = Span{value.value("lead", ""), value.at("text").get<std::string>(), value.value("trail", "")};
    }
    return SpanRegistry(doc.at("skeleton").get<std::string>(), std::move(spans));
}

SpanRegistry SpanRegistry::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TaxonomyError("cannot open span registry " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

const SpanRegistry& SpanRegistry::builtin() {
    static const SpanRegistry registry = from_json(embedded_file("taxonomy/spans.json"));
    return registry;
}

const Span& SpanRegistry::span(Element e) const {
    auto it = spans_.find(e);
    if (it == spans_.end()) throw TaxonomyError("no span registered for " + std::string(to_string(e)));
    return it->second;
}

std::string compose(const DefinitionSpec& spec, const SpanRegistry& registry) {
    if (spec.kind != DefinitionKind::Composed) {
        throw TaxonomyError("InvalidSpec: " + spec.name + " is not a composed definition");
    }
    auto validation = validate_spec(spec.elements);
    if (!validation.valid()) {
        throw TaxonomyError("InvalidSpec: " + spec.name + ": " + validation.message());
    }
    const std::string& skeleton = registry.skeleton();
    std::string out;
    out.reserve(skeleton.size() * 4);
    std::size_t pos = 0;
    while (pos < skeleton.size()) {
        auto open = skeleton.find('{', pos);
        if (open == std::string::npos) {
            out.append(skeleton, pos, std::string::npos);
            break;
        }
        auto close = skeleton.find('}', open);
        if (close == std::string::npos) throw TaxonomyError("unterminated anchor in skeleton");
        out.append(skeleton, pos, open - pos);
        auto e = parse_element(std::string_view(skeleton).substr(open + 1, close - open - 1));
        if (!e) throw TaxonomyError("skeleton names unknown anchor " + skeleton.substr(open, close - open + 1));
        if (spec.elements.contains(*e)) out += registry.span(*e).rendered();
        pos = close + 1;
    }
    return out;
}

std::vector<DefinitionSpec> enumerate_step1() {
    using E = Element;
    const ElementSet hsb = kHateSpeechBase;
    return {
        DefinitionSpec::composed("OL", kOffensiveLanguage),
        DefinitionSpec::composed("HSB", hsb),
        DefinitionSpec::composed("HSB_EDFoC", hsb | ElementSet{E::EDFoC}),
        DefinitionSpec::composed("HSB_EDPC", hsb | ElementSet{E::EDPC}),
        DefinitionSpec::composed("HSB_EDT", hsb | ElementSet{E::EDT}),
        DefinitionSpec::composed("HSB_EDFoC_EDT", hsb | ElementSet{E::EDFoC, E::EDT}),
        DefinitionSpec::composed("HSB_EDFoC_EDPC", hsb | ElementSet{E::EDFoC, E::EDPC}),
        DefinitionSpec::composed("HSB_EDT_EDPC", hsb | ElementSet{E::EDT, E::EDPC}),
        DefinitionSpec::composed("HSB_EDFoC_EDPC_EDT", hsb | ElementSet{E::EDFoC, E::EDPC, E::EDT}),
    };
}

std::vector<DefinitionSpec> enumerate_step2(const DefinitionSpec& base) {
    using E = Element;
    if (base.kind != DefinitionKind::Composed || !validate_spec(base.elements).valid()) {
        throw TaxonomyError("InvalidBase: " + base.name + " is not a valid composed definition");
    }
    for (Element e : base.elements.elements()) {
        if (layer_of(e) == Layer::Accessory || e == E::LAA) {
            throw TaxonomyError("InvalidBase: " + base.name + " already contains " + std::string(to_string(e)));
        }
    }
    if (!base.elements.contains(E::AA)) {
        throw TaxonomyError("InvalidBase: " + base.name + " lacks AA, which LAA requires");
    }

    const std::vector<std::pair<std::string, ElementSet>> combos{
        {"+LAA", {E::LAA}},
        {"+LAA_PI", {E::LAA, E::PI}},
        {"+LAA_Exc", {E::LAA, E::Exc}},
        {"+LAA_IHS", {E::LAA, E::IHS}},
        {"+LAA_PI_Exc", {E::LAA, E::PI, E::Exc}},
        {"+LAA_Exc_IHS", {E::LAA, E::Exc, E::IHS}},
        {"+LAA_PI_IHS", {E::LAA, E::PI, E::IHS}},
        {"+LAA_PI_IHS_Exc", {E::LAA, E::PI, E::IHS, E::Exc}},
    };
    std::vector<DefinitionSpec> out;
    for (const auto& [name, extra] : combos) {
        out.push_back(DefinitionSpec::composed(name, base.elements | extra));
    }
    return out;
}

DefinitionSpec resolve_preset(std::string_view name, std::string_view default_base) {
    if (name == kNoDefinitionName) return DefinitionSpec::no_definition();
    if (name == kOwnName) return DefinitionSpec::own();

    auto plus = name.find('+');
    if (plus == std::string_view::npos) {
        for (auto& spec : enumerate_step1()) {
            if (spec.name == name) return spec;
        }
        throw TaxonomyError("unknown preset: " + std::string(name));
    }
    auto base_name = plus == 0 ? default_base : name.substr(0, plus);
    auto suffix = name.substr(plus);
    auto base = resolve_preset(base_name, default_base);
    for (auto& spec : enumerate_step2(base)) {
        if (spec.name == suffix) {
            if (plus != 0) spec.name = std::string(name);
            return spec;
        }
    }
    throw TaxonomyError("unknown preset: " + std::string(name));
}

OwnDefinitions OwnDefinitions::from_json(std::string_view json_text) {
    std::map<std::string, std::string> texts;
    try {
        const auto doc = nlohmann::json::parse(json_text);
        for (const auto& [key, value] : doc.items()) {
            texts[key] = value.get<std::string>();
        }
    } catch (const nlohmann::json::exception& ex) {
        throw TaxonomyError(std::string("own-definition registry: ") + ex.what());
    }
    return OwnDefinitions(texts);
}

const OwnDefinitions& OwnDefinitions::builtin() {
    static const OwnDefinitions registry = from_json(embedded_file("taxonomy/own_definitions.json"));
    return registry;
}

std::optional<std::string> OwnDefinitions::find(std::string_view dataset) const {
    auto it = texts_.find(dataset);
    if (it == texts_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> OwnDefinitions::datasets() const {
    std::vector<std::string> out;
    for (const auto& [name, text] : texts_) out.push_back(name);
    return out;
}

} // namespace hsdef
