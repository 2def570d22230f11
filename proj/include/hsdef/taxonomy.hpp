#pragma once

#include "hsdef/errors.hpp"

#include <array>
#include <bitset>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hsdef {

// Conceptual Elements of the hate-speech definition taxonomy. Declaration
// order is the canonical order used for printing and iteration.
enum class Element : std::uint8_t {
    FoC,    // Form of Communication
    T,      // Target
    PC,     // Problematic Content
    AA,     // Addressed Attributes
    EDFoC,  // Extensive Definition of FoC
    EDT,    // Extensive Definition of Target
    EDPC,   // Extensive Definition of PC
    LAA,    // List of Addressed Attributes
    sPI,    // social Possible Implications
    iPI,    // individual Possible Implications
    PI,     // consolidated Possible Implications (sPI + iPI)
    Exc,    // Exceptions
    IHS,    // Implicit Hate Speech
    Exa,    // Examples
    Law,    // Reference to Laws
};

inline constexpr std::size_t kElementCount = 15;

inline constexpr std::array<Element, kElementCount> kAllElements{
    Element::FoC, Element::T,   Element::PC,  Element::AA,  Element::EDFoC,
    Element::EDT, Element::EDPC, Element::LAA, Element::sPI, Element::iPI,
    Element::PI,  Element::Exc, Element::IHS, Element::Exa, Element::Law};

enum class Layer { Foundational, ExtensiveDefinition, Accessory };

std::string_view to_string(Element e);
std::string_view to_string(Layer l);
std::optional<Element> parse_element(std::string_view name);

Layer layer_of(Element e);

/// True for the 14 elements found in the source definitions; false for the
/// consolidated PI alias.
bool is_source_element(Element e);

/// Elements that can appear in a composed definition text.
bool is_renderable(Element e);

/// Small value-type set of elements, iterated in canonical order.
class ElementSet {
public:
    constexpr ElementSet() = default;
    ElementSet(std::initializer_list<Element> elements);

    bool contains(Element e) const { return bits_.test(index(e)); }
    void insert(Element e) { bits_.set(index(e)); }
    void erase(Element e) { bits_.reset(index(e)); }
    std::size_t size() const { return bits_.count(); }
    bool empty() const { return bits_.none(); }

    bool includes(const ElementSet& other) const { return (other.bits_ & ~bits_).none(); }
    ElementSet operator|(const ElementSet& other) const;
    ElementSet operator-(const ElementSet& other) const;
    bool operator==(const ElementSet& other) const = default;

    std::vector<Element> elements() const;
    /// Comma-separated canonical names, e.g. "FoC,T,PC".
    std::string str() const;

    static ElementSet parse_list(std::string_view comma_separated);

private:
    static std::size_t index(Element e) { return static_cast<std::size_t>(e); }
    std::bitset<kElementCount> bits_;
};

/// Elements that must co-occur with `e`.
ElementSet requirements(Element e);

inline const ElementSet kOffensiveLanguage{Element::FoC, Element::T, Element::PC};
inline const ElementSet kHateSpeechBase{Element::FoC, Element::T, Element::PC, Element::AA};

class TaxonomyError : public Error {
public:
    using Error::Error;
};

struct Violation {
    enum class Kind {
        EmptySpec,
        MissingDependency,     // `element` requires the elements in `missing`
        IncompleteFoundation,  // FoC, T and PC are not all present
        NonRenderable,         // `element` cannot be rendered
    };

    Kind kind;
    std::optional<Element> element;
    ElementSet missing;

    std::string message() const;
    bool operator==(const Violation&) const = default;
};

struct ValidationResult {
    std::vector<Violation> violations;
    bool valid() const { return violations.empty(); }
    std::string message() const;
};

ValidationResult validate_spec(const ElementSet& elements);

enum class DefinitionKind { NoDefinition, Own, Composed };

struct DefinitionSpec {
    std::string name;
    ElementSet elements;
    DefinitionKind kind = DefinitionKind::Composed;

    static DefinitionSpec no_definition();
    static DefinitionSpec own();
    static DefinitionSpec composed(std::string name, ElementSet elements);

    bool operator==(const DefinitionSpec&) const = default;
};

inline constexpr std::string_view kNoDefinitionName = "NO";
inline constexpr std::string_view kOwnName = "Own";

struct Span {
    std::string lead;   // joiner emitted before the span
    std::string text;   // the canonical wording of the element
    std::string trail;  // punctuation emitted after the span

    std::string rendered() const { return lead + text + trail; }
};

// Canonical wording per renderable element plus the sentence skeleton that
// fixes where each element is inserted. Immutable after construction.
class SpanRegistry {
public:
    SpanRegistry(std::string skeleton, std::map<Element, Span> spans);

    static SpanRegistry from_json(std::string_view json_text);
    static SpanRegistry load(const std::filesystem::path& path);
    /// Registry compiled from data/taxonomy/spans.json.
    static const SpanRegistry& builtin();

    const std::string& skeleton() const { return skeleton_; }
    const Span& span(Element e) const;

private:
    std::string skeleton_;
    std::map<Element, Span> spans_;
};

std::string compose(const DefinitionSpec& spec, const SpanRegistry& registry = SpanRegistry::builtin());

/// The nine crafted Step-1 definitions, OL first.
std::vector<DefinitionSpec> enumerate_step1();

/// The eight accessory combinations stacked on a Step-1 crafted base.
std::vector<DefinitionSpec> enumerate_step2(const DefinitionSpec& base);

/// Resolves "NO", "Own", a Step-1 name, "+X" (on `default_base`) or "BASE+X".
DefinitionSpec resolve_preset(std::string_view name, std::string_view default_base = "HSB");

/// Literal dataset definitions used by the Own condition.
class OwnDefinitions {
public:
    explicit OwnDefinitions(const std::map<std::string, std::string>& texts)
        : texts_(texts.begin(), texts.end()) {}

    static OwnDefinitions from_json(std::string_view json_text);
    static const OwnDefinitions& builtin();

    std::optional<std::string> find(std::string_view dataset) const;
    std::vector<std::string> datasets() const;

private:
    std::map<std::string, std::string, std::less<>> texts_;
};

} // namespace hsdef
