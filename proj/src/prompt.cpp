#include "hsdef/prompt.hpp"

#include "hsdef/embedded.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace hsdef {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PromptError("cannot open prompt template " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string_view::npos; pos = haystack.find(needle, pos + 1)) ++n;
    return n;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

} // namespace

PromptTemplates::PromptTemplates(std::string with_definition, std::string without_definition)
    : with_definition_(std::move(with_definition)), without_definition_(std::move(without_definition)) {
    if (count_occurrences(with_definition_, kDefinitionPlaceholder) != 1 ||
        count_occurrences(with_definition_, kTextPlaceholder) != 1) {
        throw PromptError("with-definition template needs exactly one [Definition] and one [TEXT]");
    }
    if (count_occurrences(without_definition_, kDefinitionPlaceholder) != 0 ||
        count_occurrences(without_definition_, kTextPlaceholder) != 1) {
        throw PromptError("without-definition template needs exactly one [TEXT] and no [Definition]");
    }
}

const PromptTemplates& PromptTemplates::builtin() {
    static const PromptTemplates templates(std::string(embedded_file("prompts/with_definition.txt")),
                                           std::string(embedded_file("prompts/without_definition.txt")));
    return templates;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& directory) {
    return PromptTemplates(read_file(directory / "with_definition.txt"),
                           read_file(directory / "without_definition.txt"));
}

const std::string& PromptTemplates::body(TemplateKind kind) const {
    return kind == TemplateKind::WithDefinition ? with_definition_ : without_definition_;
}

std::string PromptTemplates::render(const DefinitionSpec& condition, std::optional<std::string_view> definition_text,
                                    std::string_view sample_text) const {
    const bool wants_definition = condition.kind != DefinitionKind::NoDefinition;
    if (wants_definition && !definition_text) {
        throw PromptError("MissingDefinition: condition " + condition.name + " needs a definition text");
    }
    if (!wants_definition && definition_text) {
        throw PromptError("DefinitionForNoCondition: condition " + condition.name + " takes no definition");
    }

    const std::string& tmpl = body(wants_definition ? TemplateKind::WithDefinition : TemplateKind::WithoutDefinition);
    std::string out;
    out.reserve(tmpl.size() + sample_text.size() + (definition_text ? definition_text->size() : 0));
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        auto def_at = wants_definition ? tmpl.find(kDefinitionPlaceholder, pos) : std::string::npos;
        auto text_at = tmpl.find(kTextPlaceholder, pos);
        auto next = std::min(def_at, text_at);
        if (next == std::string::npos) {
            out.append(tmpl, pos, std::string::npos);
            break;
        }
        out.append(tmpl, pos, next - pos);
        if (next == def_at) {
            out += *definition_text;
            pos = next + kDefinitionPlaceholder.size();
        } else {
            out += sample_text;
            pos = next + kTextPlaceholder.size();
        }
    }
    return out;
}

std::size_t count_tokens(std::string_view text) {
    std::size_t tokens = 0;
    bool in_token = false;
    for (char c : text) {
        if (is_space(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++tokens;
        }
    }
    return tokens;
}

} // namespace hsdef
