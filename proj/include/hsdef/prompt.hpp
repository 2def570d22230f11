#pragma once

#include "hsdef/errors.hpp"
#include "hsdef/taxonomy.hpp"

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace hsdef {

enum class TemplateKind { WithDefinition, WithoutDefinition };

inline constexpr std::string_view kDefinitionPlaceholder = "[Definition]";
inline constexpr std::string_view kTextPlaceholder = "[TEXT]";

class PromptError : public Error {
public:
    using Error::Error;
};

// The two classification prompts. Bodies come from data/prompts/ and carry
// the literal placeholders [Definition] and [TEXT].
class PromptTemplates {
public:
    PromptTemplates(std::string with_definition, std::string without_definition);

    static const PromptTemplates& builtin();
    static PromptTemplates load(const std::filesystem::path& directory);

    const std::string& body(TemplateKind kind) const;

    /// Substitutes the placeholders in one pass; neither argument is rescanned
    /// or altered.
    std::string render(const DefinitionSpec& condition, std::optional<std::string_view> definition_text,
                       std::string_view sample_text) const;

private:
    std::string with_definition_;
    std::string without_definition_;
};

inline std::string render_prompt(const DefinitionSpec& condition, std::optional<std::string_view> definition_text,
                                 std::string_view sample_text) {
    return PromptTemplates::builtin().render(condition, definition_text, sample_text);
}

/// Number of maximal runs of non-whitespace bytes.
std::size_t count_tokens(std::string_view text);

using TokenCounter = std::function<std::size_t(std::string_view)>;

inline constexpr std::string_view kDefaultTokenCounterName = "whitespace";

} // namespace hsdef
