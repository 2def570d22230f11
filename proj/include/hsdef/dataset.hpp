#pragma once

#include "hsdef/errors.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace hsdef {

enum class Gold { HS, NHS };

std::string_view to_string(Gold g);
std::optional<Gold> parse_gold(std::string_view s);

struct Sample {
    std::string id;
    std::string text;
    Gold gold = Gold::NHS;
    std::optional<std::string> functionality;
    std::string dataset;

    bool operator==(const Sample&) const = default;
};

struct Schema {
    std::string id_column;  // empty: ids are the 1-based data row numbers
    std::string text_column = "text";
    std::string label_column = "label";
    std::optional<std::string> functionality_column;
    std::optional<std::string> dataset_column;  // per-row dataset tag, if any
    std::map<std::string, Gold> labels{{"1", Gold::HS}, {"0", Gold::NHS}};
    char delimiter = ',';
};

struct Dataset {
    std::string name;
    std::vector<Sample> samples;
    Schema schema;

    std::size_t count(Gold g) const;
    std::size_t size() const { return samples.size(); }
    bool has_functionality() const;
};

class DatasetError : public Error {
public:
    enum class Kind { FileNotFound, SchemaMismatch, UnknownLabel, DuplicateId, InsufficientClass, InvalidProportion };

    DatasetError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

Dataset load_dataset(const std::filesystem::path& path, const Schema& schema, std::string name);
Dataset parse_dataset(std::istream& in, const Schema& schema, std::string name);

/// Schema of files written by `write_dataset_csv`.
Schema sampled_schema();
void write_dataset_csv(const Dataset& dataset, std::ostream& out);

/// Number of gold-HS samples drawn for `n` at proportion `p_hs`
/// (round half up).
std::size_t stratified_hs_count(std::size_t n, double p_hs);

/// Seeded draw without replacement of round(n * p_hs) HS and the remainder
/// NHS samples, returned in shuffled order.
Dataset stratified_sample(const Dataset& dataset, std::size_t n, double p_hs, std::uint64_t seed);

/// Uniform integer in [0, bound) from a 64-bit Mersenne Twister by rejection.
/// Unlike std::uniform_int_distribution the result does not depend on the
/// standard library implementation.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound);

enum class MacroClass { HS, NHS, LeetHS, MisleadingNHS, SpecialHS };

inline constexpr std::size_t kMacroClassCount = 5;
std::string_view to_string(MacroClass m);
std::optional<MacroClass> parse_macro_class(std::string_view s);

class UnknownFunctionality : public Error {
public:
    using Error::Error;
};

/// HateCheck functionality -> macro class, loaded from data/hatecheck/.
const std::map<std::string, MacroClass, std::less<>>& functionality_map();

MacroClass map_functionality(std::string_view functionality);

} // namespace hsdef
