#include "hsdef/dataset.hpp"

#include "hsdef/csv.hpp"
#include "hsdef/embedded.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

namespace hsdef {

namespace {

std::string row_context(std::size_t line) { return "row " + std::to_string(line); }

std::size_t require_column(const std::vector<std::string>& header, const std::string& column) {
    auto it = std::find(header.begin(), header.end(), column);
    if (it == header.end()) {
        throw DatasetError(DatasetError::Kind::SchemaMismatch,
                           "SchemaMismatch(row 1, " + column + "): column not found in header");
    }
    return static_cast<std::size_t>(it - header.begin());
}

template <typename It>
void shuffle_prefix(It first, It last, std::size_t k, std::mt19937_64& rng) {
    // Partial Fisher-Yates: positions [0, k) end up as a uniform k-sample.
    const auto n = static_cast<std::size_t>(last - first);
    for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
        auto j = i + static_cast<std::size_t>(uniform_below(rng, n - i));
        std::iter_swap(first + i, first + j);
    }
}

} // namespace

std::string_view to_string(Gold g) { return g == Gold::HS ? "HS" : "NHS"; }

std::optional<Gold> parse_gold(std::string_view s) {
    if (s == "HS") return Gold::HS;
    if (s == "NHS") return Gold::NHS;
    return std::nullopt;
}

std::size_t Dataset::count(Gold g) const {
    return static_cast<std::size_t>(
        std::count_if(samples.begin(), samples.end(), [g](const Sample& s) { return s.gold == g; }));
}

bool Dataset::has_functionality() const {
    return !samples.empty() &&
           std::all_of(samples.begin(), samples.end(), [](const Sample& s) { return s.functionality.has_value(); });
}

Dataset parse_dataset(std::istream& in, const Schema& schema, std::string name) {
    csv::Reader reader(in, schema.delimiter);
    Dataset dataset{std::move(name), {}, schema};

    std::optional<csv::Row> header;
    try {
        header = reader.next();
    } catch (const std::runtime_error& ex) {
        throw DatasetError(DatasetError::Kind::SchemaMismatch, std::string("SchemaMismatch: ") + ex.what());
    }
    if (!header) {
        throw DatasetError(DatasetError::Kind::SchemaMismatch, "SchemaMismatch(row 1, header): file is empty");
    }

    const auto text_col = require_column(header->fields, schema.text_column);
    const auto label_col = require_column(header->fields, schema.label_column);
    std::optional<std::size_t> id_col, fn_col, ds_col;
    if (!schema.id_column.empty()) id_col = require_column(header->fields, schema.id_column);
    if (schema.functionality_column) fn_col = require_column(header->fields, *schema.functionality_column);
    if (schema.dataset_column) ds_col = require_column(header->fields, *schema.dataset_column);

    std::set<std::string, std::less<>> seen;
    std::size_t data_row = 0;
    while (true) {
        std::optional<csv::Row> row;
        try {
            row = reader.next();
        } catch (const std::runtime_error& ex) {
            throw DatasetError(DatasetError::Kind::SchemaMismatch, std::string("SchemaMismatch: ") + ex.what());
        }
        if (!row) break;
        // A trailing blank line is not a record.
        if (row->fields.size() == 1 && row->fields[0].empty()) continue;
        ++data_row;
        if (row->fields.size() != header->fields.size()) {
            throw DatasetError(DatasetError::Kind::SchemaMismatch,
                               "SchemaMismatch(" + row_context(row->line) + ", *): expected " +
                                   std::to_string(header->fields.size()) + " fields, found " +
                                   std::to_string(row->fields.size()));
        }

        Sample sample;
        sample.id = id_col ? row->fields[*id_col] : std::to_string(data_row);
        sample.text = row->fields[text_col];
        sample.dataset = ds_col ? row->fields[*ds_col] : dataset.name;
        if (sample.id.empty()) {
            throw DatasetError(DatasetError::Kind::SchemaMismatch,
                               "SchemaMismatch(" + row_context(row->line) + ", " + schema.id_column + "): empty id");
        }
        if (sample.text.empty()) {
            throw DatasetError(DatasetError::Kind::SchemaMismatch,
                               "SchemaMismatch(" + row_context(row->line) + ", " + schema.text_column + "): empty text");
        }
        const auto& label = row->fields[label_col];
        auto mapped = schema.labels.find(label);
        if (mapped == schema.labels.end()) {
            throw DatasetError(DatasetError::Kind::UnknownLabel,
                               "UnknownLabel(" + row_context(row->line) + ", \"" + label + "\")");
        }
        sample.gold = mapped->second;
        if (fn_col && !row->fields[*fn_col].empty()) sample.functionality = row->fields[*fn_col];
        if (!seen.insert(sample.id).second) {
            throw DatasetError(DatasetError::Kind::DuplicateId,
                               "DuplicateId(" + row_context(row->line) + ", \"" + sample.id + "\")");
        }
        dataset.samples.push_back(std::move(sample));
    }
    return dataset;
}

Dataset load_dataset(const std::filesystem::path& path, const Schema& schema, std::string name) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError(DatasetError::Kind::FileNotFound, "FileNotFound: " + path.string());
    return parse_dataset(in, schema, std::move(name));
}

Schema sampled_schema() {
    Schema schema;
    schema.id_column = "id";
    schema.text_column = "text";
    schema.label_column = "gold";
    schema.functionality_column = "functionality";
    schema.dataset_column = "dataset";
    schema.labels = {{"HS", Gold::HS}, {"NHS", Gold::NHS}};
    return schema;
}

void write_dataset_csv(const Dataset& dataset, std::ostream& out) {
    csv::write_row(out, {"id", "text", "gold", "functionality", "dataset"});
    for (const auto& s : dataset.samples) {
        csv::write_row(out, {s.id, s.text, std::string(to_string(s.gold)), s.functionality.value_or(""), s.dataset});
    }
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    if (bound == 0) return 0;
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - (max % bound + 1) % bound;
    std::uint64_t draw;
    do {
        draw = rng();
    } while (draw > limit);
    return draw % bound;
}

std::size_t stratified_hs_count(std::size_t n, double p_hs) {
    if (!(p_hs >= 0.0 && p_hs <= 1.0)) {
        throw DatasetError(DatasetError::Kind::InvalidProportion,
                           "InvalidProportion: p_hs = " + std::to_string(p_hs) + " is outside [0, 1]");
    }
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * p_hs + 0.5));
}

Dataset stratified_sample(const Dataset& dataset, std::size_t n, double p_hs, std::uint64_t seed) {
    const std::size_t need_hs = stratified_hs_count(n, p_hs);
    const std::size_t need_nhs = n - need_hs;

    std::vector<const Sample*> hs, nhs;
    for (const auto& s : dataset.samples) (s.gold == Gold::HS ? hs : nhs).push_back(&s);
    if (hs.size() < need_hs) {
        throw DatasetError(DatasetError::Kind::InsufficientClass, "InsufficientClass(HS, " + std::to_string(hs.size()) +
                                                                      ", " + std::to_string(need_hs) + ")");
    }
    if (nhs.size() < need_nhs) {
        throw DatasetError(DatasetError::Kind::InsufficientClass, "InsufficientClass(NHS, " +
                                                                      std::to_string(nhs.size()) + ", " +
                                                                      std::to_string(need_nhs) + ")");
    }

    std::mt19937_64 rng(seed);
    shuffle_prefix(hs.begin(), hs.end(), need_hs, rng);
    shuffle_prefix(nhs.begin(), nhs.end(), need_nhs, rng);

    std::vector<const Sample*> picked(hs.begin(), hs.begin() + static_cast<std::ptrdiff_t>(need_hs));
    picked.insert(picked.end(), nhs.begin(), nhs.begin() + static_cast<std::ptrdiff_t>(need_nhs));
    shuffle_prefix(picked.begin(), picked.end(), picked.size(), rng);

    Dataset out{dataset.name, {}, dataset.schema};
    out.samples.reserve(picked.size());
    for (const Sample* s : picked) out.samples.push_back(*s);
    return out;
}

std::string_view to_string(MacroClass m) {
    switch (m) {
    case MacroClass::HS: return "HS";
    case MacroClass::NHS: return "NHS";
    case MacroClass::LeetHS: return "LeetHS";
    case MacroClass::MisleadingNHS: return "MisleadingNHS";
    case MacroClass::SpecialHS: return "SpecialHS";
    }
    return "?";
}

std::optional<MacroClass> parse_macro_class(std::string_view s) {
    for (auto m : {MacroClass::HS, MacroClass::NHS, MacroClass::LeetHS, MacroClass::MisleadingNHS,
                   MacroClass::SpecialHS}) {
        if (to_string(m) == s) return m;
    }
    return std::nullopt;
}

const std::map<std::string, MacroClass, std::less<>>& functionality_map() {
    static const auto map = [] {
        std::map<std::string, MacroClass, std::less<>> out;
        auto doc = nlohmann::json::parse(embedded_file("hatecheck/functionalities.json"));
        for (const auto& [cls, members] : doc.items()) {
            auto macro = parse_macro_class(cls);
            if (!macro) throw ConfigError("functionality map names unknown macro class " + cls);
            for (const auto& fn : members) {
                if (!out.emplace(fn.get<std::string>(), *macro).second) {
                    throw ConfigError("functionality listed twice: " + fn.get<std::string>());
                }
            }
        }
        return out;
    }();
    return map;
}

MacroClass map_functionality(std::string_view functionality) {
    const auto& map = functionality_map();
    auto it = map.find(functionality);
    if (it == map.end()) throw UnknownFunctionality("UnknownFunctionality: " + std::string(functionality));
    return it->second;
}

} // namespace hsdef
