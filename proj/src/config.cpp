#include "hsdef/experiment.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace hsdef {

namespace {

void check_keys(const YAML::Node& node, std::string_view where, std::initializer_list<std::string_view> allowed) {
    if (!node.IsMap()) throw ConfigError(std::string(where) + " must be a mapping");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError("unknown key '" + key + "' in " + std::string(where));
        }
    }
}

template <typename T>
T get_or(const YAML::Node& node, const char* key, T fallback) {
    if (!node[key]) return fallback;
    try {
        return node[key].as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

std::vector<std::string> string_list(const YAML::Node& node, const char* key) {
    std::vector<std::string> out;
    if (!node[key]) return out;
    if (!node[key].IsSequence()) throw ConfigError(std::string("config key '") + key + "' must be a list");
    for (const auto& item : node[key]) out.push_back(item.as<std::string>());
    return out;
}

bool filesystem_safe(std::string_view id) {
    if (id.empty() || id == "." || id == "..") return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' ||
               c == '.';
    });
}

ModelConfig parse_model(const YAML::Node& node) {
    check_keys(node, "models[]",
               {"id", "backend", "base_url", "model", "temperature", "max_tokens", "constrained", "guided_choice", "api",
                "timeout_s", "max_retries", "retry_base_ms", "parallelism", "api_key_env", "keywords", "flip"});
    ModelConfig m;
    m.id = get_or<std::string>(node, "id", "");
    const auto backend = get_or<std::string>(node, "backend", "mock");
    if (backend == "mock") {
        m.backend = BackendKind::Mock;
    } else if (backend == "http") {
        m.backend = BackendKind::Http;
    } else {
        throw ConfigError("model " + m.id + ": backend must be 'mock' or 'http'");
    }
    m.base_url = get_or<std::string>(node, "base_url", "");
    m.model = get_or<std::string>(node, "model", m.id);
    if (node["temperature"]) m.temperature = get_or<double>(node, "temperature", kDefaultTemperature);
    m.max_tokens = get_or<int>(node, "max_tokens", kDefaultMaxTokens);
    m.constrained = get_or<bool>(node, "constrained", false);
    m.guided_choice = get_or<bool>(node, "guided_choice", false);
    const auto api = get_or<std::string>(node, "api", "chat");
    if (api == "chat") {
        m.api = ApiStyle::Chat;
    } else if (api == "completions") {
        m.api = ApiStyle::Completions;
    } else {
        throw ConfigError("model " + m.id + ": api must be 'chat' or 'completions'");
    }
    m.timeout = std::chrono::milliseconds(static_cast<long long>(get_or<double>(node, "timeout_s", 60.0) * 1000.0));
    m.max_retries = get_or<int>(node, "max_retries", 3);
    m.retry_base_delay = std::chrono::milliseconds(get_or<long long>(node, "retry_base_ms", 500));
    m.parallelism = get_or<int>(node, "parallelism", 1);
    m.api_key_env = get_or<std::string>(node, "api_key_env", "");
    m.mock.keywords = string_list(node, "keywords");
    m.mock.flips = string_list(node, "flip");
    m.validate();
    return m;
}

} // namespace

void ExperimentConfig::validate() const {
    if (!filesystem_safe(id)) throw ConfigError("experiment id '" + id + "' is not filesystem-safe");
    if (runs < 1) throw ConfigError("runs must be >= 1");
    if (models.empty()) throw ConfigError("at least one model is required");
    std::set<std::string> ids;
    for (const auto& m : models) {
        m.validate();
        if (!ids.insert(m.id).second) throw ConfigError("duplicate model id " + m.id);
    }
    if (dataset.path.empty()) throw ConfigError("dataset.path is required");
    if (conditions) {
        std::set<std::string> names;
        for (const auto& c : *conditions) {
            if (!names.insert(c).second) throw ConfigError("duplicate condition " + c);
        }
    }
}

ExperimentConfig parse_config(std::string_view yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(yaml_text));
    } catch (const YAML::Exception& ex) {
        throw ConfigError(std::string("config is not valid YAML: ") + ex.what());
    }
    check_keys(root, "config",
               {"experiment", "seed", "runs", "output_dir", "dataset", "own_definition", "conditions", "models",
                "quartile_method"});

    ExperimentConfig cfg;
    cfg.id = get_or<std::string>(root, "experiment", "");
    cfg.seed = get_or<std::uint64_t>(root, "seed", 0);
    cfg.runs = get_or<int>(root, "runs", 3);
    cfg.output_dir = get_or<std::string>(root, "output_dir", "runs");
    if (root["own_definition"]) cfg.own_key = root["own_definition"].as<std::string>();
    if (root["quartile_method"]) {
        auto method = parse_quartile_method(root["quartile_method"].as<std::string>());
        if (!method) throw ConfigError("quartile_method must be 'exclusive' or 'higher'");
        cfg.quartile_method = *method;
    }

    const auto ds = root["dataset"];
    if (!ds) throw ConfigError("config needs a dataset section");
    check_keys(ds, "dataset", {"name", "path", "delimiter", "columns", "labels", "sample"});
    cfg.dataset.name = get_or<std::string>(ds, "name", "dataset");
    cfg.dataset.path = get_or<std::string>(ds, "path", "");
    const auto delimiter = get_or<std::string>(ds, "delimiter", ",");
    if (delimiter.size() != 1) throw ConfigError("dataset.delimiter must be a single character");
    cfg.dataset.schema.delimiter = delimiter[0];
    if (const auto cols = ds["columns"]) {
        check_keys(cols, "dataset.columns", {"id", "text", "label", "functionality", "dataset"});
        cfg.dataset.schema.id_column = get_or<std::string>(cols, "id", "");
        cfg.dataset.schema.text_column = get_or<std::string>(cols, "text", "text");
        cfg.dataset.schema.label_column = get_or<std::string>(cols, "label", "label");
        if (cols["functionality"]) cfg.dataset.schema.functionality_column = cols["functionality"].as<std::string>();
        if (cols["dataset"]) cfg.dataset.schema.dataset_column = cols["dataset"].as<std::string>();
    }
    if (const auto labels = ds["labels"]) {
        if (!labels.IsMap()) throw ConfigError("dataset.labels must map raw values to HS or NHS");
        cfg.dataset.schema.labels.clear();
        for (const auto& kv : labels) {
            auto gold = parse_gold(kv.second.as<std::string>());
            if (!gold) throw ConfigError("dataset.labels values must be HS or NHS");
            cfg.dataset.schema.labels[kv.first.as<std::string>()] = *gold;
        }
    }
    if (const auto sample = ds["sample"]) {
        check_keys(sample, "dataset.sample", {"n", "p_hs"});
        cfg.dataset.sample_n = get_or<std::size_t>(sample, "n", 0);
        cfg.dataset.sample_p_hs = get_or<double>(sample, "p_hs", 0.6816);
        if (*cfg.dataset.sample_n == 0) throw ConfigError("dataset.sample.n must be positive");
    }

    if (const auto conds = root["conditions"]) {
        if (conds.IsScalar()) {
            if (conds.as<std::string>() != "auto") throw ConfigError("conditions must be 'auto' or a list of names");
        } else {
            cfg.conditions = string_list(root, "conditions");
            for (const auto& c : *cfg.conditions) {
                try {
                    resolve_preset(c);
                } catch (const TaxonomyError& ex) {
                    throw ConfigError(ex.what());
                }
            }
        }
    }

    const auto models = root["models"];
    if (!models || !models.IsSequence()) throw ConfigError("config needs a models list");
    for (const auto& m : models) cfg.models.push_back(parse_model(m));

    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

nlohmann::json config_snapshot(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["experiment"] = cfg.id;
    j["seed"] = cfg.seed;
    j["runs"] = cfg.runs;
    j["output_dir"] = cfg.output_dir.string();
    j["own_definition"] = cfg.own_key.value_or(cfg.dataset.name);
    j["quartile_method"] = std::string(to_string(cfg.quartile_method));
    j["conditions"] = cfg.conditions ? nlohmann::json(*cfg.conditions) : nlohmann::json("auto");

    auto& ds = j["dataset"];
    ds["name"] = cfg.dataset.name;
    ds["path"] = cfg.dataset.path.string();
    ds["delimiter"] = std::string(1, cfg.dataset.schema.delimiter);
    ds["columns"] = {{"id", cfg.dataset.schema.id_column},
                     {"text", cfg.dataset.schema.text_column},
                     {"label", cfg.dataset.schema.label_column},
                     {"functionality", cfg.dataset.schema.functionality_column.value_or("")},
                     {"dataset", cfg.dataset.schema.dataset_column.value_or("")}};
    for (const auto& [raw, gold] : cfg.dataset.schema.labels) ds["labels"][raw] = std::string(to_string(gold));
    if (cfg.dataset.sample_n) ds["sample"] = {{"n", *cfg.dataset.sample_n}, {"p_hs", cfg.dataset.sample_p_hs}};

    j["models"] = nlohmann::json::array();
    for (const auto& m : cfg.models) {
        nlohmann::json mj;
        mj["id"] = m.id;
        mj["backend"] = m.backend == BackendKind::Mock ? "mock" : "http";
        mj["base_url"] = m.base_url;
        mj["model"] = m.model;
        mj["temperature"] = m.effective_temperature();
        mj["max_tokens"] = m.max_tokens;
        mj["constrained"] = m.constrained;
        mj["guided_choice"] = m.guided_choice;
        mj["api"] = m.api == ApiStyle::Chat ? "chat" : "completions";
        mj["timeout_ms"] = m.timeout.count();
        mj["max_retries"] = m.max_retries;
        mj["retry_base_ms"] = m.retry_base_delay.count();
        mj["parallelism"] = m.parallelism;
        mj["api_key_env"] = m.api_key_env;
        mj["keywords"] = m.mock.keywords;
        mj["flip"] = m.mock.flips;
        j["models"].push_back(std::move(mj));
    }
    return j;
}

} // namespace hsdef
