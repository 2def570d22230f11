#pragma once

#include "hsdef/dataset.hpp"
#include "hsdef/gateway.hpp"
#include "hsdef/metrics.hpp"
#include "hsdef/records.hpp"
#include "hsdef/taxonomy.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hsdef {

struct DatasetConfig {
    std::string name;  // also the key into the Own-definition registry
    std::filesystem::path path;
    Schema schema;
    std::optional<std::size_t> sample_n;  // stratified draw when set
    double sample_p_hs = 0.6816;
};

struct ExperimentConfig {
    std::string id;
    DatasetConfig dataset;
    std::vector<ModelConfig> models;
    std::optional<std::vector<std::string>> conditions;  // nullopt: two-step protocol
    int runs = 3;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "runs";
    std::optional<std::string> own_key;  // defaults to dataset.name
    QuartileMethod quartile_method = QuartileMethod::ExclusiveMedian;

    void validate() const;
    std::filesystem::path experiment_dir() const { return output_dir / id; }
};

ExperimentConfig parse_config(std::string_view yaml_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Deterministic JSON snapshot of the configuration (no secrets).
nlohmann::json config_snapshot(const ExperimentConfig& config);

// Per-condition aggregate for one model.
struct ConditionScore {
    std::string condition;         // display name, e.g. "HSB_EDT" or "+LAA"
    std::string record_condition;  // name stored in records, e.g. "HSB_EDT+LAA"
    DefinitionKind kind = DefinitionKind::Composed;
    std::size_t element_count = 0;
    std::optional<std::size_t> tokens;  // definition length; nullopt for NO
    std::vector<double> run_f1;
    double mean_f1 = 0.0;
    double pooled_f1 = 0.0;
    double robustness = 0.0;
    std::size_t records = 0;
    std::size_t failures = 0;
    std::size_t refusals = 0;
    double fp_per_run = 0.0;
    double fn_per_run = 0.0;
    bool f1_outlier = false;
    bool robustness_outlier = false;
    int underline = 0;  // Step 2: 1 beats the chosen base, 2 beats the Step-1 best

    double coverage() const {
        return records == 0 ? 0.0 : static_cast<double>(records - failures) / static_cast<double>(records);
    }
};

struct Step1ModelReport {
    std::string model;
    std::vector<ConditionScore> rows;
    std::optional<double> pearson_all;         // every condition but NO
    std::optional<double> pearson_hsb_family;  // HSB and its ED refinements
    std::string chosen;                        // best crafted definition
    double chosen_score = 0.0;
    std::string best;  // best condition overall
    double best_score = 0.0;
};

struct Step1Report {
    std::vector<Step1ModelReport> models;
    QuartileMethod quartile_method = QuartileMethod::ExclusiveMedian;
};

struct Step2ModelReport {
    std::string model;
    std::string base;
    std::vector<ConditionScore> rows;
    std::optional<double> chosen_score;  // from Step 1, when known
    std::optional<double> best_score;
};

struct Step2Report {
    std::vector<Step2ModelReport> models;
    QuartileMethod quartile_method = QuartileMethod::ExclusiveMedian;
};

struct ConditionReport {
    std::vector<std::pair<std::string, std::vector<ConditionScore>>> models;
    QuartileMethod quartile_method = QuartileMethod::ExclusiveMedian;
};

/// Names of the crafted definitions eligible for Step-2 selection: HSB and
/// its ED refinements. NO, Own and OL are excluded.
bool is_selectable_crafted(std::string_view condition);

/// Highest mean macro-F1 among the crafted rows; ties go to fewer elements,
/// then to the lexicographically smaller name. Throws MissingCondition
/// (ConfigError) when any HSB-family definition is absent.
DefinitionSpec select_best_crafted(std::span<const ConditionScore> rows);
DefinitionSpec select_best_crafted(const Step1Report& report, std::string_view model);

/// Aggregates one condition's records (all runs) for one model.
ConditionScore score_condition(const DefinitionSpec& spec, std::string record_condition,
                               std::span<const RunRecord> records, std::optional<std::size_t> tokens);

/// Flags IQR outliers on the mean-F1 and robustness columns (>= 4 rows).
void flag_outliers(std::vector<ConditionScore>& rows,
                   QuartileMethod method = QuartileMethod::ExclusiveMedian);

/// Fills Pearson rows and the chosen/best picks.
void summarize_step1(Step1ModelReport& report);

/// Sets underline marks relative to the Step-1 scores.
void mark_step2(Step2ModelReport& report);

/// Definition text for a condition, or nullopt for NO. Throws ConfigError when
/// Own has no registered text for `own_key`.
std::optional<std::string> definition_text(const DefinitionSpec& spec, std::string_view own_key,
                                           const OwnDefinitions& own = OwnDefinitions::builtin(),
                                           const SpanRegistry& registry = SpanRegistry::builtin());

struct ConditionJob {
    std::string experiment;
    DefinitionSpec spec;
    std::string record_condition;
    std::optional<std::string> definition;
    int runs = 3;
};

/// |dataset| x runs records in (run, dataset order); backend errors become
/// failure markers. Requests run concurrently up to the model's parallelism.
std::vector<RunRecord> run_condition(const ConditionJob& job, const Dataset& dataset, Gateway& gateway,
                                     ResponseCache& cache, CacheStats* stats = nullptr);

// Drives the two-step protocol and writes results under
// {output_dir}/{experiment}/.
class ExperimentRunner {
public:
    explicit ExperimentRunner(ExperimentConfig config);

    const ExperimentConfig& config() const { return config_; }
    const Dataset& dataset() const { return dataset_; }

    Step1Report run_step1();
    /// Bases per model id.
    Step2Report run_step2(const std::map<std::string, DefinitionSpec>& bases, const Step1Report* step1 = nullptr);
    ConditionReport run_conditions(const std::vector<std::string>& names);

    /// Bases recorded by an earlier Step 1 of this experiment, if any.
    std::optional<std::map<std::string, DefinitionSpec>> load_selection() const;
    /// Step-1 scores recorded alongside the selection.
    std::optional<Step1Report> load_step1_summary() const;

    void write_meta() const;

    std::uint64_t backend_calls() const;
    std::uint64_t cache_hits() const { return stats_.hits.load(); }
    std::size_t failures() const { return failures_; }
    std::filesystem::path directory() const { return config_.experiment_dir(); }

private:
    std::vector<RunRecord> execute(const DefinitionSpec& spec, const std::string& record_condition, Gateway& gateway);
    std::string own_key() const { return config_.own_key.value_or(config_.dataset.name); }

    ExperimentConfig config_;
    Dataset dataset_;
    std::vector<std::unique_ptr<Gateway>> gateways_;
    std::unique_ptr<ResponseCache> cache_;
    CacheStats stats_;
    std::size_t failures_ = 0;
    std::map<std::string, std::vector<ConditionRecords>> step1_records_, step2_records_;
};

} // namespace hsdef
