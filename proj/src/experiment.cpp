#include "hsdef/experiment.hpp"

#include "hsdef/embedded.hpp"
#include "hsdef/hash.hpp"
#include "hsdef/prompt.hpp"
#include "hsdef/report.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace hsdef {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const char* kSelectionFile = "step1_selection.json";

std::vector<std::string> selectable_names() {
    std::vector<std::string> names;
    for (const auto& spec : enumerate_step1()) {
        if (is_selectable_crafted(spec.name)) names.push_back(spec.name);
    }
    return names;
}

std::optional<double> safe_pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    try {
        return pearson(xs, ys);
    } catch (const MetricsError&) {
        return std::nullopt;
    }
}

std::vector<std::size_t> finite_outliers(const std::vector<double>& values, QuartileMethod method) {
    std::vector<double> finite;
    std::vector<std::size_t> index;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (std::isfinite(values[i])) {
            finite.push_back(values[i]);
            index.push_back(i);
        }
    }
    if (finite.size() < 4) return {};
    std::vector<std::size_t> out;
    for (auto i : iqr_outliers(finite, method)) out.push_back(index[i]);
    return out;
}

std::string sanitize(std::string_view id) {
    std::string out(id);
    for (auto& c : out) {
        if (c == '/' || c == '\\') c = '_';
    }
    return out;
}

} // namespace

bool is_selectable_crafted(std::string_view condition) {
    if (condition == "OL" || condition == kNoDefinitionName || condition == kOwnName) return false;
    for (const auto& spec : enumerate_step1()) {
        if (spec.name == condition) return true;
    }
    return false;
}

DefinitionSpec select_best_crafted(std::span<const ConditionScore> rows) {
    const ConditionScore* best = nullptr;
    for (const auto& name : selectable_names()) {
        auto it = std::find_if(rows.begin(), rows.end(), [&](const ConditionScore& r) { return r.condition == name; });
        if (it == rows.end()) throw ConfigError("MissingCondition: Step-1 results lack " + name);
        if (!std::isfinite(it->mean_f1)) continue;
        if (best == nullptr || it->mean_f1 > best->mean_f1 ||
            (it->mean_f1 == best->mean_f1 &&
             (it->element_count < best->element_count ||
              (it->element_count == best->element_count && it->condition < best->condition)))) {
            best = &*it;
        }
    }
    if (best == nullptr) throw ConfigError("MissingCondition: no crafted definition has a score");
    return resolve_preset(best->condition);
}

DefinitionSpec select_best_crafted(const Step1Report& report, std::string_view model) {
    for (const auto& m : report.models) {
        if (m.model == model) return select_best_crafted(m.rows);
    }
    throw ConfigError("MissingCondition: no Step-1 results for model " + std::string(model));
}

ConditionScore score_condition(const DefinitionSpec& spec, std::string record_condition,
                               std::span<const RunRecord> records, std::optional<std::size_t> tokens) {
    ConditionScore s;
    s.condition = spec.name;
    s.record_condition = std::move(record_condition);
    s.kind = spec.kind;
    s.element_count = spec.elements.size();
    s.tokens = tokens;
    s.records = records.size();
    s.mean_f1 = s.pooled_f1 = s.robustness = kNaN;

    std::map<int, std::vector<RunRecord>> by_run;
    for (const auto& r : records) {
        by_run[r.key.run].push_back(r);
        if (r.failed) ++s.failures;
    }
    for (const auto& [run, rs] : by_run) {
        const bool any_scored = std::any_of(rs.begin(), rs.end(), [](const RunRecord& r) { return !r.failed; });
        s.run_f1.push_back(any_scored ? macro_f1(rs).macro : kNaN);
    }
    std::vector<double> finite;
    std::copy_if(s.run_f1.begin(), s.run_f1.end(), std::back_inserter(finite),
                 [](double v) { return std::isfinite(v); });
    if (finite.empty()) return s;

    double sum = 0.0;
    for (double v : finite) sum += v;
    s.mean_f1 = sum / static_cast<double>(finite.size());
    s.pooled_f1 = macro_f1(records).macro;
    try {
        s.robustness = robustness(records);
    } catch (const MetricsError& ex) {
        if (ex.kind() != MetricsError::Kind::EmptyRecords) throw;
    }

    const auto dist = error_distribution(records);
    s.refusals = dist.refusals;
    s.fp_per_run = dist.fp_per_run;
    s.fn_per_run = dist.fn_per_run;
    return s;
}

void flag_outliers(std::vector<ConditionScore>& rows, QuartileMethod method) {
    std::vector<double> f1, rob;
    for (const auto& r : rows) {
        f1.push_back(r.mean_f1);
        rob.push_back(r.robustness);
    }
    for (auto& r : rows) r.f1_outlier = r.robustness_outlier = false;
    for (auto i : finite_outliers(f1, method)) rows[i].f1_outlier = true;
    for (auto i : finite_outliers(rob, method)) rows[i].robustness_outlier = true;
}

void summarize_step1(Step1ModelReport& report) {
    std::vector<double> xs_all, ys_all, xs_hsb, ys_hsb;
    for (const auto& r : report.rows) {
        if (r.kind == DefinitionKind::NoDefinition || !r.tokens || !std::isfinite(r.mean_f1)) continue;
        xs_all.push_back(static_cast<double>(*r.tokens));
        ys_all.push_back(r.mean_f1);
        if (is_selectable_crafted(r.condition)) {
            xs_hsb.push_back(static_cast<double>(*r.tokens));
            ys_hsb.push_back(r.mean_f1);
        }
    }
    report.pearson_all = safe_pearson(xs_all, ys_all);
    report.pearson_hsb_family = safe_pearson(xs_hsb, ys_hsb);

    const auto chosen = select_best_crafted(report.rows);
    report.chosen = chosen.name;
    for (const auto& r : report.rows) {
        if (r.condition == chosen.name) report.chosen_score = r.mean_f1;
    }
    report.best.clear();
    for (const auto& r : report.rows) {
        if (!std::isfinite(r.mean_f1)) continue;
        if (report.best.empty() || r.mean_f1 > report.best_score) {
            report.best = r.condition;
            report.best_score = r.mean_f1;
        }
    }
}

void mark_step2(Step2ModelReport& report) {
    for (auto& r : report.rows) {
        r.underline = 0;
        if (!std::isfinite(r.mean_f1)) continue;
        if (report.chosen_score && r.mean_f1 > *report.chosen_score) r.underline = 1;
        if (report.best_score && r.mean_f1 > *report.best_score) r.underline = 2;
    }
}

std::optional<std::string> definition_text(const DefinitionSpec& spec, std::string_view own_key,
                                           const OwnDefinitions& own, const SpanRegistry& registry) {
    switch (spec.kind) {
    case DefinitionKind::NoDefinition: return std::nullopt;
    case DefinitionKind::Own: {
        auto text = own.find(own_key);
        if (!text) throw ConfigError("no Own definition registered for dataset '" + std::string(own_key) + "'");
        return text;
    }
    case DefinitionKind::Composed: return compose(spec, registry);
    }
    return std::nullopt;
}

std::vector<RunRecord> run_condition(const ConditionJob& job, const Dataset& dataset, Gateway& gateway,
                                     ResponseCache& cache, CacheStats* stats) {
    if (dataset.samples.empty()) throw ConfigError("dataset " + dataset.name + " is empty");
    if (job.runs < 1) throw ConfigError("runs must be >= 1");

    std::vector<std::string> prompts;
    std::vector<std::string> hashes;
    prompts.reserve(dataset.size());
    for (const auto& s : dataset.samples) {
        prompts.push_back(render_prompt(job.spec, job.definition, s.text));
        hashes.push_back(sha256_hex(prompts.back()));
    }

    const std::size_t n = dataset.size();
    const std::size_t total = n * static_cast<std::size_t>(job.runs);
    std::vector<RunRecord> out(total);
    for (std::size_t i = 0; i < total; ++i) {
        const auto& sample = dataset.samples[i % n];
        auto& r = out[i];
        r.key = {job.experiment, job.record_condition, gateway.config().id, static_cast<int>(i / n) + 1, sample.id};
        r.gold = sample.gold;
        r.functionality = sample.functionality;
        r.prompt_hash = hashes[i % n];
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (!abort.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= total) return;
            try {
                out[i] = cached_classify(cache, out[i], prompts[i % n], gateway, stats);
            } catch (const GatewayError& ex) {
                out[i].failed = true;
                out[i].error = ex.what();
                out[i].attempts = ex.attempts();
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                abort.store(true);
            }
        }
    };

    const auto threads = static_cast<std::size_t>(std::max(1, gateway.config().parallelism));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < std::min(threads, total); ++t) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);
    return out;
}

ExperimentRunner::ExperimentRunner(ExperimentConfig config) : config_(std::move(config)) {
    config_.validate();
    dataset_ = load_dataset(config_.dataset.path, config_.dataset.schema, config_.dataset.name);
    if (config_.dataset.sample_n) {
        dataset_ = stratified_sample(dataset_, *config_.dataset.sample_n, config_.dataset.sample_p_hs, config_.seed);
    }
    for (const auto& m : config_.models) gateways_.push_back(std::make_unique<Gateway>(m));
    cache_ = std::make_unique<ResponseCache>(directory() / "records.jsonl");
}

std::uint64_t ExperimentRunner::backend_calls() const {
    std::uint64_t n = 0;
    for (const auto& g : gateways_) n += g->backend_calls();
    return n;
}

std::vector<RunRecord> ExperimentRunner::execute(const DefinitionSpec& spec, const std::string& record_condition,
                                                 Gateway& gateway) {
    ConditionJob job{config_.id, spec, record_condition, definition_text(spec, own_key()), config_.runs};
    auto records = run_condition(job, dataset_, gateway, *cache_, &stats_);
    failures_ += static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [](const RunRecord& r) { return r.failed; }));
    return records;
}

Step1Report ExperimentRunner::run_step1() {
    std::vector<DefinitionSpec> specs{DefinitionSpec::no_definition(), DefinitionSpec::own()};
    for (auto& s : enumerate_step1()) specs.push_back(std::move(s));

    Step1Report report;
    report.quartile_method = config_.quartile_method;
    nlohmann::json selection = nlohmann::json::object();
    for (auto& gateway : gateways_) {
        Step1ModelReport m;
        m.model = gateway->config().id;
        auto& grouped = step1_records_[m.model];
        grouped.clear();
        for (const auto& spec : specs) {
            auto records = execute(spec, spec.name, *gateway);
            const auto text = definition_text(spec, own_key());
            std::optional<std::size_t> tokens;
            if (text) tokens = count_tokens(*text);
            m.rows.push_back(score_condition(spec, spec.name, records, tokens));
            grouped.push_back({spec.name, std::move(records)});
        }
        flag_outliers(m.rows, config_.quartile_method);
        summarize_step1(m);

        auto& js = selection[m.model];
        js["chosen"] = m.chosen;
        js["chosen_score"] = m.chosen_score;
        js["best"] = m.best;
        js["best_score"] = m.best_score;
        for (const auto& r : m.rows) {
            js["scores"][r.condition] = std::isfinite(r.mean_f1) ? nlohmann::json(r.mean_f1) : nlohmann::json();
        }
        write_text(directory() / ("sensitivity_step1_" + sanitize(m.model) + ".csv"),
                   sensitivity_csv(sensitivity_matrix(grouped)));
        report.models.push_back(std::move(m));
    }
    write_report(directory(), "report_step1", step1_report(report));
    write_text(directory() / kSelectionFile, selection.dump(2) + "\n");
    return report;
}

Step2Report ExperimentRunner::run_step2(const std::map<std::string, DefinitionSpec>& bases, const Step1Report* step1) {
    Step2Report report;
    report.quartile_method = config_.quartile_method;
    for (auto& gateway : gateways_) {
        Step2ModelReport m;
        m.model = gateway->config().id;
        auto base_it = bases.find(m.model);
        if (base_it == bases.end()) throw ConfigError("no Step-2 base definition for model " + m.model);
        const auto& base = base_it->second;
        m.base = base.name;
        if (step1) {
            for (const auto& s1 : step1->models) {
                if (s1.model != m.model) continue;
                m.best_score = s1.best_score;
                for (const auto& r : s1.rows) {
                    if (r.condition == base.name && std::isfinite(r.mean_f1)) m.chosen_score = r.mean_f1;
                }
            }
        }

        auto& grouped = step2_records_[m.model];
        grouped.clear();
        for (const auto& spec : enumerate_step2(base)) {
            const std::string record_condition = base.name + spec.name;
            auto records = execute(spec, record_condition, *gateway);
            const auto text = definition_text(spec, own_key());
            m.rows.push_back(score_condition(spec, record_condition, records, count_tokens(*text)));
            grouped.push_back({spec.name, std::move(records)});
        }
        flag_outliers(m.rows, config_.quartile_method);
        mark_step2(m);
        write_text(directory() / ("sensitivity_step2_" + sanitize(m.model) + ".csv"),
                   sensitivity_csv(sensitivity_matrix(grouped)));
        report.models.push_back(std::move(m));
    }
    write_report(directory(), "report_step2", step2_report(report));
    return report;
}

ConditionReport ExperimentRunner::run_conditions(const std::vector<std::string>& names) {
    std::vector<std::pair<DefinitionSpec, std::string>> specs;
    for (const auto& name : names) {
        auto spec = resolve_preset(name);
        std::string record_condition = name.starts_with('+') ? "HSB" + name : name;
        specs.emplace_back(std::move(spec), std::move(record_condition));
    }

    ConditionReport report;
    report.quartile_method = config_.quartile_method;
    for (auto& gateway : gateways_) {
        std::vector<ConditionScore> rows;
        std::vector<ConditionRecords> grouped;
        for (const auto& [spec, record_condition] : specs) {
            auto records = execute(spec, record_condition, *gateway);
            const auto text = definition_text(spec, own_key());
            std::optional<std::size_t> tokens;
            if (text) tokens = count_tokens(*text);
            rows.push_back(score_condition(spec, record_condition, records, tokens));
            grouped.push_back({record_condition, std::move(records)});
        }
        flag_outliers(rows, config_.quartile_method);
        if (grouped.size() >= 2) {
            write_text(directory() / ("sensitivity_conditions_" + sanitize(gateway->config().id) + ".csv"),
                       sensitivity_csv(sensitivity_matrix(grouped)));
        }
        report.models.emplace_back(gateway->config().id, std::move(rows));
    }
    write_report(directory(), "report_conditions", condition_report(report));
    return report;
}

std::optional<std::map<std::string, DefinitionSpec>> ExperimentRunner::load_selection() const {
    auto summary = load_step1_summary();
    if (!summary) return std::nullopt;
    std::map<std::string, DefinitionSpec> out;
    for (const auto& m : summary->models) out.emplace(m.model, resolve_preset(m.chosen));
    return out;
}

std::optional<Step1Report> ExperimentRunner::load_step1_summary() const {
    const auto path = directory() / kSelectionFile;
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    Step1Report report;
    try {
        const auto doc = nlohmann::json::parse(in);
        for (const auto& [model, js] : doc.items()) {
            Step1ModelReport m;
            m.model = model;
            m.chosen = js.at("chosen").get<std::string>();
            m.chosen_score = js.at("chosen_score").get<double>();
            m.best = js.at("best").get<std::string>();
            m.best_score = js.at("best_score").get<double>();
            for (const auto& [condition, score] : js.at("scores").items()) {
                ConditionScore row;
                row.condition = condition;
                row.record_condition = condition;
                row.mean_f1 = score.is_null() ? kNaN : score.get<double>();
                m.rows.push_back(std::move(row));
            }
            report.models.push_back(std::move(m));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError("cannot read " + path.string() + ": " + ex.what());
    }
    return report;
}

void ExperimentRunner::write_meta() const {
    nlohmann::json meta;
    meta["config"] = config_snapshot(config_);
    meta["seed"] = config_.seed;
    meta["runs"] = config_.runs;
    meta["dataset"] = {{"name", dataset_.name},
                       {"samples", dataset_.size()},
                       {"hs", dataset_.count(Gold::HS)},
                       {"nhs", dataset_.count(Gold::NHS)}};
    const auto& templates = PromptTemplates::builtin();
    meta["template_hashes"] = {{"with_definition", sha256_hex(templates.body(TemplateKind::WithDefinition))},
                               {"without_definition", sha256_hex(templates.body(TemplateKind::WithoutDefinition))}};
    meta["span_hash"] = sha256_hex(embedded_file("taxonomy/spans.json"));
    meta["own_definition_hash"] = sha256_hex(embedded_file("taxonomy/own_definitions.json"));
    meta["token_counter"] = std::string(kDefaultTokenCounterName);
    meta["f1_aggregation"] = "mean over runs (pooled also reported)";
    meta["refusal_convention"] = "wrong for the gold class";
    meta["quartile_method"] = std::string(to_string(config_.quartile_method));
    meta["outlier_fences"] = "strictly outside Q1 - 1.5 IQR, Q3 + 1.5 IQR";
    meta["sensitivity"] = "disagreement count averaged over runs";
    meta["failures"] = "excluded from F1, reported as coverage";
    nlohmann::json models = nlohmann::json::object();
    for (const auto& m : config_.models) {
        models[m.id] = {{"temperature", m.effective_temperature()}, {"max_tokens", m.max_tokens},
                        {"constrained", m.constrained}};
    }
    meta["generation"] = models;
    write_text(directory() / "meta.json", meta.dump(2) + "\n");
}

} // namespace hsdef
