#include "hsdef/cli.hpp"

#include "hsdef/csv.hpp"
#include "hsdef/embedded.hpp"
#include "hsdef/experiment.hpp"
#include "hsdef/prompt.hpp"
#include "hsdef/report.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <sstream>

namespace hsdef {

namespace {

struct ComposeArgs {
    std::string preset;
    std::string ce;
    std::string base = "HSB";
    std::string dataset;
    bool tokens = false;
};

struct ValidateArgs {
    std::string config;
    std::string preset;
    std::string ce;
};

struct SampleArgs {
    std::string config;
    std::size_t n = 0;
    double p_hs = -1.0;
    std::optional<std::uint64_t> seed;
    std::string out;
};

struct RunArgs {
    std::string config;
    bool step1 = false;
    bool step2 = false;
    bool full = false;
    std::string base;
    std::string output_dir;
};

struct ReportArgs {
    std::string records;
    std::string by = "class";
    std::string out = ".";
    std::string mode = "count";
};

struct MatrixArgs {
    std::string source = "literature";
};

void print_violations(const ValidationResult& result, std::ostream& err) {
    for (const auto& v : result.violations) err << "error: " << v.message() << '\n';
}

DefinitionSpec spec_from_args(const std::string& preset, const std::string& ce, const std::string& base,
                              std::ostream& err, bool& invalid) {
    invalid = false;
    if (!preset.empty() && !ce.empty()) throw ConfigError("use either --preset or --ce, not both");
    if (!preset.empty()) return resolve_preset(preset, base);
    if (ce.empty()) throw ConfigError("one of --preset or --ce is required");
    const auto elements = ElementSet::parse_list(ce);
    const auto result = validate_spec(elements);
    if (!result.valid()) {
        print_violations(result, err);
        invalid = true;
        return {};
    }
    std::string name;
    for (auto e : elements.elements()) name += (name.empty() ? "" : "_") + std::string(to_string(e));
    return DefinitionSpec::composed(name, elements);
}

int cmd_compose(const ComposeArgs& a, std::ostream& out, std::ostream& err) {
    bool invalid = false;
    const auto spec = spec_from_args(a.preset, a.ce, a.base, err, invalid);
    if (invalid) return 1;
    if (spec.kind == DefinitionKind::Own && a.dataset.empty()) {
        throw ConfigError("the Own preset needs --dataset");
    }
    const auto text = definition_text(spec, a.dataset).value_or("");
    out << text << '\n';
    if (a.tokens) out << "tokens=" << count_tokens(text) << '\n';
    return 0;
}

int cmd_validate(const ValidateArgs& a, std::ostream& out, std::ostream& err) {
    if (!a.config.empty()) {
        const auto cfg = load_config(a.config);
        out << "config " << a.config << " is valid: experiment " << cfg.id << ", " << cfg.models.size()
            << " model(s), " << cfg.runs << " run(s)\n";
        return 0;
    }
    bool invalid = false;
    const auto spec = spec_from_args(a.preset, a.ce, "HSB", err, invalid);
    if (invalid) return 1;
    out << spec.name << ": valid (" << spec.elements.str() << ")\n";
    return 0;
}

int cmd_sample(const SampleArgs& a, std::ostream& out, std::ostream& err) {
    const auto cfg = load_config(a.config);
    const std::size_t n = a.n ? a.n : cfg.dataset.sample_n.value_or(0);
    if (n == 0) throw ConfigError("no sample size: pass --n or set dataset.sample.n");
    const double p = a.p_hs >= 0.0 ? a.p_hs : cfg.dataset.sample_p_hs;
    const auto full = load_dataset(cfg.dataset.path, cfg.dataset.schema, cfg.dataset.name);
    const auto drawn = stratified_sample(full, n, p, a.seed.value_or(cfg.seed));
    if (a.out.empty()) {
        write_dataset_csv(drawn, out);
    } else {
        std::ostringstream buf;
        write_dataset_csv(drawn, buf);
        write_text(a.out, buf.str());
        out << a.out << '\n';
    }
    err << "sampled " << drawn.size() << " (HS " << drawn.count(Gold::HS) << ", NHS " << drawn.count(Gold::NHS)
        << ")\n";
    return 0;
}

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
    auto cfg = load_config(a.config);
    if (!a.output_dir.empty()) cfg.output_dir = a.output_dir;
    if (static_cast<int>(a.step1) + static_cast<int>(a.step2) + static_cast<int>(a.full) > 1) {
        throw ConfigError("choose one of --step1, --step2, --full");
    }
    ExperimentRunner runner(std::move(cfg));

    auto report_counters = [&] {
        err << "backend_calls=" << runner.backend_calls() << " cache_hits=" << runner.cache_hits() << '\n';
    };
    auto explicit_bases = [&]() -> std::optional<std::map<std::string, DefinitionSpec>> {
        if (a.base.empty()) return std::nullopt;
        std::map<std::string, DefinitionSpec> bases;
        const auto spec = resolve_preset(a.base);
        for (const auto& m : runner.config().models) bases.emplace(m.id, spec);
        return bases;
    };

    runner.write_meta();
    try {
        if (runner.config().conditions) {
            runner.run_conditions(*runner.config().conditions);
        } else if (a.step1) {
            runner.run_step1();
        } else if (a.step2) {
            auto bases = explicit_bases();
            if (!bases) bases = runner.load_selection();
            if (!bases) throw ConfigError("--step2 needs --base or a completed Step 1 for this experiment");
            const auto step1 = runner.load_step1_summary();
            runner.run_step2(*bases, step1 ? &*step1 : nullptr);
        } else {
            const auto step1 = runner.run_step1();
            auto bases = explicit_bases();
            if (!bases) {
                bases.emplace();
                for (const auto& m : step1.models) bases->emplace(m.model, select_best_crafted(step1, m.model));
            }
            runner.run_step2(*bases, &step1);
        }
    } catch (...) {
        report_counters();
        throw;
    }
    report_counters();
    out << runner.directory().string() << '\n';
    if (runner.failures() > 0) {
        err << "error: " << runner.failures() << " request(s) failed; partial results kept in "
            << runner.directory().string() << '\n';
        return 2;
    }
    return 0;
}

int cmd_report(const ReportArgs& a, std::ostream& out, std::ostream&) {
    const auto by = parse_breakdown(a.by);
    if (!by) throw ConfigError("--by must be class, functionality, macroclass or sensitivity");
    if (a.mode != "count" && a.mode != "fraction") throw ConfigError("--mode must be count or fraction");
    const auto mode = a.mode == "count" ? SensitivityMode::Count : SensitivityMode::Fraction;
    if (!std::filesystem::exists(a.records)) throw ConfigError("records file not found: " + a.records);
    const auto records = read_records(a.records);
    const auto text = records_report(records, *by, mode);
    const std::filesystem::path dir = a.out;
    const std::string stem = "report_by_" + std::string(to_string(*by));
    write_report(dir, stem, text);
    out << (dir / (stem + ".csv")).string() << '\n' << (dir / (stem + ".md")).string() << '\n';

    if (*by == Breakdown::Sensitivity) {
        std::map<std::string, std::map<std::string, std::vector<RunRecord>>> grouped;
        for (const auto& r : records) grouped[r.key.model][r.key.condition].push_back(r);
        for (const auto& [model, conditions] : grouped) {
            std::vector<ConditionRecords> input;
            for (const auto& [condition, rs] : conditions) input.push_back({condition, rs});
            const auto path = dir / ("sensitivity_" + model + ".csv");
            write_text(path, sensitivity_csv(sensitivity_matrix(input, mode)));
            out << path.string() << '\n';
        }
    }
    return 0;
}

int cmd_matrix(const MatrixArgs& a, std::ostream& out) {
    if (a.source == "literature") {
        std::istringstream in{std::string(embedded_file("taxonomy/literature_matrix.csv"))};
        csv::Reader reader(in);
        std::vector<std::vector<std::string>> rows;
        while (auto row = reader.next()) rows.push_back(row->fields);
        if (rows.empty()) throw ConfigError("literature matrix is empty");
        std::vector<int> totals(rows.front().size(), 0);
        for (const auto& r : rows) {
            csv::write_row(out, r);
            if (&r == &rows.front()) continue;
            for (std::size_t i = 1; i < r.size() && i < totals.size(); ++i) totals[i] += r[i] == "1";
        }
        std::vector<std::string> total_row{"total"};
        for (std::size_t i = 1; i < totals.size(); ++i) total_row.push_back(std::to_string(totals[i]));
        csv::write_row(out, total_row);
        return 0;
    }
    if (a.source == "presets") {
        std::vector<Element> columns;
        for (auto e : kAllElements) {
            if (is_source_element(e)) columns.push_back(e);
        }
        std::vector<std::string> header{"preset"};
        for (auto e : columns) header.emplace_back(to_string(e));
        csv::write_row(out, header);
        auto specs = enumerate_step1();
        for (auto& s : enumerate_step2(resolve_preset("HSB"))) specs.push_back(std::move(s));
        for (const auto& spec : specs) {
            std::vector<std::string> row{spec.name};
            for (auto e : columns) {
                bool present = spec.elements.contains(e);
                if ((e == Element::sPI || e == Element::iPI) && spec.elements.contains(Element::PI)) present = true;
                row.push_back(present ? "1" : "0");
            }
            csv::write_row(out, row);
        }
        return 0;
    }
    throw ConfigError("--source must be literature or presets");
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Hate-speech definition ablation harness"};
    app.name(args.empty() ? "hsdef" : args.front());
    app.require_subcommand(1);

    ComposeArgs compose_args;
    auto* compose = app.add_subcommand("compose", "Print the definition text for a preset or element list");
    compose->add_option("--preset", compose_args.preset, "Preset name, e.g. HSB, HSB_EDT, +LAA_PI, NO, Own");
    compose->add_option("--ce", compose_args.ce, "Comma-separated conceptual elements, e.g. FoC,T,PC");
    compose->add_option("--base", compose_args.base, "Base for +X presets")->capture_default_str();
    compose->add_option("--dataset", compose_args.dataset, "Dataset key for the Own preset");
    compose->add_flag("--tokens", compose_args.tokens, "Also print the whitespace token count");

    ValidateArgs validate_args;
    auto* validate = app.add_subcommand("validate", "Check an element list, a preset or a config file");
    validate->add_option("config", validate_args.config, "Experiment config (YAML)");
    validate->add_option("--preset", validate_args.preset, "Preset name");
    validate->add_option("--ce", validate_args.ce, "Comma-separated conceptual elements");

    SampleArgs sample_args;
    auto* sample = app.add_subcommand("sample", "Draw a stratified sample of the configured dataset");
    sample->add_option("config", sample_args.config, "Experiment config (YAML)")->required();
    sample->add_option("--n", sample_args.n, "Sample size (default: dataset.sample.n)");
    sample->add_option("--p-hs", sample_args.p_hs, "Proportion of hate-speech samples");
    sample->add_option("--seed", sample_args.seed, "Seed (default: config seed)");
    sample->add_option("--out", sample_args.out, "Output CSV (default: standard output)");

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "Run an experiment");
    run->add_option("config", run_args.config, "Experiment config (YAML)")->required();
    run->add_flag("--step1", run_args.step1, "Run Step 1 only");
    run->add_flag("--step2", run_args.step2, "Run Step 2 only");
    run->add_flag("--full", run_args.full, "Run Step 1, select, then Step 2 (default)");
    run->add_option("--base", run_args.base, "Step-2 base definition for every model");
    run->add_option("--output-dir", run_args.output_dir, "Override output_dir from the config");

    ReportArgs report_args;
    auto* report = app.add_subcommand("report", "Break down a records file");
    report->add_option("records", report_args.records, "records.jsonl")->required();
    report->add_option("--by", report_args.by, "class, functionality, macroclass or sensitivity")
        ->capture_default_str();
    report->add_option("--out", report_args.out, "Output directory")->capture_default_str();
    report->add_option("--mode", report_args.mode, "Sensitivity mode: count or fraction")->capture_default_str();

    MatrixArgs matrix_args;
    auto* matrix = app.add_subcommand("matrix", "Print an element-presence matrix as CSV");
    matrix->add_option("--source", matrix_args.source, "literature or presets")->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << app.version();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    try {
        if (compose->parsed()) return cmd_compose(compose_args, out, err);
        if (validate->parsed()) return cmd_validate(validate_args, out, err);
        if (sample->parsed()) return cmd_sample(sample_args, out, err);
        if (run->parsed()) return cmd_run(run_args, out, err);
        if (report->parsed()) return cmd_report(report_args, out, err);
        if (matrix->parsed()) return cmd_matrix(matrix_args, out);
    } catch (const Error& ex) {
        err << "error: " << ex.what() << '\n';
        return ex.is_config_error() ? 1 : 2;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return 2;
    }
    return 1;
}

} // namespace hsdef
