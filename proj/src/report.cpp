#include "hsdef/report.hpp"

#include "hsdef/csv.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace hsdef {

namespace {

std::string num(double v, int digits = 6) {
    if (!std::isfinite(v)) return "NA";
    return fmt::format("{:.{}f}", v, digits);
}

std::string pct(double fraction) { return std::isfinite(fraction) ? fmt::format("{:.2f}", 100.0 * fraction) : "NA"; }

std::string opt_num(const std::optional<double>& v, int digits = 4) { return v ? num(*v, digits) : "NA"; }

std::string opt_size(const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : ""; }

std::string runs_field(const std::vector<double>& runs) {
    std::string out;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (i) out += ';';
        out += num(runs[i]);
    }
    return out;
}

std::string_view kind_name(DefinitionKind k) {
    switch (k) {
    case DefinitionKind::NoDefinition: return "none";
    case DefinitionKind::Own: return "own";
    case DefinitionKind::Composed: return "composed";
    }
    return "?";
}

const std::vector<std::string> kScoreColumns{"f1_runs",  "f1_mean",    "f1_pooled",  "robustness",
                                             "refusals", "fp_per_run", "fn_per_run", "coverage",
                                             "f1_outlier", "robustness_outlier"};

std::vector<std::string> score_fields(const ConditionScore& s) {
    return {runs_field(s.run_f1),        num(s.mean_f1),        num(s.pooled_f1),
            num(s.robustness, 4),        std::to_string(s.refusals), num(s.fp_per_run, 4),
            num(s.fn_per_run, 4),        num(s.coverage(), 4),  s.f1_outlier ? "1" : "0",
            s.robustness_outlier ? "1" : "0"};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

std::string csv_with_header(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows,
                            QuartileMethod quartiles = QuartileMethod::ExclusiveMedian) {
    std::ostringstream out;
    out << conventions_line(quartiles) << '\n';
    csv::write_row(out, header);
    for (const auto& r : rows) csv::write_row(out, r);
    return out.str();
}

std::string md_row(const std::vector<std::string>& cells) {
    std::string out = "|";
    for (const auto& c : cells) out += " " + c + " |";
    return out + "\n";
}

std::string md_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::string out = md_row(header);
    out += "|";
    for (std::size_t i = 0; i < header.size(); ++i) out += " --- |";
    out += "\n";
    for (const auto& r : rows) out += md_row(r);
    return out;
}

std::string md_preamble(std::string_view title, QuartileMethod quartiles = QuartileMethod::ExclusiveMedian) {
    return fmt::format("# {}\n\n{}\n\n", title, conventions_line(quartiles).substr(2));
}

std::string underline(std::string cell, int times) {
    for (int i = 0; i < times; ++i) cell = "<u>" + cell + "</u>";
    return cell;
}

std::string detail_md(std::string_view model, const std::vector<ConditionScore>& rows) {
    std::vector<std::vector<std::string>> body;
    for (const auto& r : rows) {
        body.push_back({r.condition, runs_field(r.run_f1), pct(r.mean_f1), pct(r.pooled_f1),
                        r.robustness_outlier ? underline(num(r.robustness, 2), 1) : num(r.robustness, 2),
                        std::to_string(r.refusals), num(r.fp_per_run, 2), num(r.fn_per_run, 2), pct(r.coverage())});
    }
    return fmt::format("## {}\n\n", model) +
           md_table({"Condition", "F1 per run", "F1 mean", "F1 pooled", "Robustness", "Refusals", "FP/run", "FN/run",
                     "Coverage %"},
                    body) +
           "\n";
}

using Grouped = std::map<std::string, std::map<std::string, std::vector<RunRecord>>>;

Grouped group(std::span<const RunRecord> records) {
    Grouped g;
    for (const auto& r : records) g[r.key.model][r.key.condition].push_back(r);
    return g;
}

std::string fraction(double v) { return num(v); }

} // namespace

std::string conventions_line(QuartileMethod quartiles) {
    return fmt::format("# conventions: f1=macro mean over runs (pooled also given); refusal=wrong for gold class; "
                       "quartiles={}; outliers=strictly outside 1.5 IQR fences; tokens=whitespace; "
                       "sensitivity=disagreements averaged over runs; failures=excluded from F1 and shown as coverage",
                       to_string(quartiles));
}

ReportText step1_report(const Step1Report& report) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& m : report.models) {
        for (const auto& r : m.rows) {
            rows.push_back(concat({m.model, r.condition, std::string(kind_name(r.kind)),
                                   std::to_string(r.element_count), opt_size(r.tokens)},
                                  concat(score_fields(r), {r.condition == m.chosen ? "1" : "0",
                                                           r.condition == m.best ? "1" : "0"})));
        }
    }
    ReportText text;
    text.csv = csv_with_header(
        concat(concat({"model", "condition", "kind", "elements", "tokens"}, kScoreColumns), {"chosen", "best"}), rows,
        report.quartile_method);

    // Conditions as rows, models as columns.
    std::vector<std::string> header{"Definition", "Tokens"};
    for (const auto& m : report.models) header.push_back(m.model);
    std::vector<std::vector<std::string>> body;
    if (!report.models.empty()) {
        const auto& first = report.models.front();
        for (std::size_t i = 0; i < first.rows.size(); ++i) {
            std::vector<std::string> cells{first.rows[i].condition, opt_size(first.rows[i].tokens)};
            for (const auto& m : report.models) {
                if (i >= m.rows.size()) {
                    cells.push_back("NA");
                    continue;
                }
                const auto& r = m.rows[i];
                std::string cell = pct(r.mean_f1);
                if (r.condition == m.chosen) cell = underline(cell, 1);
                if (r.condition == m.best) cell = "**" + cell + "**";
                cells.push_back(cell);
            }
            body.push_back(std::move(cells));
        }
        std::vector<std::string> all{"Pearson Corr. (tokens)", ""};
        std::vector<std::string> family{"Pearson Corr. (tokens, HSB family)", ""};
        for (const auto& m : report.models) {
            all.push_back(opt_num(m.pearson_all));
            family.push_back(opt_num(m.pearson_hsb_family));
        }
        body.push_back(std::move(all));
        body.push_back(std::move(family));
    }
    text.md = md_preamble("Step 1: macro-F1 (%)", report.quartile_method) + md_table(header, body) +
              "\nUnderlined: best crafted definition, carried to Step 2. Bold: best overall.\n\n";
    for (const auto& m : report.models) text.md += detail_md(m.model, m.rows);
    return text;
}

ReportText step2_report(const Step2Report& report) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& m : report.models) {
        for (const auto& r : m.rows) {
            rows.push_back(concat({m.model, m.base, r.condition, r.record_condition, std::to_string(r.element_count),
                                   opt_size(r.tokens)},
                                  concat(score_fields(r), {std::to_string(r.underline)})));
        }
    }
    ReportText text;
    text.csv = csv_with_header(
        concat(concat({"model", "base", "condition", "record_condition", "elements", "tokens"}, kScoreColumns),
               {"underline"}),
        rows, report.quartile_method);

    std::vector<std::string> header{"Definition"};
    for (const auto& m : report.models) header.push_back(m.model + " (+ = " + m.base + ")");
    std::vector<std::vector<std::string>> body;
    if (!report.models.empty()) {
        for (std::size_t i = 0; i < report.models.front().rows.size(); ++i) {
            std::vector<std::string> cells{report.models.front().rows[i].condition};
            for (const auto& m : report.models) {
                if (i >= m.rows.size()) {
                    cells.push_back("NA");
                    continue;
                }
                const auto& r = m.rows[i];
                double column_best = -1.0;
                for (const auto& other : m.rows) {
                    if (std::isfinite(other.mean_f1)) column_best = std::max(column_best, other.mean_f1);
                }
                std::string cell = underline(pct(r.mean_f1), r.underline);
                if (std::isfinite(r.mean_f1) && r.mean_f1 == column_best) cell = "**" + cell + "**";
                cells.push_back(cell);
            }
            body.push_back(std::move(cells));
        }
    }
    text.md = md_preamble("Step 2: macro-F1 (%)", report.quartile_method) + md_table(header, body) +
              "\nSingle underline: above the Step-1 score of the base. Double underline: above the best Step-1 "
              "score. Bold: best in column.\n\n";
    for (const auto& m : report.models) text.md += detail_md(m.model, m.rows);
    return text;
}

ReportText condition_report(const ConditionReport& report) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& [model, scores] : report.models) {
        for (const auto& r : scores) {
            rows.push_back(concat({model, r.record_condition, std::string(kind_name(r.kind)),
                                   std::to_string(r.element_count), opt_size(r.tokens)},
                                  score_fields(r)));
        }
    }
    ReportText text;
    text.csv = csv_with_header(concat({"model", "condition", "kind", "elements", "tokens"}, kScoreColumns), rows,
                               report.quartile_method);
    text.md = md_preamble("Conditions: macro-F1 (%)", report.quartile_method);
    for (const auto& [model, scores] : report.models) text.md += detail_md(model, scores);
    return text;
}

std::string sensitivity_csv(const SensitivityMatrix& matrix) {
    std::ostringstream out;
    out << conventions_line() << (matrix.mode == SensitivityMode::Count ? "; mode=count" : "; mode=fraction")
        << '\n';
    std::vector<std::string> header{"condition"};
    header.insert(header.end(), matrix.conditions.begin(), matrix.conditions.end());
    csv::write_row(out, header);
    for (std::size_t i = 0; i < matrix.conditions.size(); ++i) {
        std::vector<std::string> row{matrix.conditions[i]};
        for (double v : matrix.values[i]) row.push_back(num(v));
        csv::write_row(out, row);
    }
    return out.str();
}

std::string_view to_string(Breakdown b) {
    switch (b) {
    case Breakdown::Class: return "class";
    case Breakdown::Functionality: return "functionality";
    case Breakdown::MacroClass: return "macroclass";
    case Breakdown::Sensitivity: return "sensitivity";
    }
    return "?";
}

std::optional<Breakdown> parse_breakdown(std::string_view s) {
    for (auto b : {Breakdown::Class, Breakdown::Functionality, Breakdown::MacroClass, Breakdown::Sensitivity}) {
        if (to_string(b) == s) return b;
    }
    return std::nullopt;
}

ReportText records_report(std::span<const RunRecord> records, Breakdown by, SensitivityMode mode) {
    if (records.empty()) throw ConfigError("no records to report on");
    const auto grouped = group(records);
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> md_header;
    std::vector<std::vector<std::string>> md_rows;
    std::string md_extra;

    switch (by) {
    case Breakdown::Class:
        header = {"model", "condition", "runs", "samples", "false_positives", "false_negatives",
                  "fp_per_run", "fn_per_run", "refusals"};
        md_header = {"Model", "Condition", "Runs", "Samples", "FP", "FN", "FP/run", "FN/run", "Refusals"};
        for (const auto& [model, conditions] : grouped) {
            for (const auto& [condition, rs] : conditions) {
                const auto d = error_distribution(rs);
                std::vector<std::string> row{model,
                                             condition,
                                             std::to_string(d.runs),
                                             std::to_string(d.samples),
                                             std::to_string(d.false_positives),
                                             std::to_string(d.false_negatives),
                                             num(d.fp_per_run, 4),
                                             num(d.fn_per_run, 4),
                                             std::to_string(d.refusals)};
                rows.push_back(row);
                md_rows.push_back(row);
            }
        }
        break;
    case Breakdown::Functionality:
    case Breakdown::MacroClass: {
        const bool functional = by == Breakdown::Functionality;
        header = functional ? std::vector<std::string>{"model", "condition", "functionality", "macro_class",
                                                       "samples", "error_rate"}
                            : std::vector<std::string>{"model", "condition", "macro_class", "samples", "error_rate"};
        md_header = functional
                        ? std::vector<std::string>{"Model", "Condition", "Functionality", "Macro class", "Samples",
                                                   "Error %"}
                        : std::vector<std::string>{"Model", "Condition", "Macro class", "Samples", "Error %"};
        for (const auto& [model, conditions] : grouped) {
            for (const auto& [condition, rs] : conditions) {
                const auto d = error_distribution(rs);
                if (!d.has_functionality) {
                    throw ConfigError("records for " + model + "/" + condition + " carry no functionality column");
                }
                if (functional) {
                    for (const auto& f : d.functionalities) {
                        rows.push_back({model, condition, f.functionality, std::string(to_string(f.macro_class)),
                                        std::to_string(f.samples), fraction(f.error_rate)});
                        md_rows.push_back({model, condition, f.functionality, std::string(to_string(f.macro_class)),
                                           std::to_string(f.samples), pct(f.error_rate)});
                    }
                    continue;
                }
                for (std::size_t i = 0; i < kMacroClassCount; ++i) {
                    const auto mc = static_cast<MacroClass>(i);
                    auto it = std::find_if(d.macro_classes.begin(), d.macro_classes.end(),
                                           [mc](const MacroClassErrors& e) { return e.macro_class == mc; });
                    const std::string samples = it == d.macro_classes.end() ? "0" : std::to_string(it->samples);
                    const double rate = it == d.macro_classes.end() ? std::nan("") : it->error_rate;
                    rows.push_back({model, condition, std::string(to_string(mc)), samples, fraction(rate)});
                    md_rows.push_back({model, condition, std::string(to_string(mc)), samples, pct(rate)});
                }
            }
        }
        break;
    }
    case Breakdown::Sensitivity:
        header = {"model", "condition_a", "condition_b", "value"};
        for (const auto& [model, conditions] : grouped) {
            if (conditions.size() < 2) {
                throw ConfigError("sensitivity needs at least two conditions; model " + model + " has " +
                                  std::to_string(conditions.size()));
            }
            std::vector<ConditionRecords> input;
            for (const auto& [condition, rs] : conditions) input.push_back({condition, rs});
            const auto m = sensitivity_matrix(input, mode);
            for (std::size_t i = 0; i < m.conditions.size(); ++i) {
                for (std::size_t j = 0; j < m.conditions.size(); ++j) {
                    rows.push_back({model, m.conditions[i], m.conditions[j], num(m.values[i][j])});
                }
            }
            std::vector<std::string> mh{""};
            mh.insert(mh.end(), m.conditions.begin(), m.conditions.end());
            std::vector<std::vector<std::string>> mb;
            for (std::size_t i = 0; i < m.conditions.size(); ++i) {
                std::vector<std::string> row{m.conditions[i]};
                for (double v : m.values[i]) row.push_back(num(v, 2));
                mb.push_back(std::move(row));
            }
            md_extra += fmt::format("## {}\n\n", model) + md_table(mh, mb) + "\n";
        }
        break;
    }

    ReportText text;
    text.csv = csv_with_header(header, rows);
    text.md = md_preamble(fmt::format("Errors by {}", to_string(by)));
    if (by == Breakdown::Sensitivity) {
        text.md = md_preamble(std::string("Sensitivity (") +
                              (mode == SensitivityMode::Count ? "count" : "fraction") + ")") +
                  md_extra;
    } else {
        text.md += md_table(md_header, md_rows);
    }
    return text;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeError("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw RuntimeError("write to " + path.string() + " failed");
}

void write_report(const std::filesystem::path& dir, std::string_view stem, const ReportText& text) {
    write_text(dir / (std::string(stem) + ".csv"), text.csv);
    write_text(dir / (std::string(stem) + ".md"), text.md);
}

} // namespace hsdef
