#pragma once

#include "hsdef/experiment.hpp"
#include "hsdef/metrics.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace hsdef {

// Machine-readable CSV plus a Markdown rendering of the same table.
struct ReportText {
    std::string csv;
    std::string md;
};

/// First line of every CSV report, naming the conventions in force.
std::string conventions_line(QuartileMethod quartiles = QuartileMethod::ExclusiveMedian);

ReportText step1_report(const Step1Report& report);
ReportText step2_report(const Step2Report& report);
ReportText condition_report(const ConditionReport& report);

/// Square matrix with condition names as header row and first column.
std::string sensitivity_csv(const SensitivityMatrix& matrix);

enum class Breakdown { Class, Functionality, MacroClass, Sensitivity };
std::string_view to_string(Breakdown b);
std::optional<Breakdown> parse_breakdown(std::string_view s);

/// Breakdown of a record set grouped by (model, condition). Throws
/// ConfigError when functionality data is missing for the functionality
/// levels, or when a model has fewer than two conditions for sensitivity.
ReportText records_report(std::span<const RunRecord> records, Breakdown by,
                          SensitivityMode mode = SensitivityMode::Count);

/// Writes `{stem}.csv` and `{stem}.md` into `dir`.
void write_report(const std::filesystem::path& dir, std::string_view stem, const ReportText& text);
void write_text(const std::filesystem::path& path, std::string_view text);

} // namespace hsdef
