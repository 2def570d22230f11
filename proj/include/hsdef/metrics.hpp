#pragma once

#include "hsdef/dataset.hpp"
#include "hsdef/errors.hpp"
#include "hsdef/records.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hsdef {

class MetricsError : public Error {
public:
    enum class Kind { EmptyRecords, RaggedRuns, TooFewScores, SampleMismatch, DegenerateInput };

    MetricsError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

// Gold (HS, NHS) x predicted (HS, NHS, Refusal) counts.
struct Confusion {
    std::array<std::array<std::size_t, 3>, 2> cells{};

    void add(Gold gold, Label predicted) { ++cells[static_cast<int>(gold)][static_cast<int>(predicted)]; }
    std::size_t at(Gold gold, Label predicted) const { return cells[static_cast<int>(gold)][static_cast<int>(predicted)]; }
    std::size_t total() const;
    std::size_t refusals() const { return at(Gold::HS, Label::Refusal) + at(Gold::NHS, Label::Refusal); }
    /// Gold HS answered NHS or Refusal.
    std::size_t false_negatives() const { return at(Gold::HS, Label::NHS) + at(Gold::HS, Label::Refusal); }
    /// Gold NHS answered HS or Refusal.
    std::size_t false_positives() const { return at(Gold::NHS, Label::HS) + at(Gold::NHS, Label::Refusal); }
};

struct F1Result {
    std::optional<double> f1_hs;   // nullopt when the class was skipped
    std::optional<double> f1_nhs;
    double macro = 0.0;
    std::vector<Gold> skipped;
    Confusion confusion;
};

// Refusals count against the gold class: they add a false negative for the
// gold class and are never a true positive. A class with no gold instances
// and no predictions is skipped; the macro score averages the others.
F1Result macro_f1(const Confusion& confusion);

/// Macro-F1 over non-failed records. Throws EmptyRecords if none remain.
F1Result macro_f1(std::span<const RunRecord> records);

/// Percentage of samples whose labels agree across every run. Samples with a
/// failure marker in any run are left out. Throws RaggedRuns when samples
/// have differing numbers of labels.
double robustness(std::span<const RunRecord> records);

struct Quartiles {
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
};

enum class QuartileMethod {
    ExclusiveMedian,  // medians of the halves, the overall median excluded for odd n
    Higher,           // order statistic at ceil(p (n - 1)), zero-based
};
std::string_view to_string(QuartileMethod m);
std::optional<QuartileMethod> parse_quartile_method(std::string_view s);

/// Quartiles with the median excluded from both halves when n is odd.
Quartiles exclusive_quartiles(std::span<const double> values);
Quartiles quartiles(std::span<const double> values, QuartileMethod method);

/// Indices (ascending) of values strictly outside the Tukey fences
/// Q1 - 1.5 IQR and Q3 + 1.5 IQR. Needs at least four values.
std::vector<std::size_t> iqr_outliers(std::span<const double> scores,
                                      QuartileMethod method = QuartileMethod::ExclusiveMedian);

enum class SensitivityMode { Count, Fraction };

struct ConditionRecords {
    std::string condition;
    std::vector<RunRecord> records;
};

struct SensitivityMatrix {
    std::vector<std::string> conditions;
    std::vector<std::vector<double>> values;
    SensitivityMode mode = SensitivityMode::Count;
};

/// Run-averaged disagreement between every pair of conditions. Pairs where
/// either side is a failure marker do not count as disagreement.
SensitivityMatrix sensitivity_matrix(std::span<const ConditionRecords> conditions,
                                     SensitivityMode mode = SensitivityMode::Count);

/// Sample Pearson correlation. Throws DegenerateInput on length < 2, unequal
/// lengths or zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

struct FunctionalityErrors {
    std::string functionality;
    MacroClass macro_class = MacroClass::HS;
    std::size_t samples = 0;
    double error_rate = 0.0;  // mean over runs
};

struct MacroClassErrors {
    MacroClass macro_class = MacroClass::HS;
    std::size_t samples = 0;
    double error_rate = 0.0;  // mean over runs
};

struct ErrorDistribution {
    std::size_t runs = 0;
    std::size_t samples = 0;
    std::size_t false_positives = 0;  // summed over runs
    std::size_t false_negatives = 0;
    std::size_t refusals = 0;
    double fp_per_run = 0.0;
    double fn_per_run = 0.0;
    bool has_functionality = false;
    std::vector<FunctionalityErrors> functionalities;  // sorted by name
    std::vector<MacroClassErrors> macro_classes;       // in MacroClass order, classes present only
};

/// Error breakdown for one (model, condition). Functionality levels are
/// filled only when every record carries a functionality.
ErrorDistribution error_distribution(std::span<const RunRecord> records);

} // namespace hsdef
