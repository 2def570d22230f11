#include "hsdef/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <utility>

namespace hsdef {

namespace {

std::optional<double> class_f1(std::size_t tp, std::size_t fp, std::size_t fn) {
    const std::size_t denom = 2 * tp + fp + fn;
    if (denom == 0) return std::nullopt;
    return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

double median_of(std::span<const double> sorted) {
    const auto n = sorted.size();
    return n % 2 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
}

std::string key_of(const RunRecord& r) { return std::to_string(r.key.run) + "\x1f" + r.key.sample; }

} // namespace

std::size_t Confusion::total() const {
    std::size_t n = 0;
    for (const auto& row : cells)
        for (auto c : row) n += c;
    return n;
}

F1Result macro_f1(const Confusion& c) {
    F1Result result;
    result.confusion = c;
    const std::size_t tp_hs = c.at(Gold::HS, Label::HS);
    const std::size_t tp_nhs = c.at(Gold::NHS, Label::NHS);
    result.f1_hs = class_f1(tp_hs, c.at(Gold::NHS, Label::HS), c.false_negatives());
    result.f1_nhs = class_f1(tp_nhs, c.at(Gold::HS, Label::NHS), c.at(Gold::NHS, Label::HS) + c.at(Gold::NHS, Label::Refusal));

    double sum = 0.0;
    int classes = 0;
    if (result.f1_hs) {
        sum += *result.f1_hs;
        ++classes;
    } else {
        result.skipped.push_back(Gold::HS);
    }
    if (result.f1_nhs) {
        sum += *result.f1_nhs;
        ++classes;
    } else {
        result.skipped.push_back(Gold::NHS);
    }
    if (classes == 0) throw MetricsError(MetricsError::Kind::EmptyRecords, "EmptyRecords: no predictions to score");
    result.macro = sum / classes;
    return result;
}

F1Result macro_f1(std::span<const RunRecord> records) {
    Confusion c;
    for (const auto& r : records) {
        if (!r.failed) c.add(r.gold, r.parsed);
    }
    if (c.total() == 0) throw MetricsError(MetricsError::Kind::EmptyRecords, "EmptyRecords: no scored records");
    return macro_f1(c);
}

double robustness(std::span<const RunRecord> records) {
    std::map<std::string, std::vector<const RunRecord*>> by_sample;
    for (const auto& r : records) by_sample[r.key.sample].push_back(&r);

    std::optional<std::size_t> runs;
    std::size_t consistent = 0;
    std::size_t counted = 0;
    for (const auto& [sample, rs] : by_sample) {
        if (std::any_of(rs.begin(), rs.end(), [](const RunRecord* r) { return r->failed; })) continue;
        std::set<int> distinct_runs;
        for (const auto* r : rs) distinct_runs.insert(r->key.run);
        if (distinct_runs.size() != rs.size()) {
            throw MetricsError(MetricsError::Kind::RaggedRuns, "RaggedRuns: sample " + sample + " repeats a run index");
        }
        if (!runs) runs = rs.size();
        if (rs.size() != *runs) {
            throw MetricsError(MetricsError::Kind::RaggedRuns, "RaggedRuns: sample " + sample + " has " +
                                                                  std::to_string(rs.size()) + " labels, expected " +
                                                                  std::to_string(*runs));
        }
        ++counted;
        const Label first = rs.front()->parsed;
        if (std::all_of(rs.begin(), rs.end(), [first](const RunRecord* r) { return r->parsed == first; })) {
            ++consistent;
        }
    }
    if (counted == 0) throw MetricsError(MetricsError::Kind::EmptyRecords, "EmptyRecords: no scored samples");
    return 100.0 * static_cast<double>(consistent) / static_cast<double>(counted);
}

Quartiles exclusive_quartiles(std::span<const double> values) {
    if (values.size() < 4) {
        throw MetricsError(MetricsError::Kind::TooFewScores,
                           "TooFewScores: need at least 4 values, got " + std::to_string(values.size()));
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n = sorted.size();
    const auto half = n / 2;
    std::span<const double> all(sorted);
    return {median_of(all.first(half)), median_of(all), median_of(all.last(half))};
}

std::string_view to_string(QuartileMethod m) {
    return m == QuartileMethod::ExclusiveMedian ? "exclusive" : "higher";
}

std::optional<QuartileMethod> parse_quartile_method(std::string_view s) {
    if (s == "exclusive") return QuartileMethod::ExclusiveMedian;
    if (s == "higher") return QuartileMethod::Higher;
    return std::nullopt;
}

Quartiles quartiles(std::span<const double> values, QuartileMethod method) {
    if (method == QuartileMethod::ExclusiveMedian) return exclusive_quartiles(values);
    if (values.size() < 4) {
        throw MetricsError(MetricsError::Kind::TooFewScores,
                           "TooFewScores: need at least 4 values, got " + std::to_string(values.size()));
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n = sorted.size();
    // ceil(p (n - 1)) for p = 1/4, 1/2, 3/4 in integer arithmetic.
    auto at = [&](std::size_t num) { return sorted[(num * (n - 1) + 3) / 4]; };
    return {at(1), at(2), at(3)};
}

std::vector<std::size_t> iqr_outliers(std::span<const double> scores, QuartileMethod method) {
    const auto q = quartiles(scores, method);
    const double iqr = q.q3 - q.q1;
    const double low = q.q1 - 1.5 * iqr;
    const double high = q.q3 + 1.5 * iqr;
    std::vector<std::size_t> flagged;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] < low || scores[i] > high) flagged.push_back(i);
    }
    return flagged;
}

SensitivityMatrix sensitivity_matrix(std::span<const ConditionRecords> conditions, SensitivityMode mode) {
    SensitivityMatrix m;
    m.mode = mode;
    const auto k = conditions.size();
    m.values.assign(k, std::vector<double>(k, 0.0));

    std::vector<std::map<std::string, const RunRecord*>> tables(k);
    std::set<int> runs;
    std::set<std::string> samples;
    for (std::size_t i = 0; i < k; ++i) {
        m.conditions.push_back(conditions[i].condition);
        for (const auto& r : conditions[i].records) {
            if (!tables[i].emplace(key_of(r), &r).second) {
                throw MetricsError(MetricsError::Kind::SampleMismatch, "SampleMismatch: condition " +
                                                                           conditions[i].condition + " repeats run " +
                                                                           std::to_string(r.key.run) + " of sample " +
                                                                           r.key.sample);
            }
            runs.insert(r.key.run);
            samples.insert(r.key.sample);
        }
    }
    for (std::size_t i = 1; i < k; ++i) {
        const bool same = tables[i].size() == tables[0].size() &&
                          std::equal(tables[i].begin(), tables[i].end(), tables[0].begin(),
                                     [](const auto& a, const auto& b) { return a.first == b.first; });
        if (!same) {
            throw MetricsError(MetricsError::Kind::SampleMismatch, "SampleMismatch: conditions " + m.conditions[0] +
                                                                       " and " + m.conditions[i] +
                                                                       " do not cover the same (run, sample) pairs");
        }
    }
    if (k == 0 || tables[0].empty()) return m;

    const double run_count = static_cast<double>(runs.size());
    const double sample_count = static_cast<double>(samples.size());
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            std::size_t disagreements = 0;
            auto a = tables[i].begin();
            auto b = tables[j].begin();
            for (; a != tables[i].end(); ++a, ++b) {
                if (a->second->failed || b->second->failed) continue;
                if (a->second->parsed != b->second->parsed) ++disagreements;
            }
            double v = static_cast<double>(disagreements) / run_count;
            if (mode == SensitivityMode::Fraction) v /= sample_count;
            m.values[i][j] = m.values[j][i] = v;
        }
    }
    return m;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2) {
        throw MetricsError(MetricsError::Kind::DegenerateInput, "DegenerateInput: need two equal-length series of >= 2");
    }
    auto constant = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
    };
    // Exact check: the mean of a constant series can carry rounding noise.
    if (constant(xs) || constant(ys)) {
        throw MetricsError(MetricsError::Kind::DegenerateInput, "DegenerateInput: zero variance");
    }
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw MetricsError(MetricsError::Kind::DegenerateInput, "DegenerateInput: zero variance");
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

ErrorDistribution error_distribution(std::span<const RunRecord> records) {
    ErrorDistribution out;
    std::set<int> runs;
    std::set<std::string> samples;
    bool all_functional = true;
    for (const auto& r : records) {
        if (r.failed) continue;
        runs.insert(r.key.run);
        samples.insert(r.key.sample);
        const bool wrong = !((r.gold == Gold::HS && r.parsed == Label::HS) ||
                             (r.gold == Gold::NHS && r.parsed == Label::NHS));
        if (wrong) ++(r.gold == Gold::HS ? out.false_negatives : out.false_positives);
        if (r.parsed == Label::Refusal) ++out.refusals;
        if (!r.functionality) all_functional = false;
    }
    out.runs = runs.size();
    out.samples = samples.size();
    if (out.runs == 0) return out;
    out.fp_per_run = static_cast<double>(out.false_positives) / static_cast<double>(out.runs);
    out.fn_per_run = static_cast<double>(out.false_negatives) / static_cast<double>(out.runs);
    out.has_functionality = all_functional;
    if (!all_functional) return out;

    // (functionality, run) -> (errors, samples)
    std::map<std::string, std::map<int, std::pair<std::size_t, std::size_t>>> cells;
    std::map<std::string, std::set<std::string>> members;
    for (const auto& r : records) {
        if (r.failed) continue;
        auto& cell = cells[*r.functionality][r.key.run];
        cell.second += 1;
        const bool wrong = !((r.gold == Gold::HS && r.parsed == Label::HS) ||
                             (r.gold == Gold::NHS && r.parsed == Label::NHS));
        if (wrong) cell.first += 1;
        members[*r.functionality].insert(r.key.sample);
    }

    std::map<MacroClass, std::map<int, std::pair<std::size_t, std::size_t>>> macro_cells;
    std::map<MacroClass, std::size_t> macro_samples;
    for (const auto& [fn, by_run] : cells) {
        FunctionalityErrors fe;
        fe.functionality = fn;
        fe.macro_class = map_functionality(fn);
        fe.samples = members[fn].size();
        double sum = 0.0;
        for (const auto& [run, cell] : by_run) {
            sum += static_cast<double>(cell.first) / static_cast<double>(cell.second);
            auto& mc = macro_cells[fe.macro_class][run];
            mc.first += cell.first;
            mc.second += cell.second;
        }
        fe.error_rate = sum / static_cast<double>(by_run.size());
        macro_samples[fe.macro_class] += fe.samples;
        out.functionalities.push_back(std::move(fe));
    }
    for (const auto& [macro, by_run] : macro_cells) {
        double sum = 0.0;
        for (const auto& [run, cell] : by_run) sum += static_cast<double>(cell.first) / static_cast<double>(cell.second);
        out.macro_classes.push_back({macro, macro_samples[macro], sum / static_cast<double>(by_run.size())});
    }
    return out;
}

} // namespace hsdef
