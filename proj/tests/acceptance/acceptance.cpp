// Prints one PASS/FAIL line per acceptance criterion. Exit status is nonzero
// when a gating criterion fails.
#include "hsdef/cli.hpp"
#include "hsdef/dataset.hpp"
#include "hsdef/experiment.hpp"
#include "hsdef/gateway.hpp"
#include "hsdef/metrics.hpp"
#include "hsdef/prompt.hpp"
#include "hsdef/records.hpp"
#include "hsdef/report.hpp"
#include "hsdef/taxonomy.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace hsdef;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

Outcome fail(std::string why) { return {false, std::move(why)}; }

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

class ScratchDir {
public:
    ScratchDir() {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("hsdef_accept_" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

RunRecord rec(const std::string& condition, int run, const std::string& sample, Gold gold, Label parsed) {
    RunRecord r;
    r.key = {"acc", condition, "m", run, sample};
    r.gold = gold;
    r.parsed = parsed;
    r.raw = parsed == Label::HS ? "1" : parsed == Label::NHS ? "0" : "?";
    return r;
}

// 1 ------------------------------------------------------------------------

Outcome composition_goldens() {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<DefinitionSpec> presets = enumerate_step1();
    for (auto& s : enumerate_step2(resolve_preset("HSB"))) presets.push_back(std::move(s));
    if (presets.size() != 17) return fail("expected 17 presets, got " + std::to_string(presets.size()));

    std::map<std::string, std::string> texts;
    for (const auto& spec : presets) {
        const auto dir = spec.name.front() == '+' ? "step2_HSB" : "step1";
        const auto golden = read_file(fs::path(HSDEF_SOURCE_DIR) / "data/golden" / dir / (spec.name + ".txt"));
        auto text = compose(spec);
        if (text != golden && text + "\n" != golden) return fail(spec.name + " differs from its golden file");
        texts[spec.name] = std::move(text);
    }
    // Every rendered span appears verbatim in every text whose spec holds it.
    const auto& registry = SpanRegistry::builtin();
    for (const auto& spec : presets) {
        for (auto e : spec.elements.elements()) {
            if (!is_renderable(e)) continue;
            if (texts[spec.name].find(registry.span(e).rendered()) == std::string::npos) {
                return fail("span " + std::string(to_string(e)) + " not stable in " + spec.name);
            }
        }
    }
    const double s = seconds_since(t0);
    if (s >= 1.0) return fail("took " + std::to_string(s) + " s");
    return {true, "17 texts match, spans stable"};
}

// 2 ------------------------------------------------------------------------

std::optional<double> oracle_f1(const std::vector<RunRecord>& rs, Gold cls) {
    const Label pos = cls == Gold::HS ? Label::HS : Label::NHS;
    double tp = 0, pred = 0, act = 0;
    for (const auto& r : rs) {
        pred += r.parsed == pos;
        act += r.gold == cls;
        tp += r.parsed == pos && r.gold == cls;
    }
    if (pred + act == 0) return std::nullopt;
    if (tp == 0) return 0.0;
    const double p = tp / pred, q = tp / act;
    return 2 * p * q / (p + q);
}

Outcome metric_oracles() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240601);
    auto label = [&] {
        const auto v = rng() % 10;
        return v < 4 ? Label::HS : v < 9 ? Label::NHS : Label::Refusal;
    };
    double worst = 0;
    constexpr int kTrials = 1000;
    for (int t = 0; t < kTrials; ++t) {
        const int n = 1 + static_cast<int>(rng() % 50);
        const int runs = 1 + static_cast<int>(rng() % 5);
        std::vector<Gold> gold(n);
        for (auto& g : gold) g = rng() % 2 ? Gold::HS : Gold::NHS;
        std::array<std::vector<RunRecord>, 2> conds;
        for (int c = 0; c < 2; ++c) {
            for (int run = 1; run <= runs; ++run) {
                for (int s = 0; s < n; ++s) conds[c].push_back(rec("c" + std::to_string(c), run, "s" + std::to_string(s), gold[s], label()));
            }
        }
        const auto& rs = conds[0];

        double sum = 0;
        int k = 0;
        for (auto cls : {Gold::HS, Gold::NHS}) {
            if (auto f = oracle_f1(rs, cls)) {
                sum += *f;
                ++k;
            }
        }
        worst = std::max(worst, std::abs(macro_f1(rs).macro - sum / k));

        int consistent = 0;
        for (int s = 0; s < n; ++s) {
            bool same = true;
            for (int run = 1; run < runs; ++run) same = same && rs[run * n + s].parsed == rs[s].parsed;
            consistent += same;
        }
        worst = std::max(worst, std::abs(robustness(rs) - 100.0 * consistent / n));

        double disagreements = 0;
        for (std::size_t i = 0; i < rs.size(); ++i) disagreements += conds[0][i].parsed != conds[1][i].parsed;
        const std::vector<ConditionRecords> input{{"c0", conds[0]}, {"c1", conds[1]}};
        const auto m = sensitivity_matrix(input);
        if (m.values[0][1] != m.values[1][0] || m.values[0][0] != 0.0) return fail("sensitivity not symmetric");
        worst = std::max(worst, std::abs(m.values[0][1] - disagreements / runs));
    }
    const double s = seconds_since(t0);
    if (worst > 1e-12) return fail("max deviation " + std::to_string(worst));
    if (s >= 30.0) return fail("took " + std::to_string(s) + " s");
    std::ostringstream d;
    d << kTrials << " random sets, max deviation " << worst;
    return {true, d.str()};
}

// 3 ------------------------------------------------------------------------

Outcome iqr_columns() {
    const std::vector<double> llama_hatecheck{91.28, 94.03, 94.44, 93.95, 95.08, 94.77,
                                              94.26, 94.23, 95.21, 94.77, 95.36};
    const std::vector<double> mistral_mhs{95.87, 96.15, 94.69, 96.46, 96.39, 96.69,
                                          96.23, 95.85, 96.44, 96.54, 96.23};
    const auto a = iqr_outliers(llama_hatecheck);
    const auto b = iqr_outliers(mistral_mhs);
    if (a != std::vector<std::size_t>{0}) return fail("LLama3/HateCheck flagged a different set");
    if (b != std::vector<std::size_t>{2}) return fail("Mistral/MHS flagged a different set");
    return {true, "{NO} and {OL} flagged"};
}

// 4 ------------------------------------------------------------------------

Outcome stratified_sampling() {
    Dataset pool;
    pool.name = "pool";
    for (int i = 0; i < 4000; ++i) pool.samples.push_back({"h" + std::to_string(i), "t", Gold::HS, std::nullopt, "pool"});
    for (int i = 0; i < 2000; ++i) pool.samples.push_back({"n" + std::to_string(i), "t", Gold::NHS, std::nullopt, "pool"});
    auto ids = [](const Dataset& d) {
        std::vector<std::string> out;
        for (const auto& s : d.samples) out.push_back(s.id);
        return out;
    };
    const auto a = stratified_sample(pool, 3901, 0.6816, 42);
    const auto b = stratified_sample(pool, 3901, 0.6816, 42);
    const auto c = stratified_sample(pool, 3901, 0.6816, 43);
    if (a.count(Gold::HS) != 2659 || a.count(Gold::NHS) != 1242) {
        return fail("drew " + std::to_string(a.count(Gold::HS)) + "/" + std::to_string(a.count(Gold::NHS)));
    }
    if (ids(a) != ids(b)) return fail("same seed gave a different sequence");
    if (ids(a) == ids(c)) return fail("different seeds gave the same sequence");
    return {true, "2659 HS / 1242 NHS, seeded order reproducible"};
}

// 5 ------------------------------------------------------------------------

struct Invocation {
    int status;
    std::string out;
    std::string err;
};

Invocation invoke(const fs::path& cwd, const std::string& args) {
    const auto err_path = cwd / "stderr.txt";
    const std::string cmd = "cd '" + cwd.string() + "' && '" + std::string(HSDEF_CLI_PATH) + "' " + args + " 2>'" +
                            err_path.string() + "'";
    Invocation inv{-1, "", ""};
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return inv;
    std::array<char, 4096> buf{};
    while (auto n = std::fread(buf.data(), 1, buf.size(), pipe)) inv.out.append(buf.data(), n);
    const int status = pclose(pipe);
    inv.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    inv.err = read_file(err_path);
    return inv;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_file(e.path());
    }
    return files;
}

std::size_t data_rows(const std::string& csv) {
    std::istringstream in(csv);
    std::size_t n = 0;
    for (std::string l; std::getline(in, l);) n += !l.empty() && l[0] != '#';
    return n ? n - 1 : 0;
}

Outcome end_to_end() {
    ScratchDir scratch;
    fs::create_directories(scratch.path() / "data");
    fs::copy(fs::path(HSDEF_SOURCE_DIR) / "data/toy", scratch.path() / "data/toy", fs::copy_options::recursive);

    const auto t0 = std::chrono::steady_clock::now();
    const auto cold = invoke(scratch.path(), "run data/toy/toy.yaml --full");
    const double s = seconds_since(t0);
    if (cold.status != 0) return fail("cold run exited " + std::to_string(cold.status) + ": " + cold.err);
    if (s >= 10.0) return fail("cold run took " + std::to_string(s) + " s");

    const auto out = scratch.path() / "runs/toy";
    const auto r1 = data_rows(read_file(out / "report_step1.csv"));
    const auto r2 = data_rows(read_file(out / "report_step2.csv"));
    if (r1 != 11 || r2 != 8) return fail("report rows " + std::to_string(r1) + " + " + std::to_string(r2));
    const auto before = snapshot(out);

    const auto warm = invoke(scratch.path(), "run data/toy/toy.yaml --full");
    if (warm.status != 0) return fail("warm run exited " + std::to_string(warm.status));
    if (warm.err.find("backend_calls=0 ") == std::string::npos) return fail("warm run called the backend: " + warm.err);
    if (snapshot(out) != before) return fail("warm run changed the output");

    std::ostringstream d;
    d.precision(2);
    d << std::fixed << "cold run " << s << " s, 11 + 8 rows, warm rerun byte-identical with 0 backend calls";
    return {true, d.str()};
}

// 6 ------------------------------------------------------------------------

Outcome functionality_map_and_rates() {
    const auto& map = functionality_map();
    if (map.size() != 29) return fail(std::to_string(map.size()) + " functionalities");
    std::map<MacroClass, int> per_class;
    for (const auto& [name, mc] : map) ++per_class[mc];
    if (per_class.size() != 5) return fail("not five macro classes");
    const std::map<MacroClass, int> expected{{MacroClass::HS, 9},            {MacroClass::NHS, 4},
                                             {MacroClass::LeetHS, 5},        {MacroClass::MisleadingNHS, 7},
                                             {MacroClass::SpecialHS, 4}};
    if (per_class != expected) return fail("class sizes differ");

    // Three runs over five samples. Error counts per run:
    // HS (slur_h, profanity_h): 1, 0, 2 of 2 -> (0.5 + 0 + 1) / 3 = 0.5
    // LeetHS (spell_leet_h): 1, 1, 0 of 1 -> 2/3
    // MisleadingNHS (counter_ref_nh, refused once): 0, 1, 0 of 1 -> 1/3
    // SpecialHS (derog_impl_h): 0, 0, 0 -> 0
    struct Row {
        const char* id;
        const char* fn;
        Gold gold;
        std::array<Label, 3> answers;
    };
    const std::vector<Row> rows{
        {"s1", "slur_h", Gold::HS, {Label::NHS, Label::HS, Label::NHS}},
        {"s2", "profanity_h", Gold::HS, {Label::HS, Label::HS, Label::Refusal}},
        {"s3", "spell_leet_h", Gold::HS, {Label::NHS, Label::NHS, Label::HS}},
        {"s4", "counter_ref_nh", Gold::NHS, {Label::NHS, Label::Refusal, Label::NHS}},
        {"s5", "derog_impl_h", Gold::HS, {Label::HS, Label::HS, Label::HS}},
    };
    ScratchDir scratch;
    const auto path = scratch.path() / "records.jsonl";
    {
        std::ofstream f(path, std::ios::binary);
        for (int run = 1; run <= 3; ++run) {
            for (const auto& r : rows) {
                auto x = rec("HSB", run, r.id, r.gold, r.answers[run - 1]);
                x.functionality = r.fn;
                x.timestamp = "2024-01-01T00:00:00Z";
                f << serialize_record(x) << '\n';
            }
        }
    }
    std::ostringstream out, err;
    const int code = run_cli({"hsdef", "report", path.string(), "--by", "macroclass", "--out", scratch.path().string()},
                             out, err);
    if (code != 0) return fail("report exited " + std::to_string(code) + ": " + err.str());
    const auto csv = read_file(scratch.path() / "report_by_macroclass.csv");
    const std::map<std::string, double> expected_rates{
        {"HS", 0.5}, {"LeetHS", 2.0 / 3.0}, {"MisleadingNHS", 1.0 / 3.0}, {"SpecialHS", 0.0}};
    std::istringstream in(csv);
    std::size_t matched = 0;
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line[0] == '#' || line.rfind("model,", 0) == 0) continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
        if (cells.size() != 5) return fail("unexpected row " + line);
        auto it = expected_rates.find(cells[2]);
        if (it == expected_rates.end()) {
            if (cells[4] != "NA") return fail("class " + cells[2] + " should be NA");
            continue;
        }
        if (std::abs(std::stod(cells[4]) - it->second) > 5e-7) return fail(cells[2] + " rate " + cells[4]);
        ++matched;
    }
    if (matched != expected_rates.size()) return fail("missing macro-class rows");
    return {true, "29 functionalities in 9/4/5/7/4, hand-computed rates reproduced"};
}

// 7 ------------------------------------------------------------------------

Outcome parser_totality() {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 10000; ++i) {
        std::string s(rng() % 64, '\0');
        for (auto& c : s) c = static_cast<char>(rng() % 256);
        const auto l = parse_label(s);
        if (l != Label::HS && l != Label::NHS && l != Label::Refusal) return fail("out-of-range label");
    }
    for (const char* canonical : {"0", "1", " 1", "0\n"}) {
        if (parse_label(canonical) == Label::Refusal) return fail(std::string("canonical answer refused: ") + canonical);
    }
    if (parse_label("1") != Label::HS || parse_label("0") != Label::NHS) return fail("canonical answers swapped");
    return {true, "10000 random inputs, canonical answers parsed"};
}

// 8 ------------------------------------------------------------------------

Outcome reproduction_procedure() {
    const auto readme = read_file(fs::path(HSDEF_SOURCE_DIR) / "README.md");
    if (readme.find("backend: http") == std::string::npos) return fail("README lacks an http backend procedure");

    // Step-1 shape with one reference column (LLama3 on LFTW) fed through
    // the same selection and rendering path as a live run.
    const std::vector<std::pair<std::string, double>> column{
        {"NO", 72.07},        {"Own", 73.86},           {"OL", 71.75},          {"HSB", 72.63},
        {"HSB_EDFoC", 72.87}, {"HSB_EDPC", 71.95},      {"HSB_EDT", 73.42},     {"HSB_EDFoC_EDT", 73.31},
        {"HSB_EDFoC_EDPC", 72.33}, {"HSB_EDT_EDPC", 72.52}, {"HSB_EDFoC_EDPC_EDT", 72.64}};
    Step1ModelReport m;
    m.model = "llama3";
    for (const auto& [name, f1] : column) {
        const auto spec = resolve_preset(name);
        ConditionScore s;
        s.condition = s.record_condition = name;
        s.kind = spec.kind;
        s.element_count = spec.elements.size();
        s.mean_f1 = f1 / 100.0;
        s.robustness = 100.0;
        if (auto text = definition_text(spec, "lftw")) s.tokens = count_tokens(*text);
        m.rows.push_back(s);
    }
    summarize_step1(m);
    if (m.chosen != "HSB_EDT" || m.best != "Own") return fail("selection " + m.chosen + "/" + m.best);
    const auto md = step1_report(Step1Report{{m}}).md;
    if (md.find("<u>73.42</u>") == std::string::npos) return fail("chosen cell not underlined");
    if (md.find("**73.86**") == std::string::npos) return fail("best cell not bold");
    if (md.find("| Pearson Corr. (tokens) |") == std::string::npos) return fail("Pearson row missing");
    return {true, "procedure documented; selection and Pearson row rendered (no live model attempted)"};
}

} // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        bool gating;
        std::function<Outcome()> check;
    };
    const std::vector<Criterion> criteria{
        {1, "composition goldens", true, composition_goldens},
        {2, "metric oracle equivalence", true, metric_oracles},
        {3, "IQR reproduction", true, iqr_columns},
        {4, "stratified sampling", true, stratified_sampling},
        {5, "end-to-end determinism", true, end_to_end},
        {6, "functionality mapping", true, functionality_map_and_rates},
        {7, "parser totality", true, parser_totality},
        {8, "model reproduction procedure", false, reproduction_procedure},
    };
    bool ok = true;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& ex) {
            o = fail(std::string("exception: ") + ex.what());
        }
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.name
                  << (c.gating ? "" : " (non-gating)") << " - " << o.detail << std::endl;
        if (c.gating && !o.pass) ok = false;
    }
    return ok ? 0 : 1;
}
