#include "hsdef/report.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace hsdef;
using testing_support::record;

namespace {

ConditionScore scored(const std::string& name, double f1, std::optional<std::size_t> tokens = std::nullopt) {
    const auto spec = resolve_preset(name);
    ConditionScore s;
    s.condition = s.record_condition = name;
    s.kind = spec.kind;
    s.element_count = spec.elements.size();
    s.mean_f1 = s.pooled_f1 = f1;
    s.robustness = 100.0;
    s.tokens = tokens;
    return s;
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

// Hand-built HateCheck-shaped records: two runs over six samples.
std::vector<RunRecord> hatecheck_records() {
    struct Row {
        const char* id;
        const char* functionality;
        Gold gold;
        Label run1;
        Label run2;
    };
    const std::vector<Row> rows{
        {"a", "slur_h", Gold::HS, Label::HS, Label::NHS},
        {"b", "threat_dir_h", Gold::HS, Label::HS, Label::HS},
        {"c", "spell_leet_h", Gold::HS, Label::NHS, Label::NHS},
        {"d", "counter_quote_nh", Gold::NHS, Label::HS, Label::HS},
        {"e", "negate_neg_nh", Gold::NHS, Label::NHS, Label::Refusal},
        {"f", "ident_neutral_nh", Gold::NHS, Label::NHS, Label::NHS},
    };
    std::vector<RunRecord> out;
    for (const auto& r : rows) {
        for (int run = 1; run <= 2; ++run) {
            auto rec = record("HSB", run, r.id, r.gold, run == 1 ? r.run1 : r.run2);
            rec.functionality = r.functionality;
            out.push_back(rec);
        }
    }
    return out;
}

} // namespace

TEST(Report, ConventionsLineOpensEveryCsv) {
    Step1Report s1;
    Step2Report s2;
    ConditionReport c;
    for (const auto& csv : {step1_report(s1).csv, step2_report(s2).csv, condition_report(c).csv}) {
        EXPECT_EQ(lines(csv).front(), conventions_line());
    }
    EXPECT_TRUE(contains(conventions_line(), "quartiles=exclusive"));
}

TEST(Report, StepOneMarksChosenBestAndPearsonRows) {
    Step1ModelReport m;
    m.model = "m";
    m.rows = {scored("NO", 0.9), scored("HSB", 0.7, 30), scored("HSB_EDT", 0.8, 40)};
    m.chosen = "HSB_EDT";
    m.best = "NO";
    m.pearson_all = 1.0;
    Step1Report r{{m}};
    const auto text = step1_report(r);
    EXPECT_TRUE(contains(text.md, "<u>80.00</u>"));
    EXPECT_TRUE(contains(text.md, "**90.00**"));
    EXPECT_TRUE(contains(text.md, "| Pearson Corr. (tokens) |  | 1.0000 |"));
    EXPECT_TRUE(contains(text.md, "| Pearson Corr. (tokens, HSB family) |  | NA |"));

    const auto csv = lines(text.csv);
    ASSERT_EQ(csv.size(), 2u + 3u);
    EXPECT_EQ(csv[1].substr(0, 34), "model,condition,kind,elements,toke");
    EXPECT_TRUE(contains(csv[4], "m,HSB_EDT,composed,"));
    EXPECT_EQ(csv[4].substr(csv[4].size() - 4), ",1,0");
    EXPECT_EQ(csv[2].substr(csv[2].size() - 4), ",0,1");
}

TEST(Report, StepTwoUnderlinesOnceOrTwice) {
    Step2ModelReport m;
    m.model = "m";
    m.base = "HSB";
    for (auto [name, f1, mark] : std::vector<std::tuple<std::string, double, int>>{
             {"+LAA", 0.5, 0}, {"+LAA_PI", 0.75, 1}, {"+LAA_IHS", 0.9, 2}}) {
        auto s = scored("HSB" + name, f1);
        s.condition = name;
        s.underline = mark;
        m.rows.push_back(s);
    }
    const auto text = step2_report(Step2Report{{m}});
    EXPECT_TRUE(contains(text.md, "| +LAA | 50.00 |"));
    EXPECT_TRUE(contains(text.md, "| +LAA_PI | <u>75.00</u> |"));
    EXPECT_TRUE(contains(text.md, "| +LAA_IHS | **<u><u>90.00</u></u>** |"));
    const auto csv = lines(text.csv);
    ASSERT_EQ(csv.size(), 5u);
    EXPECT_TRUE(contains(csv[4], "m,HSB,+LAA_IHS,HSB+LAA_IHS,"));
    EXPECT_EQ(csv[4].back(), '2');
}

TEST(Report, UnscoredRowsPrintNA) {
    Step1ModelReport m;
    m.model = "m";
    auto s = scored("NO", std::nan(""));
    s.robustness = std::nan("");
    m.rows = {s};
    const auto text = step1_report(Step1Report{{m}});
    EXPECT_TRUE(contains(lines(text.csv)[2], ",NA,NA,NA,"));
}

TEST(Report, MacroClassRatesMatchHandCount) {
    const auto records = hatecheck_records();
    const auto text = records_report(records, Breakdown::MacroClass);
    const auto csv = lines(text.csv);
    ASSERT_EQ(csv.size(), 2u + 5u);
    // HS: a (1 error over 2 runs), b (0) -> (1/2 + 0/2) / 2 per run average = 0.25.
    EXPECT_EQ(csv[2], "m,HSB,HS,2,0.250000");
    EXPECT_EQ(csv[3], "m,HSB,NHS,1,0.000000");
    EXPECT_EQ(csv[4], "m,HSB,LeetHS,1,1.000000");
    // d wrong in both runs, e refused in run 2 -> (1/2 + 2/2) / 2.
    EXPECT_EQ(csv[5], "m,HSB,MisleadingNHS,2,0.750000");
    EXPECT_EQ(csv[6], "m,HSB,SpecialHS,0,NA");
}

TEST(Report, FunctionalityAndClassBreakdowns) {
    const auto records = hatecheck_records();
    const auto fn = lines(records_report(records, Breakdown::Functionality).csv);
    ASSERT_EQ(fn.size(), 2u + 6u);
    EXPECT_EQ(fn[2], "m,HSB,counter_quote_nh,MisleadingNHS,1,1.000000");
    const auto cls = lines(records_report(records, Breakdown::Class).csv);
    ASSERT_EQ(cls.size(), 3u);
    // FN: a once, c twice; FP: d twice, e refusal once.
    EXPECT_EQ(cls[2], "m,HSB,2,6,3,3,1.5000,1.5000,1");
}

TEST(Report, BreakdownErrors) {
    auto records = hatecheck_records();
    EXPECT_THROW(records_report(records, Breakdown::Sensitivity), ConfigError);
    for (auto& r : records) r.functionality.reset();
    EXPECT_THROW(records_report(records, Breakdown::MacroClass), ConfigError);
    EXPECT_THROW(records_report(records, Breakdown::Functionality), ConfigError);
    EXPECT_NO_THROW(records_report(records, Breakdown::Class));
    EXPECT_THROW(records_report(std::vector<RunRecord>{}, Breakdown::Class), ConfigError);
    EXPECT_EQ(parse_breakdown("macroclass"), Breakdown::MacroClass);
    EXPECT_FALSE(parse_breakdown("Macroclass"));
}

TEST(Report, SensitivityCsvIsSquare) {
    SensitivityMatrix m{{"A", "B"}, {{0.0, 2.5}, {2.5, 0.0}}, SensitivityMode::Count};
    const auto csv = lines(sensitivity_csv(m));
    ASSERT_EQ(csv.size(), 4u);
    EXPECT_EQ(csv[1], "condition,A,B");
    EXPECT_EQ(csv[2], "A,0.000000,2.500000");
    EXPECT_EQ(csv[3], "B,2.500000,0.000000");
}
