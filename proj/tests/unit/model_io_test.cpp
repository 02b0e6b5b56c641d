#include <charconv>
#include <cmath>
#include <cstring>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "riskstop/discrete.hpp"
#include "riskstop/model_io.hpp"
#include "support.hpp"

using namespace riskstop;

namespace {

const char* kFlowDocument = R"({
  "name": "two-state-flow",
  "time": "discrete",
  "states": ["A", "B"],
  "kernel": [[0, 1], [0, 1]],
  "g": [0.1, 0.1],
  "G": [2, 0],
  "c": 0.1
})";

std::string with(const std::string& from, const std::string& to) {
  std::string doc = kFlowDocument;
  const auto at = doc.find(from);
  EXPECT_NE(at, std::string::npos) << from;
  return doc.replace(at, from.size(), to);
}

std::vector<std::string> described(const std::string& doc) {
  try {
    parse_model(doc);
  } catch (const ModelError& e) {
    std::vector<std::string> out;
    for (const auto& v : e.violations()) out.push_back(describe(v));
    return out;
  }
  return {};
}

void expect_same(const MarkovModel& a, const MarkovModel& b) {
  EXPECT_EQ(a.name, b.name);
  EXPECT_EQ(a.time, b.time);
  EXPECT_EQ(a.states, b.states);
  EXPECT_EQ(a.kernel, b.kernel);
  EXPECT_EQ(a.costs.g, b.costs.g);
  EXPECT_EQ(a.costs.G, b.costs.G);
  EXPECT_EQ(a.costs.c, b.costs.c);
}

}  // namespace

TEST(ParseModel, TwoStateFlow) {
  const auto m = parse_model(kFlowDocument);
  EXPECT_EQ(m.size(), 2u);
  EXPECT_EQ(m.name, "two-state-flow");
  EXPECT_EQ(m.time, TimeMode::Discrete);
  EXPECT_EQ(m.states.label(1), "B");
  EXPECT_EQ(m.kernel(0, 1), 1.0);
  EXPECT_EQ(m.costs.G(0), 2.0);
  EXPECT_EQ(m.costs.c, 0.1);
}

TEST(ParseModel, RowSumViolation) {
  EXPECT_EQ(described(with("[[0, 1], [0, 1]]", "[[0.5, 0.4], [0, 1]]")),
            std::vector<std::string>{"kernel.row[0]: sums to 0.9, expected 1.0"});
}

TEST(ParseModel, SyntaxErrorHasPosition) {
  const auto errors = described("{\"name\": \"x\",");
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_NE(errors[0].find("byte"), std::string::npos);
  EXPECT_NE(errors[0].find("line 1"), std::string::npos);
}

TEST(ParseModel, SchemaViolationsAreFieldAnnotated) {
  const auto unknown = described(with("\"c\": 0.1", "\"c\": 0.1, \"extra\": 1"));
  EXPECT_EQ(unknown, std::vector<std::string>{"extra: unknown field"});

  const auto missing = described(with("\"g\": [0.1, 0.1],", ""));
  EXPECT_EQ(missing, std::vector<std::string>{"g: missing required field"});

  const auto wrong = described(with("\"discrete\"", "\"weekly\""));
  ASSERT_EQ(wrong.size(), 1u);
  EXPECT_EQ(wrong[0].rfind("time: ", 0), 0u);

  const auto ragged = described(with("[[0, 1], [0, 1]]", "[[0, 1], [1]]"));
  ASSERT_EQ(ragged.size(), 1u);
  EXPECT_EQ(ragged[0].rfind("kernel.row[1]", 0), 0u);

  const auto text = described(with("[2, 0]", "[2, \"zero\"]"));
  EXPECT_EQ(text, std::vector<std::string>{"G[1]: expected a number"});
}

TEST(ParseModel, CostBoundDefaultsToMinimum) {
  const auto m = parse_model(with("\"g\": [0.1, 0.1],\n  \"G\": [2, 0],\n  \"c\": 0.1",
                                  "\"g\": [0.3, 0.2],\n  \"G\": [2, 0]"));
  EXPECT_EQ(m.costs.c, 0.2);
  const auto rejected =
      described(with("\"g\": [0.1, 0.1],\n  \"G\": [2, 0],\n  \"c\": 0.1", "\"g\": [0.3, 0],\n  \"G\": [2, 0]"));
  EXPECT_FALSE(rejected.empty());
}

TEST(ParseModel, LoadsShippedModels) {
  const std::string dir = RISKSTOP_MODELS_DIR;
  EXPECT_EQ(load_model(dir + "/two-state-flow.json").time, TimeMode::Discrete);
  EXPECT_EQ(load_model(dir + "/two-state-ct.json").time, TimeMode::Continuous);
  EXPECT_THROW(load_model(dir + "/missing.json"), std::runtime_error);
}

TEST(SerializeModel, RoundTripIsExact) {
  std::mt19937_64 rng(31);
  for (int k = 0; k < 50; ++k) {
    const auto n = riskstop::testing::pick_size(rng, 1, 8);
    const auto m = k % 2 ? riskstop::testing::random_dtmc(rng, n) : riskstop::testing::random_ctmc(rng, n);
    const auto once = parse_model(serialize_model(m));
    expect_same(once, m);
    expect_same(parse_model(serialize_model(once)), once);
    EXPECT_EQ(serialize_model(once), serialize_model(m));
  }
}

TEST(WriteReport, TwoStateFlowCsv) {
  const auto m = parse_model(kFlowDocument);
  const auto r = solve_fixed_point(m, {.tol = 1e-10});
  EXPECT_EQ(write_report(r, m.states, ReportFormat::Csv),
            "state,value,in_region\nA,1.1051709180756477,false\nB,1,true\n");
}

TEST(WriteReport, JsonMirrorsReport) {
  const auto m = parse_model(kFlowDocument);
  const auto r = solve_fixed_point(m);
  const auto doc = nlohmann::json::parse(write_report(r, m.states, ReportFormat::Json));
  EXPECT_EQ(doc["states"], nlohmann::json({"A", "B"}));
  EXPECT_EQ(doc["region"], nlohmann::json({"B"}));
  EXPECT_EQ(doc["value"][0].get<double>(), r.value[0]);
  EXPECT_EQ(doc["iterations"].get<std::size_t>(), r.iterations);
  EXPECT_EQ(doc["converged"].get<bool>(), true);
  EXPECT_TRUE(doc.contains("residual") && doc.contains("sandwich_gap"));
}

TEST(WriteReport, LadderRowsAscend) {
  LadderTable t;
  for (int m = 0; m < 4; ++m) t.rows.push_back({m, std::ldexp(1.0, -m), 0.1 / (m + 1), 0, true});
  const auto doc = parse_csv(to_csv(ladder_table(t)));
  EXPECT_EQ(doc.columns, (std::vector<std::string>{"m", "delta", "sup_gap"}));
  ASSERT_EQ(doc.rows.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(doc.rows[i][0], std::to_string(i));
}

TEST(WriteReport, EmptySweepIsHeaderOnly) {
  EXPECT_EQ(to_csv(sweep_table({}, StateSpace({"A"}))), "T,state,lower,upper\n");
  EXPECT_NO_THROW(nlohmann::json::parse(to_json(sweep_table({}, StateSpace({"A"})))));
}

TEST(WriteReport, NumbersReparseBitIdentical) {
  std::mt19937_64 rng(32);
  Table t;
  t.columns = {"x"};
  std::vector<double> xs;
  for (int i = 0; i < 1000; ++i) {
    const double x = std::ldexp(riskstop::testing::u01(rng), static_cast<int>(rng() % 80) - 40);
    xs.push_back(x);
    t.add_row({x});
  }
  const auto doc = parse_csv(to_csv(t));
  const auto json = nlohmann::json::parse(to_json(t));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double back = 0.0;
    const auto& text = doc.rows[i][0];
    std::from_chars(text.data(), text.data() + text.size(), back);
    EXPECT_EQ(std::memcmp(&back, &xs[i], sizeof back), 0) << text;
    EXPECT_EQ(json["rows"][i][0].get<double>(), xs[i]);
  }
}

TEST(Csv, QuotingRoundTrips) {
  Table t;
  t.columns = {"label", "v"};
  t.add_row({std::string("a,b"), 1.5});
  t.add_row({std::string("say \"hi\""), true});
  const auto doc = parse_csv(to_csv(t));
  EXPECT_EQ(doc.rows[0][0], "a,b");
  EXPECT_EQ(doc.rows[1][0], "say \"hi\"");
  EXPECT_EQ(doc.rows[1][1], "true");
  EXPECT_THROW(parse_csv("a,b\n1\n"), std::runtime_error);
  EXPECT_THROW(parse_csv(""), std::runtime_error);
  EXPECT_THROW(t.add_row({1.0}), std::invalid_argument);
}
