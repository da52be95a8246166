#include "conelq/errors.hpp"
#include "conelq/io.hpp"
#include "conelq/riccati.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <nlohmann/json.hpp>

using namespace conelq;
using json = nlohmann::json;

namespace {

std::string config(const std::string& name) { return std::string(CONELQ_CONFIG_DIR) + "/" + name; }

json oracle_json() { return json::parse(read_file(config("oracle.json"))); }

std::string error_key(const std::string& text) {
  try {
    parse_problem(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<parsed>";
}

}  // namespace

TEST(Io, ParsesOracleConfig) {
  const Problem p = load_problem(config("oracle.json"));
  EXPECT_EQ(p.grid.n_steps(), 1000);
  EXPECT_EQ(p.coeffs.terminal(), 1.0);
  EXPECT_EQ(p.coeffs.at(0).B1[0], 1.0);
  EXPECT_TRUE(p.init.is_point());
  EXPECT_EQ(p.cone1.kind(), Cone::Kind::full);
  EXPECT_EQ(p.hash.size(), 16u);
}

TEST(Io, ParsesEverySampleConfig) {
  for (const char* f : {"jumps_orthant.json", "ladder.json", "coupled_generated.json",
                        "lattice_adapted.json"}) {
    const Problem p = load_problem(config(f));
    EXPECT_GT(p.grid.n_steps(), 0) << f;
  }
  const Problem g = load_problem(config("coupled_generated.json"));
  EXPECT_EQ(g.coeffs.m1(), 2);
  EXPECT_EQ(g.cone1.kind(), Cone::Kind::generated);
  EXPECT_EQ(g.cone1.generators().cols(), 2);
  EXPECT_EQ(g.coeffs.at(0).R11(0, 1), 0.2);
  const Problem l = load_problem(config("lattice_adapted.json"));
  EXPECT_EQ(l.jump_cap, 2);
  EXPECT_TRUE(l.coeffs.adapted());
  EXPECT_EQ(l.coeffs.terminal(NodeKey{20, 10, {1}}), 0.2);
}

TEST(Io, MissingKeyNamesThePath) {
  json j = oracle_json();
  j["coefficients"].erase("R22");
  EXPECT_EQ(error_key(j.dump()), "coefficients.R22");
  j = oracle_json();
  j.erase("grid");
  EXPECT_EQ(error_key(j.dump()), "grid");
  EXPECT_NE(error_key("{not json"), "<parsed>");
}

TEST(Io, BadValuesAreConfigErrors) {
  json j = oracle_json();
  j["coefficients"]["A"] = "x";
  EXPECT_EQ(error_key(j.dump()), "coefficients.A");
  j = oracle_json();
  j["cones"]["pi1"] = "wedge";
  EXPECT_EQ(error_key(j.dump()), "cones.pi1");
  j = oracle_json();
  j["grid"]["n_steps"] = 0;
  EXPECT_NE(error_key(j.dump()), "<parsed>");
}

TEST(Io, PerStepArrays) {
  json j = oracle_json();
  j["grid"]["n_steps"] = 3;
  j["coefficients"]["Q"] = {0.1, 0.2, 0.3};
  const Problem p = parse_problem(j.dump());
  EXPECT_EQ(p.coeffs.at(2).Q, 0.3);
  j["coefficients"]["Q"] = {0.1, 0.2};
  EXPECT_EQ(error_key(j.dump()), "coefficients.Q");
}

TEST(Io, HashIgnoresKeyOrderAndWhitespace) {
  const Problem a = parse_problem(R"({"grid":{"T":1,"n_steps":4},"coefficients":{"A":0,"B1":1,
    "B2":0,"C":0,"D1":0,"D2":0,"Q":0,"S1":0,"S2":0,"R11":1,"R12":0,"R22":-1,"G":1},"initial":{"point":1}})");
  const Problem b = parse_problem(R"({"coefficients":{"G":1,"R22":-1,"R12":0,"R11":1,"S2":0,
    "S1":0,"Q":0,"D2":0,"D1":0,"C":0,"B2":0,"B1":1,"A":0},  "initial" : {"point":1}, "grid":{"n_steps":4,"T":1}})");
  EXPECT_EQ(a.hash, b.hash);
  EXPECT_EQ(hex64(fnv1a("")), "cbf29ce484222325");
}

TEST(Io, FormatDouble) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(INFINITY), "inf");
  EXPECT_EQ(format_double(-INFINITY), "-inf");
  EXPECT_EQ(format_double(NAN), "nan");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Io, SolutionCsvRoundTrip) {
  const Problem p = load_problem(config("jumps_orthant.json"));
  const RiccatiSolution sol = solve_ode(p.coeffs, p.grid, p.jumps, p.cone1, p.cone2);
  const CsvTable t = parse_csv(solution_csv(sol));
  ASSERT_EQ(t.rows.size(), 201u);
  const int c = t.column("P1");
  ASSERT_GE(c, 0);
  for (int i = 0; i <= 200; ++i) EXPECT_EQ(t.rows[i][c], sol.P1[i]);
  EXPECT_EQ(t.column("nope"), -1);
  EXPECT_GE(t.column("G1_0"), 0);

  const json js = json::parse(solution_json(sol, Provenance{p.hash}));
  EXPECT_EQ(js["nodes"].size(), 201u);
  EXPECT_EQ(js["config_hash"], p.hash);
  EXPECT_EQ(js["nodes"][0]["P1"].get<double>(), sol.P1[0]);
  const json rep = json::parse(report_json(sol.report, Provenance{p.hash}));
  EXPECT_EQ(rep["K"].get<double>(), sol.report.K);
}
