#include "cli.hpp"

#include "conelq/errors.hpp"
#include "conelq/io.hpp"
#include "conelq/lattice.hpp"
#include "conelq/parallel.hpp"
#include "conelq/riccati.hpp"
#include "conelq/simulate.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

namespace conelq::cli {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

json num(double x) { return std::isfinite(x) ? json(x) : json(format_double(x)); }

struct Globals {
  std::string config;
  std::uint64_t seed = 42;
  std::string out = ".";
  std::string format = "both";
};

struct SolverSettings {
  std::string mode = "ode";  // ode | lattice | ladder
  std::vector<Truncation> levels;
  double delta_lower = kDefaultDeltaLower;
  double tol = 1e-10;
  int max_iter = 100000;
  double ladder_tol = 1e-8;
};

struct VerifySettings {
  int n_paths = 10000;
  int stride = 1;
  std::vector<std::string> suites{"value", "saddle", "psi", "convexity", "stationarity"};
  double h = 0.1;
  int convexity_instances = 20;
  std::vector<double> psi_mesh{-2.0, -1.0, -0.1, 0.0, 0.1, 1.0, 2.0};
  double corrupt_theta_plus = 1.0;
  bool paths_csv = false;
};

const json& section(const json& root, const char* key) {
  static const json empty = json::object();
  auto it = root.find(key);
  return it == root.end() ? empty : *it;
}

std::vector<Truncation> parse_levels_json(const json& v) {
  std::vector<Truncation> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const json& e = v[i];
    if (!e.is_array() || e.size() != 2)
      throw ConfigError("solver.levels", "config: 'solver.levels' entries must be [n, n_bar]");
    out.push_back({e[0].get<double>(), e[1].get<double>()});
  }
  return out;
}

// "n:nbar,n:nbar,..."
std::vector<Truncation> parse_levels_flag(const std::string& s) {
  std::vector<Truncation> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw ConfigError("--levels", "--levels expects n:n_bar pairs separated by commas");
    try {
      out.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
    } catch (const std::exception&) {
      throw ConfigError("--levels", "--levels: bad number in '" + item + "'");
    }
  }
  return out;
}

std::vector<Truncation> default_levels() {
  std::vector<Truncation> out;
  for (double n : {1.0, 2.0, 4.0, 8.0})
    for (double nb : {1.0, 2.0, 4.0, 8.0}) out.push_back({n, nb});
  return out;
}

SolverSettings solver_settings(const Problem& p) {
  const json root = json::parse(p.canonical);
  const json& s = section(root, "solver");
  SolverSettings out;
  try {
    out.mode = s.value("mode", out.mode);
    out.delta_lower = s.value("delta_lower", out.delta_lower);
    out.tol = s.value("tol", out.tol);
    out.max_iter = s.value("max_iter", out.max_iter);
    out.ladder_tol = s.value("ladder_tol", out.ladder_tol);
    if (s.contains("levels")) out.levels = parse_levels_json(s["levels"]);
  } catch (const json::exception& e) {
    throw ConfigError("solver", std::string("config: bad 'solver' section: ") + e.what());
  }
  return out;
}

VerifySettings verify_settings(const Problem& p) {
  const json root = json::parse(p.canonical);
  const json& s = section(root, "verify");
  VerifySettings out;
  try {
    out.n_paths = s.value("n_paths", out.n_paths);
    out.stride = s.value("stride", out.stride);
    out.h = s.value("h", out.h);
    out.convexity_instances = s.value("convexity_instances", out.convexity_instances);
    if (s.contains("suites")) out.suites = s["suites"].get<std::vector<std::string>>();
    if (s.contains("psi_mesh")) out.psi_mesh = s["psi_mesh"].get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ConfigError("verify", std::string("config: bad 'verify' section: ") + e.what());
  }
  return out;
}

void check_settings(const SolverSettings& s) {
  if (s.mode != "ode" && s.mode != "lattice" && s.mode != "ladder")
    throw ConfigError("solver.mode", "solver mode must be ode, lattice or ladder");
  if (!(s.delta_lower > 0.0)) throw ConfigError("solver.delta_lower", "delta_lower must be positive");
  if (!(s.tol > 0.0)) throw ConfigError("solver.tol", "tol must be positive");
  if (s.max_iter < 1) throw ConfigError("solver.max_iter", "max_iter must be positive");
  for (const Truncation& t : s.levels)
    if (!(t.n >= 0.0) || !(t.n_bar >= 0.0))
      throw ConfigError("solver.levels", "ladder radii must be nonnegative");
}

/// Re-parses the problem after editing its JSON form (grid overrides, sweeps).
Problem edit_problem(const Problem& p, const std::function<void(json&)>& edit) {
  json root = json::parse(p.canonical);
  edit(root);
  return parse_problem(root.dump());
}

Problem with_dt(const Problem& p, double dt) {
  if (!(dt > 0.0)) throw ConfigError("--dt", "dt must be positive");
  const double T = p.grid.horizon();
  const long long n = std::llround(T / dt);
  if (n < 1 || std::abs(n * dt - T) > 1e-9 * T)
    throw ConfigError("--dt", "dt must divide the horizon T");
  return edit_problem(p, [&](json& r) { r["grid"]["n_steps"] = n; });
}

struct Solved {
  std::optional<RiccatiSolution> ode;
  std::optional<LatticeSolution> lattice;
  std::optional<LadderReport> ladder;
  double P1_0 = 0.0;
  double P2_0 = 0.0;
  std::string method;
  AssumptionReport report;
};

RiccatiOptions riccati_options(const SolverSettings& s) {
  RiccatiOptions o;
  o.delta_lower = s.delta_lower;
  o.saddle.tol = s.tol;
  o.saddle.max_iter = s.max_iter;
  return o;
}

Solved solve(const Problem& p, const SolverSettings& s) {
  Solved out;
  const RiccatiOptions ro = riccati_options(s);
  if (s.mode == "ode") {
    out.ode = solve_ode(p.coeffs, p.grid, p.jumps, p.cone1, p.cone2, ro);
  } else if (s.mode == "ladder") {
    auto [sol, rep] = monotone_ladder(p.coeffs, p.grid, p.jumps, p.cone1, p.cone2,
                                      s.levels.empty() ? default_levels() : s.levels,
                                      s.ladder_tol, ro);
    out.ode = std::move(sol);
    out.ladder = std::move(rep);
  } else {
    LatticeOptions lo;
    lo.delta_lower = s.delta_lower;
    lo.saddle = ro.saddle;
    out.lattice = solve_bsde_on_lattice(p.coeffs, build_lattice(p.grid, p.jumps, p.jump_cap),
                                        p.cone1, p.cone2, lo);
  }
  if (out.ode) {
    out.P1_0 = out.ode->P1[0];
    out.P2_0 = out.ode->P2[0];
    out.method = out.ode->method;
    out.report = out.ode->report;
  } else {
    out.P1_0 = out.lattice->P1[0][0];
    out.P2_0 = out.lattice->P2[0][0];
    out.method = "lattice";
    out.report = out.lattice->report;
  }
  return out;
}

json ladder_json(const LadderReport& r, const Provenance& prov) {
  json levels = json::array();
  for (std::size_t i = 0; i < r.levels.size(); ++i)
    levels.push_back({{"n", num(r.levels[i].n)},
                      {"n_bar", num(r.levels[i].n_bar)},
                      {"P1_at_0", r.P1_at_0[i]},
                      {"P2_at_0", r.P2_at_0[i]}});
  json comps = json::array();
  for (const auto& c : r.comparisons)
    comps.push_back({{"from", c.from},
                     {"to", c.to},
                     {"along", c.along_n ? "n" : "n_bar"},
                     {"worst", c.worst},
                     {"ok", c.ok}});
  return json{{"version", prov.version}, {"config_hash", prov.config_hash},
              {"levels", levels},        {"comparisons", comps},
              {"finest", r.finest},      {"tol", r.tol},
              {"monotone", r.monotone}};
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw ConfigError("--out", "output directory '" + dir + "' is not writable");
}

bool want_json(const Globals& g) { return g.format == "json" || g.format == "both"; }
bool want_csv(const Globals& g) { return g.format == "csv" || g.format == "both"; }

void print_table(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& rows) {
  std::size_t w = 0;
  for (const auto& r : rows) w = std::max(w, r.first.size());
  for (const auto& r : rows) out << std::left << std::setw(static_cast<int>(w) + 2) << r.first << r.second << '\n';
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(10) << x;
  return os.str();
}

// ------------------------------------------------------------------ solve

int cmd_solve(const Globals& g, const std::string& mode, const std::string& levels, double dt,
              double delta_lower, std::ostream& out) {
  Problem p = load_problem(g.config);
  SolverSettings s = solver_settings(p);
  if (!mode.empty()) s.mode = mode;
  if (!levels.empty()) s.levels = parse_levels_flag(levels);
  if (delta_lower > 0.0) s.delta_lower = delta_lower;
  check_settings(s);
  if (dt > 0.0) p = with_dt(p, dt);
  ensure_dir(g.out);

  const auto t0 = std::chrono::steady_clock::now();
  const Solved sv = solve(p, s);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const Provenance prov{p.hash};
  const fs::path dir(g.out);

  if (sv.ode) {
    if (want_csv(g)) write_file((dir / "solution.csv").string(), solution_csv(*sv.ode));
    if (want_json(g)) write_file((dir / "solution.json").string(), solution_json(*sv.ode, prov));
  } else {
    if (want_csv(g)) write_file((dir / "lattice.csv").string(), lattice_csv(*sv.lattice));
    if (want_json(g)) write_file((dir / "lattice.json").string(), lattice_json(*sv.lattice, prov));
  }
  if (sv.ladder) write_file((dir / "ladder.json").string(), ladder_json(*sv.ladder, prov).dump(2) + "\n");
  write_file((dir / "assumptions.json").string(), report_json(sv.report, prov));

  std::vector<std::pair<std::string, std::string>> rows{
      {"method", sv.method},
      {"n_steps", std::to_string(p.grid.n_steps())},
      {"P1(0)", fmt(sv.P1_0)},
      {"P2(0)", fmt(sv.P2_0)},
      {"K", fmt(sv.report.K)},
      {"assumptions hold", sv.report.standing_assumptions_hold() ? "yes" : "no"},
      {"config hash", p.hash},
      {"seconds", fmt(secs)}};
  if (sv.ladder) rows.emplace_back("ladder monotone", sv.ladder->monotone ? "yes" : "no");
  print_table(out, rows);
  if (sv.ladder && !sv.ladder->monotone) return kChecksFailed;
  return kOk;
}

// ----------------------------------------------------------------- verify

struct Check {
  std::string name;
  bool statistical = false;  // judged only with n_paths >= 2
  bool pass = false;
  json stats;
};

std::vector<Vector> random_schedule(const Cone& cone, int n_steps, std::mt19937_64& rng) {
  std::vector<Vector> pieces;
  for (int k = 0; k < 4; ++k) pieces.push_back(cone.random_member(rng, 1.0));
  std::vector<Vector> sched(n_steps);
  for (int i = 0; i < n_steps; ++i) sched[i] = pieces[std::min(3, 4 * i / n_steps)];
  return sched;
}

Check psi_suite(const Problem& p, const RiccatiSolution& sol, const FeedbackLaw& law,
                const std::vector<double>& mesh, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed ^ 0x7073ULL));
  Check c{"psi", false, true, {}};
  double worst_eq = 0.0, worst_p1 = 0.0, worst_p2 = 0.0;
  long long points = 0, one_sided = 0;
  const double tol = 1e-9;
  for (int i = 0; i < sol.n_nodes(); ++i) {
    PsiNode node;
    node.snapshot = sol.snapshot(i);
    node.H1 = sol.saddle1[i].value;
    node.H2 = sol.saddle2[i].value;
    const StepCoefficients& co = p.coeffs.at(std::min(i, p.coeffs.n_steps() - 1));
    for (double X : mesh) {
      const double xp = std::max(X, 0.0), xm = std::max(-X, 0.0);
      const Vector u1 = law.theta1_plus[i] * xp + law.theta1_minus[i] * xm;
      const Vector u2 = law.theta2_plus[i] * xp + law.theta2_minus[i] * xm;
      const double at = psi_eval(X, u1, u2, node, co, p.jumps);
      worst_eq = std::max(worst_eq, std::abs(at));
      ++points;
      for (int r = 0; r < 2; ++r) {
        const Vector w2 = p.cone2.random_member(rng, 1.0 + std::abs(X));
        const Vector w1 = p.cone1.random_member(rng, 1.0 + std::abs(X));
        worst_p2 = std::max(worst_p2, psi_eval(X, u1, w2, node, co, p.jumps));
        worst_p1 = std::max(worst_p1, -psi_eval(X, w1, u2, node, co, p.jumps));
        one_sided += 2;
      }
    }
  }
  c.pass = worst_eq <= tol && worst_p2 <= tol && worst_p1 <= tol;
  c.stats = {{"points", points},
             {"one_sided_points", one_sided},
             {"max_abs_psi_at_saddle", worst_eq},
             {"max_psi_player2_deviation", worst_p2},
             {"max_neg_psi_player1_deviation", worst_p1},
             {"tol", tol}};
  return c;
}

int cmd_verify(const Globals& g, const std::string& mode, int paths, const std::string& suites,
               double corrupt, bool paths_csv, std::ostream& out) {
  Problem p = load_problem(g.config);
  SolverSettings s = solver_settings(p);
  VerifySettings v = verify_settings(p);
  if (!mode.empty()) s.mode = mode;
  if (s.mode == "ladder") s.mode = "ode";  // the ladder limit is the direct solve
  if (paths > 0) v.n_paths = paths;
  if (paths == 0 || v.n_paths < 1) throw ConfigError("--paths", "n_paths must be >= 1");
  if (!suites.empty()) {
    v.suites.clear();
    std::istringstream in(suites);
    std::string item;
    while (std::getline(in, item, ',')) v.suites.push_back(item);
  }
  for (const auto& name : v.suites)
    if (name != "value" && name != "saddle" && name != "psi" && name != "convexity" &&
        name != "stationarity")
      throw ConfigError("--suites", "unknown suite '" + name + "'");
  v.corrupt_theta_plus = corrupt;
  v.paths_csv = paths_csv;
  check_settings(s);
  ensure_dir(g.out);

  const Solved sv = solve(p, s);
  FeedbackLaw law = sv.ode ? extract_feedback(*sv.ode) : extract_feedback(*sv.lattice);
  if (v.corrupt_theta_plus != 1.0) {
    for (auto* th : {&law.theta1_plus, &law.theta2_plus})
      for (Vector& t : *th) t *= v.corrupt_theta_plus;
  }
  const auto lawp = std::make_shared<const FeedbackLaw>(law);
  auto enabled = [&](const char* name) {
    return std::find(v.suites.begin(), v.suites.end(), name) != v.suites.end();
  };

  SimOptions so;
  so.n_paths = v.n_paths;
  so.seed = g.seed;
  so.stride = v.stride;
  so.cone1 = &p.cone1;
  so.cone2 = &p.cone2;

  std::vector<Check> checks;
  if (enabled("value")) {
    const ValueFormulaReport r =
        verify_value_formula(p.coeffs, p.grid, p.jumps, sv.P1_0, sv.P2_0, lawp, p.init, so);
    checks.push_back({"value_formula", true, r.pass,
                      {{"mc_mean", num(r.mc_mean)},
                       {"mc_std_error", num(r.mc_std_error)},
                       {"expected", num(r.expected)},
                       {"diff_mean", num(r.diff_mean)},
                       {"diff_std_error", num(r.diff_std_error)},
                       {"bias", num(r.bias)},
                       {"z", num(r.z)}}});
  }
  if (enabled("saddle")) {
    const auto arms = perturbation_corpus(lawp, p.cone1, p.cone2, g.seed);
    const SaddleReport r =
        verify_saddle(p.coeffs, p.grid, p.jumps, lawp, arms, p.init, p.cone1, p.cone2, so);
    json arr = json::array();
    for (const auto& a : r.arms)
      arr.push_back({{"name", a.name},
                     {"player", a.player},
                     {"diff_mean", num(a.diff_mean)},
                     {"diff_std_error", num(a.diff_std_error)},
                     {"pass", a.pass}});
    checks.push_back({"saddle", true, r.all_pass,
                      {{"baseline_mean", num(r.baseline_mean)},
                       {"baseline_std_error", num(r.baseline_std_error)},
                       {"arms", arr}}});
  }
  if (enabled("psi")) {
    if (sv.ode) {
      checks.push_back(psi_suite(p, *sv.ode, law, v.psi_mesh, g.seed));
    } else {
      checks.push_back({"psi", false, true, {{"skipped", "lattice mode"}}});
    }
  }
  if (enabled("convexity")) {
    std::mt19937_64 rng(splitmix64(g.seed ^ 0x636fULL));
    std::uniform_real_distribution<double> lam(0.1, 0.9);
    const int n = p.grid.n_steps();
    bool ok = true, ucc = true;
    double worst = 0.0, min_delta = std::numeric_limits<double>::infinity();
    SimOptions co = so;
    co.cone1 = co.cone2 = nullptr;
    for (int k = 0; k < v.convexity_instances; ++k) {
      const Policy u1 = Policy::schedule(random_schedule(p.cone1, n, rng));
      const Policy u1p = Policy::schedule(random_schedule(p.cone1, n, rng));
      const Policy u2 = Policy::schedule(random_schedule(p.cone2, n, rng));
      const double l = lam(rng);
      co.seed = g.seed + static_cast<std::uint64_t>(k);
      const ConvexityReport r =
          verify_convexity_identity(p.coeffs, p.grid, p.jumps, u1, u1p, u2, l, p.init, co);
      ok = ok && r.pass;
      const double se = r.residual_std_error;
      worst = std::max(worst, std::abs(r.residual_mean) / (std::isfinite(se) && se > 0 ? se : 1.0));
      if (r.energy > 0.0) {
        min_delta = std::min(min_delta, r.delta_hat);
        ucc = ucc && r.delta_hat > 0.0;
      }
    }
    const bool judged_ucc = sv.report.standing_assumptions_hold();
    checks.push_back({"convexity", false, ok && (!judged_ucc || ucc),
                      {{"instances", v.convexity_instances},
                       {"identity_pass", ok},
                       {"worst_residual_over_stderr", num(worst)},
                       {"min_delta_hat", num(min_delta)},
                       {"ucc_judged", judged_ucc},
                       {"ucc_pass", ucc}}});
  }
  if (enabled("stationarity")) {
    std::mt19937_64 rng(splitmix64(g.seed ^ 0x7374ULL));
    const int n = p.grid.n_steps();
    const Policy v1 = Policy::constant(p.cone1.random_member(rng, 1.0), n);
    const Policy v2 = Policy::constant(p.cone2.random_member(rng, 1.0), n);
    const StationarityReport r =
        directional_stationarity(p.coeffs, p.grid, p.jumps, lawp, v1, v2, v.h, p.init, so);
    checks.push_back({"stationarity", true, r.pass1 && r.pass2,
                      {{"h", v.h},
                       {"q1", num(r.q1)},
                       {"q1_std_error", num(r.q1_std_error)},
                       {"q2", num(r.q2)},
                       {"q2_std_error", num(r.q2_std_error)},
                       {"pass1", r.pass1},
                       {"pass2", r.pass2}}});
  }

  if (v.paths_csv) {
    SimOptions po = so;
    const SimulationResult r = simulate_paths(p.coeffs, p.grid, p.jumps, Policy::feedback(lawp, 1),
                                              Policy::feedback(lawp, 2), p.init, po);
    std::ostringstream os;
    os << "path,xi,cost,u1_energy,u2_energy\n";
    for (int i = 0; i < r.n_paths; ++i)
      os << i << ',' << format_double(r.xi[i]) << ',' << format_double(r.cost[i]) << ','
         << format_double(r.u1_energy[i]) << ',' << format_double(r.u2_energy[i]) << '\n';
    write_file((fs::path(g.out) / "paths.csv").string(), os.str());
  }

  bool all = true;
  json arr = json::array();
  std::vector<std::pair<std::string, std::string>> rows;
  for (const Check& c : checks) {
    const bool judged = !c.statistical || v.n_paths >= 2;
    if (judged) all = all && c.pass;
    json e = c.stats;
    e["name"] = c.name;
    e["pass"] = c.pass;
    e["judged"] = judged;
    e["statistical"] = c.statistical;
    arr.push_back(e);
    rows.emplace_back(c.name, !judged ? "excluded (n_paths < 2)" : c.pass ? "PASS" : "FAIL");
  }
  json doc{{"version", CONELQ_VERSION},
           {"config_hash", p.hash},
           {"seed", g.seed},
           {"n_paths", v.n_paths},
           {"mode", s.mode},
           {"corrupt_theta_plus", v.corrupt_theta_plus},
           {"P1_0", sv.P1_0},
           {"P2_0", sv.P2_0},
           {"checks", arr},
           {"all_pass", all}};
  write_file((fs::path(g.out) / "verify.json").string(), doc.dump(2) + "\n");
  rows.emplace_back("overall", all ? "PASS" : "FAIL");
  print_table(out, rows);
  return all ? kOk : kChecksFailed;
}

// ------------------------------------------------------------------ sweep

int cmd_sweep(const Globals& g, const std::string& param, const std::string& values_s,
              double fixed_radius, std::optional<double> exact, bool verify, bool parallel,
              int paths, std::ostream& out) {
  const Problem base = load_problem(g.config);
  SolverSettings s = solver_settings(base);
  check_settings(s);
  std::vector<double> values;
  {
    std::istringstream in(values_s);
    std::string item;
    while (std::getline(in, item, ',')) {
      if (item.empty()) continue;
      try {
        values.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw ConfigError("--values", "--values: bad number '" + item + "'");
      }
    }
  }
  if (values.empty()) throw ConfigError("--values", "sweep needs at least one value");
  static const std::vector<std::string> known{"dt", "n_steps", "T", "delta_lower", "ladder.n",
                                              "ladder.n_bar", "coefficients.A", "coefficients.C",
                                              "coefficients.Q", "coefficients.G", "initial.point"};
  if (std::find(known.begin(), known.end(), param) == known.end())
    throw ConfigError("--param", "unknown sweep parameter '" + param + "'");
  ensure_dir(g.out);

  struct Row {
    double P1_0 = 0, P2_0 = 0;
    std::optional<double> z;
    std::optional<bool> vpass;
  };
  std::vector<Row> rows(values.size());
  // Problems are built up front so config errors surface before any solve.
  std::vector<Problem> problems;
  std::vector<SolverSettings> settings;
  for (double val : values) {
    Problem p = base;
    SolverSettings ss = s;
    if (param == "dt") {
      p = with_dt(base, val);
    } else if (param == "n_steps") {
      if (val < 1 || val != std::floor(val)) throw ConfigError("--values", "n_steps must be a positive integer");
      p = edit_problem(base, [&](json& r) { r["grid"]["n_steps"] = static_cast<long long>(val); });
    } else if (param == "T") {
      p = edit_problem(base, [&](json& r) { r["grid"]["T"] = val; });
    } else if (param == "delta_lower") {
      ss.delta_lower = val;
    } else if (param == "ladder.n" || param == "ladder.n_bar") {
      ss.mode = "truncated";
      ss.levels = {param == "ladder.n" ? Truncation{val, fixed_radius} : Truncation{fixed_radius, val}};
    } else if (param == "initial.point") {
      p = edit_problem(base, [&](json& r) { r["initial"] = json{{"point", val}}; });
    } else {
      const std::string key = param.substr(std::string("coefficients.").size());
      p = edit_problem(base, [&](json& r) { r["coefficients"][key] = val; });
    }
    problems.push_back(std::move(p));
    settings.push_back(ss);
  }

  auto run_one = [&](std::size_t i) {
    const Problem& p = problems[i];
    const SolverSettings& ss = settings[i];
    Row r;
    std::optional<RiccatiSolution> sol;
    if (ss.mode == "truncated") {
      sol = solve_truncated(ss.levels[0], p.coeffs, p.grid, p.jumps, p.cone1, p.cone2,
                            riccati_options(ss));
      r.P1_0 = sol->P1[0];
      r.P2_0 = sol->P2[0];
    } else {
      Solved sv = solve(p, ss);
      r.P1_0 = sv.P1_0;
      r.P2_0 = sv.P2_0;
      if (sv.ode) sol = std::move(sv.ode);
    }
    if (verify && sol) {
      SimOptions so;
      so.n_paths = paths > 0 ? paths : 10000;
      so.seed = g.seed;
      const auto law = std::make_shared<const FeedbackLaw>(extract_feedback(*sol));
      const ValueFormulaReport vr =
          verify_value_formula(p.coeffs, p.grid, p.jumps, r.P1_0, r.P2_0, law, p.init, so);
      r.z = vr.z;
      r.vpass = vr.pass;
    }
    rows[i] = r;
  };
  if (parallel) {
    parallel_for(static_cast<int>(values.size()), [&](int b, int e) {
      for (int i = b; i < e; ++i) run_one(static_cast<std::size_t>(i));
    });
  } else {
    for (std::size_t i = 0; i < values.size(); ++i) run_one(i);
  }

  std::ostringstream csv;
  csv << "parameter,value,metric,result\n";
  auto emit = [&](double val, const char* metric, double result) {
    csv << param << ',' << format_double(val) << ',' << metric << ',' << format_double(result) << '\n';
  };
  out << std::left << std::setw(14) << param << std::setw(20) << "P1(0)" << std::setw(20) << "P2(0)"
      << std::setw(16) << "change" << (exact ? "error" : "") << '\n';
  for (std::size_t i = 0; i < values.size(); ++i) {
    const Row& r = rows[i];
    emit(values[i], "P1_0", r.P1_0);
    emit(values[i], "P2_0", r.P2_0);
    double change = std::numeric_limits<double>::quiet_NaN();
    if (i > 0) {
      change = std::abs(r.P1_0 - rows[i - 1].P1_0);
      emit(values[i], "change_P1_0", change);
    }
    if (exact) emit(values[i], "error_P1_0", std::abs(r.P1_0 - *exact));
    if (r.z) {
      emit(values[i], "value_z", *r.z);
      emit(values[i], "value_pass", *r.vpass ? 1.0 : 0.0);
    }
    out << std::left << std::setw(14) << fmt(values[i]) << std::setw(20) << fmt(r.P1_0)
        << std::setw(20) << fmt(r.P2_0) << std::setw(16) << (i > 0 ? fmt(change) : "-")
        << (exact ? fmt(std::abs(r.P1_0 - *exact)) : "") << '\n';
  }
  write_file((fs::path(g.out) / "sweep.csv").string(), csv.str());
  return kOk;
}

// ------------------------------------------------------------ hamiltonian

int cmd_hamiltonian_eval(const Globals& g, const std::string& snapshot_path, int k,
                         std::optional<double> radius, std::ostream& out) {
  const Problem p = load_problem(g.config);
  json snap;
  try {
    snap = json::parse(read_file(snapshot_path));
  } catch (const json::exception& e) {
    throw ConfigError(snapshot_path, std::string("snapshot: ") + e.what());
  }
  Snapshot s;
  try {
    s.t_idx = snap.value("t_idx", 0);
    s.P1 = snap.at("P1").get<double>();
    s.P2 = snap.at("P2").get<double>();
    s.L1 = snap.value("L1", 0.0);
    s.L2 = snap.value("L2", 0.0);
    s.G1 = snap.value("G1", std::vector<double>{});
    s.G2 = snap.value("G2", std::vector<double>{});
  } catch (const json::exception& e) {
    throw ConfigError(snapshot_path, std::string("snapshot: ") + e.what());
  }
  if (s.t_idx < 0 || s.t_idx >= p.coeffs.n_steps())
    throw ConfigError("t_idx", "snapshot t_idx out of range");
  const StepCoefficients& c = p.coeffs.at(s.t_idx);
  SaddleOptions o;
  if (radius) o.trunc = Truncation{*radius, *radius};
  json arr = json::array();
  for (int kk : {1, 2}) {
    if (k != 0 && k != kk) continue;
    const SaddleResult r = saddle(kk, c, p.jumps, s, p.cone1, p.cone2, o);
    arr.push_back({{"k", kk},
                   {"v1", std::vector<double>(r.v1.data(), r.v1.data() + r.v1.size())},
                   {"v2", std::vector<double>(r.v2.data(), r.v2.data() + r.v2.size())},
                   {"value", r.value},
                   {"iterations", r.iterations},
                   {"residual", r.residual},
                   {"method", to_string(r.method)}});
  }
  out << (arr.size() == 1 ? arr[0] : arr).dump(2) << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cone-constrained LQ games with jumps: solve, verify, sweep"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "problem file (JSON)");
  app.add_option("--seed", g.seed, "64-bit seed for all randomness");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--format", g.format, "artifact format")
      ->check(CLI::IsMember({"json", "csv", "both"}));
  app.add_flag_function("--version", [&](std::int64_t) {
    out << "conelq " << CONELQ_VERSION << '\n';
    throw CLI::Success();
  }, "print the version");

  std::string mode, levels, suites, snapshot, param, values;
  double dt = 0.0, delta_lower = 0.0, corrupt = 1.0, fixed_radius = 1e6;
  int paths = -1, k = 0;
  bool paths_csv = false, sweep_verify = false, sweep_parallel = false;
  std::optional<double> exact, radius;

  auto* solve = app.add_subcommand("solve", "solve the Riccati system and write artifacts");
  solve->add_option("--mode", mode, "ode | lattice | ladder")
      ->check(CLI::IsMember({"ode", "lattice", "ladder"}));
  solve->add_option("--levels", levels, "ladder levels n:n_bar,...");
  solve->add_option("--dt", dt, "override the grid step");
  solve->add_option("--delta-lower", delta_lower, "lower constant for the assumption report");

  auto* verify = app.add_subcommand("verify", "run the Monte Carlo and identity checks");
  verify->add_option("--mode", mode, "ode | lattice")->check(CLI::IsMember({"ode", "lattice", "ladder"}));
  verify->add_option("--paths", paths, "number of Monte Carlo paths");
  verify->add_option("--suites", suites, "comma list: value,saddle,psi,convexity,stationarity");
  verify->add_option("--corrupt-theta-plus", corrupt,
                     "scale the positive-part feedback (falsification control)");
  verify->add_flag("--paths-csv", paths_csv, "dump per-path costs to paths.csv");

  auto* sweep = app.add_subcommand("sweep", "solve over a list of parameter values");
  sweep->add_option("--param", param, "parameter name")->required();
  sweep->add_option("--values", values, "comma-separated values")->required();
  sweep->add_option("--fixed-radius", fixed_radius, "other radius for ladder.n / ladder.n_bar");
  sweep->add_option("--exact", exact, "exact P1(0) for an error column");
  sweep->add_flag("--verify", sweep_verify, "also run the value-formula check per value");
  sweep->add_flag("--parallel", sweep_parallel, "run values in parallel");
  sweep->add_option("--paths", paths, "paths for --verify");

  auto* ham = app.add_subcommand("hamiltonian", "single-snapshot Hamiltonian tools");
  ham->require_subcommand(1);
  auto* ham_eval = ham->add_subcommand("eval", "print the saddle of H_k at a snapshot");
  ham_eval->add_option("--snapshot", snapshot, "snapshot JSON {t_idx, P1, P2, L1, L2, G1, G2}")
      ->required();
  ham_eval->add_option("--k", k, "1, 2 or 0 for both")->check(CLI::Range(0, 2));
  ham_eval->add_option("--radius", radius, "truncate both players to this radius");

  std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::Success&) {
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (g.config.empty()) throw ConfigError("--config", "--config is required");
    if (*solve) return cmd_solve(g, mode, levels, dt, delta_lower, out);
    if (*verify) return cmd_verify(g, mode, paths, suites, corrupt, paths_csv, out);
    if (*sweep)
      return cmd_sweep(g, param, values, fixed_radius, exact, sweep_verify, sweep_parallel, paths,
                       out);
    if (*ham_eval) return cmd_hamiltonian_eval(g, snapshot, k, radius, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    err << "solver error: " << e.what() << '\n';
    return kSolverError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kSolverError;
  }
  return kConfigError;
}

}  // namespace conelq::cli
