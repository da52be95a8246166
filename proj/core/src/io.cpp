#include "conelq/io.hpp"

#include "conelq/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace conelq {

using json = nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object())
    throw ConfigError(path, "config: '" + path + "' must be an object");
  auto it = obj.find(key);
  if (it == obj.end())
    throw ConfigError(join(path, key), "config: missing key '" + join(path, key) + "'");
  return *it;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "config: '" + path + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "config: '" + path + "' is not finite");
  return x;
}

bool all_numbers(const json& v) {
  for (const auto& e : v)
    if (!e.is_number()) return false;
  return true;
}

// Scalar coefficient: a number, or one number per step.
std::vector<double> scalar_field(const json& v, int n, const std::string& path) {
  if (v.is_number()) return std::vector<double>(n, number(v, path));
  if (v.is_array() && all_numbers(v)) {
    if (static_cast<int>(v.size()) != n)
      throw ConfigError(path, "config: '" + path + "' has " + std::to_string(v.size()) +
                                  " entries, expected " + std::to_string(n) + " (one per step)");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i)
      out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
  }
  throw ConfigError(path, "config: '" + path + "' must be a number or a per-step array");
}

Vector vector_const(const json& v, int m, const std::string& path) {
  if (v.is_number()) {
    if (m != 1)
      throw ConfigError(path, "config: '" + path + "' is a scalar but the dimension is " +
                                  std::to_string(m));
    return Vector::Constant(1, number(v, path));
  }
  if (!v.is_array() || !all_numbers(v))
    throw ConfigError(path, "config: '" + path + "' must be a vector");
  if (static_cast<int>(v.size()) != m)
    throw ConfigError(path, "config: '" + path + "' has length " + std::to_string(v.size()) +
                                ", expected " + std::to_string(m));
  Vector out(m);
  for (int i = 0; i < m; ++i) out[i] = number(v[i], path);
  return out;
}

// Vector coefficient: a constant vector (a number when m = 1), or an array of
// per-step vectors.
std::vector<Vector> vector_field(const json& v, int m, int n, const std::string& path) {
  if (v.is_array() && !v.empty() && v[0].is_array()) {
    if (static_cast<int>(v.size()) != n)
      throw ConfigError(path, "config: '" + path + "' has " + std::to_string(v.size()) +
                                  " per-step entries, expected " + std::to_string(n));
    std::vector<Vector> out;
    for (std::size_t i = 0; i < v.size(); ++i)
      out.push_back(vector_const(v[i], m, path + "[" + std::to_string(i) + "]"));
    return out;
  }
  return std::vector<Vector>(n, vector_const(v, m, path));
}

Matrix matrix_const(const json& v, int r, int c, const std::string& path) {
  if (v.is_number()) {
    if (r != 1 || c != 1)
      throw ConfigError(path, "config: '" + path + "' is a scalar but must be " +
                                  std::to_string(r) + "x" + std::to_string(c));
    return Matrix::Constant(1, 1, number(v, path));
  }
  if (!v.is_array() || static_cast<int>(v.size()) != r)
    throw ConfigError(path, "config: '" + path + "' must have " + std::to_string(r) + " rows");
  Matrix out(r, c);
  for (int i = 0; i < r; ++i) {
    const json& row = v[i];
    if (!row.is_array() || !all_numbers(row) || static_cast<int>(row.size()) != c)
      throw ConfigError(path, "config: '" + path + "' row " + std::to_string(i) + " must have " +
                                  std::to_string(c) + " numbers");
    for (int j = 0; j < c; ++j) out(i, j) = number(row[j], path);
  }
  return out;
}

bool is_matrix_literal(const json& v) {
  return v.is_array() && !v.empty() && v[0].is_array() && all_numbers(v[0]);
}

// Matrix coefficient: a constant (rows of numbers, or a number for 1x1), or
// a per-step array of such constants.
std::vector<Matrix> matrix_field(const json& v, int r, int c, int n, const std::string& path) {
  if (v.is_number() || is_matrix_literal(v) || r == 0)
    return std::vector<Matrix>(n, matrix_const(v, r, c, path));
  if (v.is_array()) {
    if (static_cast<int>(v.size()) != n)
      throw ConfigError(path, "config: '" + path + "' has " + std::to_string(v.size()) +
                                  " per-step entries, expected " + std::to_string(n));
    std::vector<Matrix> out;
    for (std::size_t i = 0; i < v.size(); ++i)
      out.push_back(matrix_const(v[i], r, c, path + "[" + std::to_string(i) + "]"));
    return out;
  }
  throw ConfigError(path, "config: '" + path + "' must be a matrix or a per-step array");
}

int infer_dim(const json& v, const std::string& path) {
  if (v.is_number()) return 1;
  if (v.is_array()) {
    if (v.empty()) return 0;
    if (all_numbers(v)) return static_cast<int>(v.size());
    if (v[0].is_array()) return static_cast<int>(v[0].size());
    if (v[0].is_number()) return 1;
  }
  throw ConfigError(path, "config: cannot infer a dimension from '" + path + "'");
}

Cone parse_cone(const json& v, int m, const std::string& path) {
  std::string type;
  if (v.is_string()) {
    type = v.get<std::string>();
  } else if (v.is_object()) {
    type = require(v, "type", path).get<std::string>();
  } else {
    throw ConfigError(path, "config: '" + path + "' must be a string or an object");
  }
  if (type == "full") return Cone::full(m);
  if (type == "orthant" || type == "nonnegative") return Cone::orthant(m);
  if (type == "generated") {
    const json& g = require(v, "generators", path);
    const std::string gp = join(path, "generators");
    if (!g.is_array()) throw ConfigError(gp, "config: '" + gp + "' must be a list of vectors");
    Matrix G(m, static_cast<Eigen::Index>(g.size()));
    for (std::size_t j = 0; j < g.size(); ++j)
      G.col(j) = vector_const(g[j], m, gp + "[" + std::to_string(j) + "]");
    try {
      return Cone::generated(G);
    } catch (const ArgumentError& e) {
      throw ConfigError(gp, std::string("config: ") + e.what());
    }
  }
  throw ConfigError(path, "config: unknown cone type '" + type + "' at '" + path + "'");
}

InitialLaw parse_initial(const json& v, const std::string& path) {
  if (v.contains("point")) return InitialLaw(InitialLaw::Point{number(v["point"], join(path, "point"))});
  if (!v.contains("sampler"))
    throw ConfigError(join(path, "point"), "config: '" + path + "' needs 'point' or 'sampler'");
  const std::string sp = join(path, "sampler");
  const json& s = v["sampler"];
  const std::string law = require(s, "law", sp).get<std::string>();
  try {
    if (law == "normal")
      return InitialLaw(InitialLaw::Normal{number(require(s, "mean", sp), join(sp, "mean")),
                                           number(require(s, "std", sp), join(sp, "std"))});
    if (law == "uniform")
      return InitialLaw(InitialLaw::Uniform{number(require(s, "lo", sp), join(sp, "lo")),
                                            number(require(s, "hi", sp), join(sp, "hi"))});
  } catch (const ArgumentError& e) {
    throw ConfigError(sp, std::string("config: ") + e.what());
  }
  throw ConfigError(join(sp, "law"), "config: unknown sampler law '" + law + "'");
}

constexpr const char* kCoefficientKeys[] = {"A",  "B1", "B2", "C",   "D1",  "D2", "Q",
                                            "S1", "S2", "R11", "R12", "R22", "G"};

// Fills the fields present in `obj` into per-step blocks; missing keys are
// left untouched (used for node overrides).
void fill_fields(const json& obj, std::vector<StepCoefficients>& steps, int m1, int m2,
                 const std::string& path) {
  const int n = static_cast<int>(steps.size());
  auto scal = [&](const char* k, double StepCoefficients::*f) {
    if (!obj.contains(k)) return;
    const auto v = scalar_field(obj[k], n, join(path, k));
    for (int i = 0; i < n; ++i) steps[i].*f = v[i];
  };
  auto vec = [&](const char* k, Vector StepCoefficients::*f, int m) {
    if (!obj.contains(k)) return;
    const auto v = vector_field(obj[k], m, n, join(path, k));
    for (int i = 0; i < n; ++i) steps[i].*f = v[i];
  };
  auto mat = [&](const char* k, Matrix StepCoefficients::*f, int r, int c) {
    if (!obj.contains(k)) return;
    const auto v = matrix_field(obj[k], r, c, n, join(path, k));
    for (int i = 0; i < n; ++i) steps[i].*f = v[i];
  };
  scal("A", &StepCoefficients::A);
  scal("C", &StepCoefficients::C);
  scal("Q", &StepCoefficients::Q);
  vec("B1", &StepCoefficients::B1, m1);
  vec("B2", &StepCoefficients::B2, m2);
  vec("D1", &StepCoefficients::D1, m1);
  vec("D2", &StepCoefficients::D2, m2);
  vec("S1", &StepCoefficients::S1, m1);
  vec("S2", &StepCoefficients::S2, m2);
  mat("R11", &StepCoefficients::R11, m1, m1);
  mat("R12", &StepCoefficients::R12, m1, m2);
  mat("R22", &StepCoefficients::R22, m2, m2);
}

std::vector<int> int_list(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "config: '" + path + "' must be a list of integers");
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer())
      throw ConfigError(path, "config: '" + path + "' must be a list of integers");
    out.push_back(e.get<int>());
  }
  return out;
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Problem parse_problem(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("config: parse error: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("", "config: top level must be an object");

  try {
    const json& g = require(root, "grid", "");
    const double T = number(require(g, "T", "grid"), "grid.T");
    const json& ns = require(g, "n_steps", "grid");
    if (!ns.is_number_integer() || ns.get<long long>() < 1)
      throw ConfigError("grid.n_steps", "config: 'grid.n_steps' must be a positive integer");
    if (!(T > 0.0)) throw ConfigError("grid.T", "config: 'grid.T' must be positive");
    const TimeGrid grid(T, ns.get<int>());
    const int n = grid.n_steps();

    const json& co = require(root, "coefficients", "");
    for (const char* k : kCoefficientKeys) require(co, k, "coefficients");
    const int m1 = infer_dim(co["B1"], "coefficients.B1");
    const int m2 = infer_dim(co["B2"], "coefficients.B2");

    std::vector<double> nu;
    std::vector<const json*> marks;
    if (root.contains("jumps")) {
      const json& jm = require(root["jumps"], "marks", "jumps");
      if (!jm.is_array()) throw ConfigError("jumps.marks", "config: 'jumps.marks' must be a list");
      for (std::size_t j = 0; j < jm.size(); ++j) {
        const std::string p = "jumps.marks[" + std::to_string(j) + "]";
        const double v = number(require(jm[j], "nu", p), p + ".nu");
        if (!(v > 0.0)) throw ConfigError(p + ".nu", "config: '" + p + ".nu' must be positive");
        nu.push_back(v);
        for (const char* k : {"E", "F1", "F2"}) require(jm[j], k, p);
        marks.push_back(&jm[j]);
      }
    }
    const int J = static_cast<int>(nu.size());

    std::vector<StepCoefficients> steps(n, StepCoefficients::zeros(m1, m2, J));
    fill_fields(co, steps, m1, m2, "coefficients");
    for (int j = 0; j < J; ++j) {
      const std::string p = "jumps.marks[" + std::to_string(j) + "]";
      const auto E = scalar_field((*marks[j])["E"], n, p + ".E");
      const auto F1 = vector_field((*marks[j])["F1"], m1, n, p + ".F1");
      const auto F2 = vector_field((*marks[j])["F2"], m2, n, p + ".F2");
      for (int i = 0; i < n; ++i) {
        steps[i].E[j] = E[i];
        steps[i].F1[j] = F1[i];
        steps[i].F2[j] = F2[i];
      }
    }
    const double G = number(co["G"], "coefficients.G");

    CoefficientSet coeffs = [&] {
      try {
        return CoefficientSet(steps, G);
      } catch (const Error& e) {
        throw ConfigError("coefficients", std::string("config: ") + e.what());
      }
    }();

    int cap = kDefaultJumpCap;
    if (root.contains("lattice") && root["lattice"].contains("jump_cap")) {
      const json& c = root["lattice"]["jump_cap"];
      if (!c.is_number_integer() || c.get<int>() < 0)
        throw ConfigError("lattice.jump_cap", "config: 'lattice.jump_cap' must be >= 0");
      cap = c.get<int>();
    }

    // Lattice-adapted refinements: partial coefficient blocks per node.
    if (co.contains("overrides") || co.contains("terminal_overrides")) {
      std::map<NodeKey, StepCoefficients> nodes;
      std::map<NodeKey, double> terms;
      if (co.contains("overrides")) {
        const json& ov = co["overrides"];
        for (std::size_t i = 0; i < ov.size(); ++i) {
          const std::string p = "coefficients.overrides[" + std::to_string(i) + "]";
          NodeKey key;
          key.step = require(ov[i], "step", p).get<int>();
          key.level = require(ov[i], "level", p).get<int>();
          key.jumps = ov[i].contains("jumps") ? int_list(ov[i]["jumps"], p + ".jumps")
                                               : std::vector<int>(J, 0);
          if (key.step < 0 || key.step >= n)
            throw ConfigError(p + ".step", "config: override step out of range");
          std::vector<StepCoefficients> one{coeffs.at(key.step)};
          fill_fields(ov[i], one, m1, m2, p);
          nodes[key] = one[0];
        }
      }
      if (co.contains("terminal_overrides")) {
        const json& ov = co["terminal_overrides"];
        for (std::size_t i = 0; i < ov.size(); ++i) {
          const std::string p = "coefficients.terminal_overrides[" + std::to_string(i) + "]";
          NodeKey key;
          key.step = n;
          key.level = require(ov[i], "level", p).get<int>();
          key.jumps = ov[i].contains("jumps") ? int_list(ov[i]["jumps"], p + ".jumps")
                                               : std::vector<int>(J, 0);
          terms[key] = number(require(ov[i], "G", p), p + ".G");
        }
      }
      try {
        coeffs = coeffs.with_overrides(std::move(nodes), std::move(terms));
      } catch (const Error& e) {
        throw ConfigError("coefficients.overrides", std::string("config: ") + e.what());
      }
    }

    Cone c1 = Cone::full(m1), c2 = Cone::full(m2);
    if (root.contains("cones")) {
      const json& cs = root["cones"];
      if (cs.contains("pi1")) c1 = parse_cone(cs["pi1"], m1, "cones.pi1");
      if (cs.contains("pi2")) c2 = parse_cone(cs["pi2"], m2, "cones.pi2");
    }
    const InitialLaw init = parse_initial(require(root, "initial", ""), "initial");

    const std::string canonical = root.dump();
    return Problem{grid,  JumpMeasure(nu), std::move(coeffs), std::move(c1), std::move(c2),
                   init,  cap,             canonical,         hex64(fnv1a(canonical))};
  } catch (const json::exception& e) {
    throw ConfigError("", std::string("config: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const ArgumentError& e) {
    throw ConfigError("", std::string("config: ") + e.what());
  } catch (const ValidationError& e) {
    throw ConfigError("", std::string("config: ") + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot write '" + path + "'");
  out << contents;
  if (!out) throw ArgumentError("write failed for '" + path + "'");
}

Problem load_problem(const std::string& path) { return parse_problem(read_file(path)); }

// ------------------------------------------------------------------ export

namespace {

json report_to_json(const AssumptionReport& r) {
  return json{{"c_bar", r.c_bar},
              {"delta_lower", r.delta_lower},
              {"delta_bar", r.delta_bar},
              {"K", r.K},
              {"c_lower1", r.c_lower1},
              {"flags",
               {{"r11_above_delta", r.r11_above_delta},
                {"r22_below_bound", r.r22_below_bound},
                {"q_nonnegative", r.q_nonnegative},
                {"g_above_delta", r.g_above_delta},
                {"diffusion1_nondegenerate", r.diffusion1_nondegenerate},
                {"diffusion2_nondegenerate", r.diffusion2_nondegenerate},
                {"f2_zero", r.f2_zero},
                {"s1_zero", r.s1_zero},
                {"s2_zero", r.s2_zero},
                {"r12_zero", r.r12_zero},
                {"d1d2_zero", r.d1d2_zero}}},
              {"standing_assumptions_hold", r.standing_assumptions_hold()},
              {"decoupled_structure", r.decoupled_structure()}};
}

json vec_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

// Non-finite doubles have no JSON literal; they are written as strings.
json num_json(double x) { return std::isfinite(x) ? json(x) : json(format_double(x)); }

void csv_row(std::ostringstream& os, const std::vector<double>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
  os << '\n';
}

}  // namespace

std::string solution_csv(const RiccatiSolution& sol) {
  const int n = sol.n_nodes();
  const int J = sol.G1.empty() ? 0 : static_cast<int>(sol.G1[0].size());
  const int m1 = sol.saddle1.empty() ? 0 : static_cast<int>(sol.saddle1[0].v1.size());
  const int m2 = sol.saddle1.empty() ? 0 : static_cast<int>(sol.saddle1[0].v2.size());
  std::ostringstream os;
  os << "t,P1,P2,L1,L2";
  for (int j = 0; j < J; ++j) os << ",G1_" << j;
  for (int j = 0; j < J; ++j) os << ",G2_" << j;
  for (int a = 0; a < m1; ++a) os << ",v1_plus_" << a;
  for (int b = 0; b < m2; ++b) os << ",v2_plus_" << b;
  for (int a = 0; a < m1; ++a) os << ",v1_minus_" << a;
  for (int b = 0; b < m2; ++b) os << ",v2_minus_" << b;
  os << ",H1,H2\n";
  for (int i = 0; i < n; ++i) {
    std::vector<double> row{sol.grid.time(i), sol.P1[i], sol.P2[i], sol.L1[i], sol.L2[i]};
    for (int j = 0; j < J; ++j) row.push_back(sol.G1[i][j]);
    for (int j = 0; j < J; ++j) row.push_back(sol.G2[i][j]);
    const SaddleResult& a = sol.saddle1[i];
    const SaddleResult& b = sol.saddle2[i];
    for (int k = 0; k < m1; ++k) row.push_back(a.v1[k]);
    for (int k = 0; k < m2; ++k) row.push_back(a.v2[k]);
    for (int k = 0; k < m1; ++k) row.push_back(b.v1[k]);
    for (int k = 0; k < m2; ++k) row.push_back(b.v2[k]);
    row.push_back(a.value);
    row.push_back(b.value);
    csv_row(os, row);
  }
  return os.str();
}

std::string solution_json(const RiccatiSolution& sol, const Provenance& prov) {
  json nodes = json::array();
  for (int i = 0; i < sol.n_nodes(); ++i) {
    const SaddleResult& a = sol.saddle1[i];
    const SaddleResult& b = sol.saddle2[i];
    nodes.push_back({{"t", sol.grid.time(i)},
                     {"P1", sol.P1[i]},
                     {"P2", sol.P2[i]},
                     {"L1", sol.L1[i]},
                     {"L2", sol.L2[i]},
                     {"G1", sol.G1[i]},
                     {"G2", sol.G2[i]},
                     {"H1", a.value},
                     {"H2", b.value},
                     {"v1_plus", vec_json(a.v1)},
                     {"v2_plus", vec_json(a.v2)},
                     {"v1_minus", vec_json(b.v1)},
                     {"v2_minus", vec_json(b.v2)},
                     {"saddle1", {{"method", to_string(a.method)},
                                  {"iterations", a.iterations},
                                  {"residual", a.residual}}},
                     {"saddle2", {{"method", to_string(b.method)},
                                  {"iterations", b.iterations},
                                  {"residual", b.residual}}}});
  }
  json doc{{"version", prov.version},
           {"config_hash", prov.config_hash},
           {"kind", "riccati"},
           {"method", sol.method},
           {"grid", {{"T", sol.grid.horizon()}, {"n_steps", sol.grid.n_steps()}}},
           {"guard", num_json(sol.guard)},
           {"saddle_solves", sol.saddle_solves},
           {"report", report_to_json(sol.report)},
           {"nodes", nodes}};
  if (sol.truncation)
    doc["truncation"] = {{"n", sol.truncation->n}, {"n_bar", sol.truncation->n_bar}};
  return doc.dump(2) + "\n";
}

std::string lattice_csv(const LatticeSolution& sol) {
  const Lattice& lat = *sol.lattice;
  const int J = lat.marks();
  std::ostringstream os;
  os << "step,level";
  for (int j = 0; j < J; ++j) os << ",jumps_" << j;
  os << ",P1,P2,L1,L2";
  for (int j = 0; j < J; ++j) os << ",G1_" << j;
  for (int j = 0; j < J; ++j) os << ",G2_" << j;
  os << '\n';
  for (int s = 0; s <= lat.n_steps(); ++s) {
    for (int idx = 0; idx < lat.layer_size(s); ++idx) {
      const NodeKey k = lat.key(s, idx);
      std::vector<double> row{static_cast<double>(s), static_cast<double>(k.level)};
      for (int c : k.jumps) row.push_back(c);
      row.insert(row.end(), {sol.P1[s][idx], sol.P2[s][idx], sol.L1[s][idx], sol.L2[s][idx]});
      for (int j = 0; j < J; ++j) row.push_back(sol.G1[s][idx * J + j]);
      for (int j = 0; j < J; ++j) row.push_back(sol.G2[s][idx * J + j]);
      csv_row(os, row);
    }
  }
  return os.str();
}

std::string lattice_json(const LatticeSolution& sol, const Provenance& prov) {
  const Lattice& lat = *sol.lattice;
  const int J = lat.marks();
  json nodes = json::object();
  for (int s = 0; s <= lat.n_steps(); ++s) {
    for (int idx = 0; idx < lat.layer_size(s); ++idx) {
      json node{{"P1", sol.P1[s][idx]},
                {"P2", sol.P2[s][idx]},
                {"L1", sol.L1[s][idx]},
                {"L2", sol.L2[s][idx]},
                {"G1", std::vector<double>(sol.G1[s].begin() + idx * J,
                                           sol.G1[s].begin() + (idx + 1) * J)},
                {"G2", std::vector<double>(sol.G2[s].begin() + idx * J,
                                           sol.G2[s].begin() + (idx + 1) * J)}};
      if (s < lat.n_steps()) {
        node["H1"] = sol.H1[s][idx];
        node["H2"] = sol.H2[s][idx];
        node["v1_plus"] = vec_json(sol.theta1_plus[s].col(idx));
        node["v2_plus"] = vec_json(sol.theta2_plus[s].col(idx));
        node["v1_minus"] = vec_json(sol.theta1_minus[s].col(idx));
        node["v2_minus"] = vec_json(sol.theta2_minus[s].col(idx));
      }
      nodes[lat.node_id(s, idx)] = std::move(node);
    }
  }
  json doc{{"version", prov.version},
           {"config_hash", prov.config_hash},
           {"kind", "lattice"},
           {"grid", {{"T", lat.grid().horizon()}, {"n_steps", lat.n_steps()}}},
           {"jump_cap", lat.jump_cap()},
           {"intensities", lat.jumps().intensities},
           {"saddle_solves", sol.saddle_solves},
           {"report", report_to_json(sol.report)},
           {"nodes", nodes}};
  return doc.dump(2) + "\n";
}

std::string report_json(const AssumptionReport& report, const Provenance& prov) {
  json doc = report_to_json(report);
  doc["version"] = prov.version;
  doc["config_hash"] = prov.config_hash;
  return doc.dump(2) + "\n";
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ls(s);
    while (std::getline(ls, cell, ',')) out.push_back(cell);
    return out;
  };
  if (!std::getline(in, line)) throw ArgumentError("csv: empty input");
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) throw ArgumentError("csv: ragged row");
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        row.push_back(std::stod(c));
      } catch (const std::exception&) {
        throw ArgumentError("csv: bad number '" + c + "'");
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace conelq
