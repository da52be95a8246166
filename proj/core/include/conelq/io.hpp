#pragma once

#include "conelq/cone.hpp"
#include "conelq/lattice.hpp"
#include "conelq/model.hpp"
#include "conelq/riccati.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace conelq {

/// A problem file after parsing. `canonical` is the input re-serialized with
/// sorted keys; `hash` is its FNV-1a digest, used for provenance.
struct Problem {
  TimeGrid grid;
  JumpMeasure jumps;
  CoefficientSet coeffs;
  Cone cone1;
  Cone cone2;
  InitialLaw init;
  int jump_cap = kDefaultJumpCap;
  std::string canonical;
  std::string hash;
};

/// Throws ConfigError naming the offending key (dotted path).
Problem parse_problem(const std::string& text);
Problem load_problem(const std::string& path);

std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// 17 significant digits; "inf", "-inf", "nan" for non-finite values.
std::string format_double(double x);

struct Provenance {
  std::string config_hash;
  std::string version = CONELQ_VERSION;
};

std::string solution_csv(const RiccatiSolution& sol);
std::string solution_json(const RiccatiSolution& sol, const Provenance& prov);
std::string lattice_csv(const LatticeSolution& sol);
std::string lattice_json(const LatticeSolution& sol, const Provenance& prov);
std::string report_json(const AssumptionReport& report, const Provenance& prov);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;  // -1 if absent
};

/// Numeric CSV with one header line (as written by the exporters).
CsvTable parse_csv(const std::string& text);

void write_file(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace conelq
