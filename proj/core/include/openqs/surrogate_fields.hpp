#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "openqs/linalg.hpp"
#include "openqs/open_quantum.hpp"

namespace openqs {

// Diagonal slice P(f1..fk) = Q(f1,f1,...,fk,fk) and the interference remainder.
struct DiagonalSplit {
  int order = 0;
  std::vector<double> values;  // eigenvalues of F
  std::vector<double> p;       // flat, f1 most significant
  QuasiProbTensor phi;         // Q with the diagonal zeroed
  double diag_imag = 0.0;      // max |Im P|
  double diag_min = 0.0;
  double normalization_defect = 0.0;  // |sum P - 1|
  double interference_norm = 0.0;     // max |Phi|
};

DiagonalSplit split_diagonal(const QuasiProbTensor& q);

struct SurrogateOrder {
  int k = 0;
  double interference_norm = 0.0;
  double consistency_defect = 0.0;   // max |sum_{f_i} P^(k) - P^(k-1)|
  double contraction_mismatch = 0.0; // P-defect against the contracted interference term
  double diag_min = 0.0;
  double diag_imag = 0.0;
  double normalization_defect = 0.0;
  bool valid = false;
};

struct SurrogateReport {
  int k_max = 0;
  double eps = 1e-8;
  std::vector<SurrogateOrder> orders;
  bool valid = false;
};

// Every grid is strictly descending with at least k_max points; order k uses its first k times.
SurrogateReport surrogate_verdict(const SEModel& m, const std::vector<std::vector<double>>& grids, int k_max,
                                  double eps = 1e-8, const QuasiProbOptions& opt = {}, int alpha = 0);

nlohmann::json to_json(const SurrogateReport& r);

// Open two-level (or larger) environment A with its own GKLS generator.
struct GklsEnvironment {
  Mat f;
  SuperOperator l;
  Mat rho;
};

// Hermiticity preserving, trace annihilating and conditionally completely positive.
double gkls_defect(const SuperOperator& l);

struct GklsQuasiProb {
  QuasiProbTensor q;
  double block_defect = 0.0;  // max |P(f,f) L P(f',fb')| over f' != fb'
  bool block_diagonal = false;
};

// tr_A(P(f1,fb1) e^{(s1-s2)L} P(f2,fb2) ... P(fk,fbk) e^{sk L} rho), times strictly descending, sk >= 0.
GklsQuasiProb gkls_env_quasiprob(const GklsEnvironment& env, const std::vector<double>& times,
                                 const QuasiProbOptions& opt = {});

struct MeasurementRecord {
  std::vector<double> times;  // ascending
  std::vector<int> outcome;   // index into values
  std::vector<double> values;
  double probability = 1.0;   // exact chain product
};

inline constexpr double kPruneProbability = 1e-14;

// Projective measurements of F on the environment alone, evolving under he between times.
MeasurementRecord sequential_measurement_sample(const SEModel& m, const std::vector<double>& times,
                                                std::uint64_t seed, int alpha = 0);
MeasurementRecord sequential_measurement_sample(const GklsEnvironment& env, const std::vector<double>& times,
                                                std::uint64_t seed);
// Sample i uses derive_seed(seed, i).
std::vector<MeasurementRecord> sequential_measurement_batch(const SEModel& m, const std::vector<double>& times,
                                                            std::uint64_t seed, int n, int threads = 1, int alpha = 0);

}  // namespace openqs
