#pragma once

#include <functional>
#include <vector>

#include "openqs/linalg.hpp"
#include "openqs/propagators.hpp"

namespace openqs {

struct Coupling {
  Mat v;  // system side
  Mat f;  // environment side
};

// H_SE = hs (x) 1 + 1 (x) he + lambda sum_a v_a (x) f_a, S factor first.
struct SEModel {
  Mat hs;
  Mat he;
  std::vector<Coupling> couplings;
  double lambda = 0.0;
  Mat rho_e;

  static SEModel single(Mat hs, Mat he, Mat v, Mat f, double lambda, Mat rho_e);

  int dim_s() const { return static_cast<int>(hs.rows()); }
  int dim_e() const { return static_cast<int>(he.rows()); }
  const Mat& v() const { return couplings.at(0).v; }
  const Mat& f() const { return couplings.at(0).f; }
  Mat total_hamiltonian() const;
};

inline constexpr int kDefaultDimCap = 64;

void validate(const SEModel& m, int dim_cap = kDefaultDimCap);

SuperOperator exact_dynamical_map(const SEModel& m, double t, int dim_cap = kDefaultDimCap);
// One eigendecomposition shared by all times.
std::vector<SuperOperator> exact_map_series(const SEModel& m, const std::vector<double>& times,
                                            int dim_cap = kDefaultDimCap);

using KrausSet = std::vector<Mat>;

// K_{jj'} = sqrt(p_j) <j'| e^{-itH_SE} |j>, with rho_e = sum_j p_j |j><j|; terms with p_j below eps_cut dropped.
KrausSet kraus_from_model(const SEModel& m, double t, int dim_cap = kDefaultDimCap);
double kraus_completeness_defect(const KrausSet& k);
SuperOperator kraus_map(const KrausSet& k);

// ---------------------------------------------------------------- spectral data of F

struct SpectralDecomp {
  std::vector<double> values;   // ascending, distinct within tolerance
  std::vector<Mat> projectors;
  int size() const { return static_cast<int>(values.size()); }
};

// Eigenvalues closer than rel_tol * max(1, spectral range) share one projector.
SpectralDecomp spectral_decompose(const Mat& f, double rel_tol = 1e-8);

// Q^(k)(f1, fb1, s1; ...; fk, fbk, sk) stored flat with (f1, fb1) most significant.
struct QuasiProbTensor {
  int order = 0;
  std::vector<double> times;   // strictly descending
  std::vector<double> values;  // Omega(F)
  std::vector<cplx> data;

  int n() const { return static_cast<int>(values.size()); }
  // idx = {f1, fb1, ..., fk, fbk} as indices into values
  size_t flat(const std::vector<int>& idx) const;
  cplx at(const std::vector<int>& idx) const { return data[flat(idx)]; }
  cplx total() const;
};

struct QuasiProbOptions {
  int k_cap = 3;
  int dim_e_cap = 16;
  double group_tol = 1e-8;
};

// Environment-only form: tr[P_I(f1,s1) ... P_I(fk,sk) rho P_I(fbk,sk) ... P_I(fb1,s1)],
// P_I(f,s) = e^{is he} P(f) e^{-is he}.
QuasiProbTensor quasi_probability(const Mat& he, const Mat& f, const Mat& rho_e, const std::vector<double>& times,
                                  const QuasiProbOptions& opt = {});
// Marginal for coupling index alpha of the model.
QuasiProbTensor quasi_probability(const SEModel& m, const std::vector<double>& times,
                                  const QuasiProbOptions& opt = {}, int alpha = 0);

// Sum over the pair (f_i, fb_i) of slot `slot` (0-based); the result has order k-1.
QuasiProbTensor contract_pair(const QuasiProbTensor& q, int slot);
// max |sum_{f_i,fb_i} Q^(k) - Q^(k-1)| over all slots, with Q^(k-1) recomputed directly
double consistency_defect(const Mat& he, const Mat& f, const Mat& rho_e, const QuasiProbTensor& q,
                          const QuasiProbOptions& opt = {});

struct QuasiMoments2 {
  cplx ff;    // <F(t)F(s)>
  cplx fbfb;  // <Fb(t)Fb(s)>
  cplx ffb;   // <F(t)Fb(s)>
  cplx fbf;   // <Fb(t)F(s)>
};

QuasiMoments2 quasi_moments_second(const SEModel& m, double t, double s, int alpha = 0);
// Same four values from a k = 2 tensor.
QuasiMoments2 quasi_moments_from_tensor(const QuasiProbTensor& q);

// <F_a(t)>, Heisenberg picture w.r.t. he
double env_mean(const SEModel& m, double t, int alpha = 0);

// C_F(s,u) - i K_F(s,u) = <<F_a(s) F_b(u)>>
cplx second_qumulant(const SEModel& m, double s, double u, int alpha = 0, int beta = 0);

struct CorrSusc {
  std::vector<double> c;
  std::vector<double> k;
};
// C_F(tau, 0) and K_F(tau, 0) on the given grid
CorrSusc correlation_and_susceptibility(const SEModel& m, const std::vector<double>& taus, int alpha = 0);

// Stationary environments: <<F_a(tau) F_b>> = sum_k weight_k e^{i nu_k tau}.
struct BathSpectrum {
  std::vector<double> nu;
  std::vector<cplx> weight;
  cplx operator()(double tau) const;
};
bool is_stationary(const SEModel& m, double tol = 1e-10);
BathSpectrum bath_spectrum(const SEModel& m, int alpha = 0, int beta = 0, double merge_tol = 1e-10);

struct CentralPicture {
  bool stationary = false;
  std::function<Mat(double)> hs_prime;  // hs + lambda sum_a <F_a(t)> v_a
  std::function<Mat(double)> x_op;      // f_0 - <F_0(t)> 1
  std::function<double(double)> mean;   // <F_0(t)>
};
CentralPicture central_picture(const SEModel& m);

struct SuperQumulantOptions {
  int order = 2;  // 1 or 2
  double h = 1e-2;  // table spacing for non-stationary environments
};

// s -> -lambda^2 L_c^(2)(s) in the central picture (zero for order 1).
// Stationary environments use closed-form inner integrals; otherwise trapezoid
// quadrature on a grid up to t_max.
GeneratorFn superqumulant_generator(const SEModel& m, const SuperQumulantOptions& opt, double t_max);

// Lab-frame second-order map U_S'(t) <U>^(2)(t).
std::vector<SuperOperator> second_order_map_series(const SEModel& m, const std::vector<double>& times,
                                                   const IntegratorCfg& cfg, int order = 2);
SuperOperator second_order_map(const SEModel& m, double t, const IntegratorCfg& cfg, int order = 2);

}  // namespace openqs
