#pragma once

#include <functional>
#include <string>
#include <vector>

#include "openqs/linalg.hpp"
#include "openqs/open_quantum.hpp"

namespace openqs {

struct FrequencyDecomposition {
  std::vector<double> omegas;  // ascending Bohr frequencies e_a - e_b
  std::vector<Mat> v_omega;    // original basis; sum = v
  Mat eigvecs;                 // columns: eigenvectors of hs_prime, ascending energies
  RVec energies;
};

// gap_tol <= 0 selects 1e-8 * max(1, spectral range)
FrequencyDecomposition frequency_decompose(const Mat& hs_prime, const Mat& v, double gap_tol = -1.0);

struct GammaResult {
  std::vector<cplx> gamma;
  double horizon = 0.0;
  double tail_bound = 0.0;
};

// gamma_w = int_0^inf corr(tau) e^{-i w tau} dtau by trapezoid on [0, T].
// horizon <= 0: smallest T (doubling from 1) with |corr(T)| < 1e-8 |corr(0)|.
// Throws if |corr(T)| > cutoff * |corr(0)|.
GammaResult gamma_rates(const std::function<cplx(double)>& corr, const std::vector<double>& omegas, double horizon,
                        double h, double cutoff = 1e-6);

// Thermal rates from an even spectral density: 2 Re gamma_w = J(w) = 2 S(w) / (e^{beta w} + 1),
// Im gamma_w = (1/2pi) P int J(v) / (v - w) dv.
struct ThermalSpectrum {
  double beta = 1.0;
  std::function<double(double)> s;
  bool detailed_balance = true;  // false: j() is the bare broadened transform, not the FDT form
  std::function<double(double)> j_direct;

  double j(double omega) const;
  double lamb(double omega) const;
  cplx gamma(double omega) const { return cplx(0.5 * j(omega), lamb(omega)); }
};

// S(w) = a * width / (width^2 + w^2)
ThermalSpectrum lorentzian_spectrum(double beta, double a, double width);

// Finite bath: spectral lines of C_F broadened by normalized Gaussians of the given width.
// For thermal rho_e the FDT form is used; otherwise J is the broadened transform of <<F(tau)F>>.
ThermalSpectrum spectrum_from_model(const SEModel& m, double beta, double width);

bool is_thermal(const Mat& he, const Mat& rho_e, double beta, double tol = 1e-10);

enum class GeneratorKind { redfield, davies, pauli };
std::string to_string(GeneratorKind k);

struct GeneratorBundle {
  GeneratorKind kind = GeneratorKind::davies;
  double beta = 1.0;
  double lambda = 0.0;
  Mat hs_prime;
  Mat v;
  Mat hamiltonian;              // hs_prime plus Lamb-shift part
  SuperOperator dissipator;     // lambda^2 times the dissipative part
  SuperOperator generator;      // d rho / dt = generator rho, lab frame
  FrequencyDecomposition freq;
  std::vector<cplx> gamma;      // per omega
  ThermalSpectrum spectrum;
};

// -i[hs' + lambda^2 sum Im g V_w^dag V_w, .] + lambda^2 sum 2 Re g (V_w . V_w^dag - 1/2 {V_w^dag V_w, .})
GeneratorBundle davies_generator(const Mat& hs_prime, const Mat& v, double lambda, const ThermalSpectrum& sp,
                                 double gap_tol = -1.0);
// -i[hs', .] - lambda^2 [v, Lambda . - . Lambda^dag], Lambda = sum gamma_w V_w
GeneratorBundle redfield_generator(const Mat& hs_prime, const Mat& v, double lambda, const ThermalSpectrum& sp,
                                   double gap_tol = -1.0);

struct DaviesModelOptions {
  double beta = 1.0;
  double width = 0.05;   // line broadening of the finite bath
  double gap_tol = -1.0;
};
GeneratorBundle davies_from_model(const SEModel& m, const DaviesModelOptions& opt);
GeneratorBundle redfield_from_model(const SEModel& m, const DaviesModelOptions& opt);

struct PauliSystem {
  RMat m;      // M_ab = g_ab - delta_ab sum_c g_ca
  RMat gamma;  // g_ab = |V_ab|^2 J(w_ab), rate b -> a
  RVec p_gibbs;
  RVec energies;
  Mat eigvecs;
};

PauliSystem pauli_system(const GeneratorBundle& b, double gap_tol = -1.0);
// e^{lambda^2 t M} q at each time, via the Gibbs-symmetrized eigendecomposition
std::vector<RVec> pauli_evolve(const PauliSystem& ps, double lambda, const RVec& q0, const std::vector<double>& times);

double h_functional(const RVec& p, const RVec& p_gibbs, double tol = 1e-12);

// <<A|B>> = sum e^{beta e_a} conj(A_ab) B_ab in the hs' eigenbasis
cplx weighted_inner(const Mat& a, const Mat& b, const RVec& energies, double beta);

struct ThermalizationReport {
  bool nondegenerate = true;
  bool ergodic = true;                          // all V_ab != 0, a != b
  std::vector<std::pair<int, int>> zero_couplings;
  RVec population_spectrum;                     // descending
  int zero_eigenvalues = 0;
  double gibbs_overlap_defect = 0.0;            // zero mode vs Gibbs
  double spectral_gap = 0.0;                    // |mu_1| of the population block
  std::vector<cplx> coherence_spectrum;
  double max_re_coherence = 0.0;
  bool defective = false;
  double fixed_point_error = 0.0;               // |M p_gibbs|
  double generator_fixed_point_error = 0.0;     // |L rho_gibbs|
  double weighted_selfadjoint_defect = 0.0;
  std::vector<std::string> warnings;
};

ThermalizationReport thermalization_analysis(const GeneratorBundle& b, double gap_tol = -1.0);

struct FdtReport {
  double max_rel_deviation = 0.0;
  double eta = 0.0;
  double horizon = 0.0;
  std::vector<double> omegas;
  std::vector<cplx> s;
  std::vector<cplx> kappa;
};

// Gaussian-windowed trapezoid transforms of C_F and K_F evaluated at the Bohr frequencies of the bath,
// compared with S(w)(1 - e^{-beta w}) = i (1 + e^{-beta w}) kappa(w). |w| < omega_min excluded.
FdtReport fdt_check(const SEModel& m, double beta, double omega_min = 1e-6);

}  // namespace openqs
