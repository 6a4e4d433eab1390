#include "openqs/master_equations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <unsupported/Eigen/MatrixFunctions>

namespace openqs {

namespace {

double default_gap_tol(const RVec& e, double gap_tol) {
  if (gap_tol > 0.0) return gap_tol;
  const double range = e.size() ? e.maxCoeff() - e.minCoeff() : 0.0;
  return 1e-8 * std::max(1.0, range);
}

struct Eig {
  Mat w;
  RVec e;
};

Eig eig(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (h + h.adjoint())));
  if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigendecomposition failed");
  return Eig{es.eigenvectors(), es.eigenvalues()};
}

}  // namespace

FrequencyDecomposition frequency_decompose(const Mat& hs_prime, const Mat& v, double gap_tol) {
  require(is_square(hs_prime) && is_hermitian(hs_prime), "frequency_decompose: hs' must be Hermitian");
  require(v.rows() == hs_prime.rows() && is_square(v), "frequency_decompose: dimension mismatch");
  const Eig es = eig(hs_prime);
  const int d = static_cast<int>(hs_prime.rows());
  const double tol = default_gap_tol(es.e, gap_tol);
  const Mat vp = es.w.adjoint() * v * es.w;
  const double cut = 1e-14 * std::max(1.0, max_abs(vp));

  struct Entry {
    double omega;
    int a, b;
  };
  std::vector<Entry> entries;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      if (std::abs(vp(a, b)) > cut) entries.push_back({es.e(a) - es.e(b), a, b});
  std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) { return x.omega < y.omega; });

  FrequencyDecomposition fd;
  fd.eigvecs = es.w;
  fd.energies = es.e;
  std::vector<std::vector<Entry>> groups;
  for (const auto& en : entries) {
    if (groups.empty() || en.omega - groups.back().back().omega >= tol) groups.emplace_back();
    groups.back().push_back(en);
  }
  for (const auto& g : groups) {
    Mat x = Mat::Zero(d, d);
    double sum = 0.0;
    for (const auto& en : g) {
      x(en.a, en.b) = vp(en.a, en.b);
      sum += en.omega;
    }
    fd.omegas.push_back(sum / static_cast<double>(g.size()));
    fd.v_omega.push_back(es.w * x * es.w.adjoint());
  }
  return fd;
}

GammaResult gamma_rates(const std::function<cplx(double)>& corr, const std::vector<double>& omegas, double horizon,
                        double h, double cutoff) {
  require(h > 0.0, "gamma_rates: quadrature step must be > 0");
  const double c0 = std::abs(corr(0.0));
  require(c0 > 0.0, "gamma_rates: correlation vanishes at tau = 0");
  double t = horizon;
  if (t <= 0.0) {
    t = 1.0;
    while (std::abs(corr(t)) >= 1e-8 * c0) {
      t *= 2.0;
      if (t > 1e7) throw NumericalError("gamma_rates: correlation does not decay");
    }
  }
  const double ct = std::abs(corr(t));
  if (ct > cutoff * c0) throw NumericalError("gamma_rates: horizon too short, tail |C(T)| exceeds the cutoff");

  const long n = std::max(1L, static_cast<long>(std::ceil(t / h - 1e-9)));
  const double hh = t / static_cast<double>(n);
  std::vector<cplx> samples(static_cast<size_t>(n) + 1);
  for (long i = 0; i <= n; ++i) samples[static_cast<size_t>(i)] = corr(i * hh);

  GammaResult r;
  r.horizon = t;
  // exponential tail: |C(T)| / rate, rate from the last step
  const double prev = std::abs(samples[static_cast<size_t>(n) - (n > 0 ? 1 : 0)]);
  const double rate = (ct > 0.0 && prev > ct) ? std::log(prev / ct) / hh : 0.0;
  r.tail_bound = rate > 0.0 ? ct / rate : ct * t;
  for (double om : omegas) {
    cplx s = 0.0;
    for (long i = 0; i <= n; ++i) {
      const double w = (i == 0 || i == n) ? 0.5 : 1.0;
      s += w * samples[static_cast<size_t>(i)] * std::exp(-I * (om * i * hh));
    }
    r.gamma.push_back(s * hh);
  }
  return r;
}

double ThermalSpectrum::j(double omega) const {
  if (!detailed_balance) return j_direct(omega);
  const double x = beta * omega;
  const double sv = s(omega);
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 2.0 * sv * e / (1.0 + e);
  }
  return 2.0 * sv / (std::exp(x) + 1.0);
}

double ThermalSpectrum::lamb(double omega) const {
  // P int J(v)/(v - w) dv = int_0^inf [J(w + x) - J(w - x)] / x dx
  auto f = [this, omega](double x) {
    if (x == 0.0) return 0.0;
    return (j(omega + x) - j(omega - x)) / x;
  };
  double err = 0.0;
  const double val = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-10, &err);
  return val / (2.0 * std::numbers::pi);
}

ThermalSpectrum lorentzian_spectrum(double beta, double a, double width) {
  require(width > 0.0 && a >= 0.0, "lorentzian_spectrum: need width > 0 and a >= 0");
  ThermalSpectrum sp;
  sp.beta = beta;
  sp.s = [a, width](double w) { return a * width / (width * width + w * w); };
  return sp;
}

bool is_thermal(const Mat& he, const Mat& rho_e, double beta, double tol) {
  return max_abs(rho_e - gibbs_state(he, beta)) <= tol;
}

ThermalSpectrum spectrum_from_model(const SEModel& m, double beta, double width) {
  validate(m);
  require(width > 0.0, "spectrum_from_model: broadening width must be > 0");
  require(is_stationary(m), "spectrum_from_model: rho_e must be stationary");
  const BathSpectrum bs = bath_spectrum(m);
  std::vector<double> nu = bs.nu, wt;
  for (const auto& w : bs.weight) wt.push_back(w.real());
  const double norm = 1.0 / (width * std::sqrt(2.0 * std::numbers::pi));
  auto g = [width, norm](double x) { return norm * std::exp(-0.5 * x * x / (width * width)); };

  ThermalSpectrum sp;
  sp.beta = beta;
  sp.s = [nu, wt, g](double w) {
    double s = 0.0;
    for (size_t k = 0; k < nu.size(); ++k) s += wt[k] * (g(w - nu[k]) + g(w + nu[k]));
    return std::numbers::pi * s;
  };
  sp.detailed_balance = is_thermal(m.he, m.rho_e, beta);
  sp.j_direct = [nu, wt, g](double w) {
    double s = 0.0;
    for (size_t k = 0; k < nu.size(); ++k) s += wt[k] * g(w - nu[k]);
    return 2.0 * std::numbers::pi * s;
  };
  return sp;
}

std::string to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::redfield: return "redfield";
    case GeneratorKind::davies: return "davies";
    case GeneratorKind::pauli: return "pauli";
  }
  return "?";
}

GeneratorBundle davies_generator(const Mat& hs_prime, const Mat& v, double lambda, const ThermalSpectrum& sp,
                                 double gap_tol) {
  const int d = static_cast<int>(hs_prime.rows());
  const BasisPtr kb = ketbra_basis(d);
  GeneratorBundle b;
  b.kind = GeneratorKind::davies;
  b.beta = sp.beta;
  b.lambda = lambda;
  b.hs_prime = hs_prime;
  b.v = v;
  b.spectrum = sp;
  b.freq = frequency_decompose(hs_prime, v, gap_tol);
  const double l2 = lambda * lambda;

  Mat hls = hs_prime;
  Mat diss = Mat::Zero(kb->size(), kb->size());
  for (size_t i = 0; i < b.freq.omegas.size(); ++i) {
    const cplx g = sp.gamma(b.freq.omegas[i]);
    b.gamma.push_back(g);
    const Mat& vw = b.freq.v_omega[i];
    const Mat vv = vw.adjoint() * vw;
    hls += l2 * g.imag() * vv;
    diss += (2.0 * g.real()) * (left_right_super(vw, vw.adjoint(), kb).matrix() -
                                0.5 * anticommutator_super(vv, kb).matrix());
  }
  b.hamiltonian = 0.5 * (hls + hls.adjoint());
  b.dissipator = SuperOperator(kb, l2 * diss);
  b.generator = SuperOperator(kb, -I * commutator_super(b.hamiltonian, kb).matrix() + l2 * diss);
  return b;
}

GeneratorBundle redfield_generator(const Mat& hs_prime, const Mat& v, double lambda, const ThermalSpectrum& sp,
                                   double gap_tol) {
  const int d = static_cast<int>(hs_prime.rows());
  const BasisPtr kb = ketbra_basis(d);
  GeneratorBundle b;
  b.kind = GeneratorKind::redfield;
  b.beta = sp.beta;
  b.lambda = lambda;
  b.hs_prime = hs_prime;
  b.v = v;
  b.spectrum = sp;
  b.freq = frequency_decompose(hs_prime, v, gap_tol);
  Mat lam = Mat::Zero(d, d);
  for (size_t i = 0; i < b.freq.omegas.size(); ++i) {
    const cplx g = sp.gamma(b.freq.omegas[i]);
    b.gamma.push_back(g);
    lam += g * b.freq.v_omega[i];
  }
  const Mat one = Mat::Identity(d, d);
  const Mat ld = left_right_super(v * lam, one, kb).matrix() - left_right_super(v, lam.adjoint(), kb).matrix() -
                 left_right_super(lam, v, kb).matrix() + left_right_super(one, lam.adjoint() * v, kb).matrix();
  const double l2 = lambda * lambda;
  b.hamiltonian = hs_prime;
  b.dissipator = SuperOperator(kb, -l2 * ld);
  b.generator = SuperOperator(kb, -I * commutator_super(hs_prime, kb).matrix() - l2 * ld);
  return b;
}

namespace {

void check_model_for_me(const SEModel& m) {
  validate(m);
  require(m.couplings.size() == 1, "master equations: only single-coupling models are supported");
  require(is_stationary(m), "master equations: rho_e must be stationary");
}

}  // namespace

GeneratorBundle davies_from_model(const SEModel& m, const DaviesModelOptions& opt) {
  check_model_for_me(m);
  const CentralPicture cp = central_picture(m);
  return davies_generator(cp.hs_prime(0.0), m.v(), m.lambda, spectrum_from_model(m, opt.beta, opt.width),
                          opt.gap_tol);
}

GeneratorBundle redfield_from_model(const SEModel& m, const DaviesModelOptions& opt) {
  check_model_for_me(m);
  const CentralPicture cp = central_picture(m);
  return redfield_generator(cp.hs_prime(0.0), m.v(), m.lambda, spectrum_from_model(m, opt.beta, opt.width),
                            opt.gap_tol);
}

PauliSystem pauli_system(const GeneratorBundle& b, double gap_tol) {
  const Eig es = eig(b.hs_prime);
  const int d = static_cast<int>(es.e.size());
  const double tol = default_gap_tol(es.e, gap_tol);
  for (int a = 1; a < d; ++a)
    require(es.e(a) - es.e(a - 1) >= tol, "pauli_system: hs' has a degenerate spectrum");
  const Mat vp = es.w.adjoint() * b.v * es.w;

  PauliSystem ps;
  ps.energies = es.e;
  ps.eigvecs = es.w;
  ps.gamma = RMat::Zero(d, d);
  for (int a = 0; a < d; ++a)
    for (int c = 0; c < d; ++c)
      if (a != c) ps.gamma(a, c) = std::norm(vp(a, c)) * b.spectrum.j(es.e(a) - es.e(c));
  ps.m = ps.gamma;
  for (int a = 0; a < d; ++a) ps.m(a, a) -= ps.gamma.col(a).sum();
  RVec w(d);
  for (int a = 0; a < d; ++a) w(a) = -b.beta * (es.e(a) - es.e(0));
  ps.p_gibbs = w.array().exp();
  ps.p_gibbs /= ps.p_gibbs.sum();
  return ps;
}

namespace {

// D^{-1/2} M D^{1/2}; symmetric under detailed balance
RMat symmetrized(const PauliSystem& ps) {
  const RVec sq = ps.p_gibbs.array().sqrt();
  RMat s = sq.cwiseInverse().asDiagonal() * ps.m * sq.asDiagonal();
  return s;
}

}  // namespace

std::vector<RVec> pauli_evolve(const PauliSystem& ps, double lambda, const RVec& q0, const std::vector<double>& times) {
  require(q0.size() == ps.m.rows(), "pauli_evolve: dimension mismatch");
  const RMat s = symmetrized(ps);
  const double asym = (s - s.transpose()).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  std::vector<RVec> out;
  out.reserve(times.size());
  const double l2 = lambda * lambda;
  if (asym <= 1e-10 * scale) {
    Eigen::SelfAdjointEigenSolver<RMat> es(RMat(0.5 * (s + s.transpose())));
    const RVec sq = ps.p_gibbs.array().sqrt();
    const RVec y = es.eigenvectors().transpose() * (sq.cwiseInverse().asDiagonal() * q0);
    for (double t : times) {
      const RVec ex = (l2 * t * es.eigenvalues()).array().exp();
      out.push_back(sq.asDiagonal() * (es.eigenvectors() * ex.cwiseProduct(y)));
    }
  } else {
    for (double t : times) out.push_back(RMat((l2 * t) * ps.m).exp() * q0);
  }
  return out;
}

double h_functional(const RVec& p, const RVec& p_gibbs, double tol) {
  require(p.size() == p_gibbs.size(), "h_functional: dimension mismatch");
  double h = 0.0;
  for (Eigen::Index a = 0; a < p.size(); ++a) {
    require(p(a) >= -tol, "h_functional: negative probability");
    require(p_gibbs(a) > 0.0, "h_functional: reference distribution must be positive");
    if (p(a) > 0.0) h += p(a) * std::log(p(a) / p_gibbs(a));
  }
  return h;
}

cplx weighted_inner(const Mat& a, const Mat& b, const RVec& energies, double beta) {
  cplx s = 0.0;
  const double e0 = energies.minCoeff();
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) s += std::exp(beta * (energies(i) - e0)) * std::conj(a(i, j)) * b(i, j);
  return s;
}

ThermalizationReport thermalization_analysis(const GeneratorBundle& b, double gap_tol) {
  ThermalizationReport r;
  const Eig es = eig(b.hs_prime);
  const int d = static_cast<int>(es.e.size());
  const double tol = default_gap_tol(es.e, gap_tol);
  for (int a = 1; a < d; ++a)
    if (es.e(a) - es.e(a - 1) < tol) r.nondegenerate = false;
  const Mat vp = es.w.adjoint() * b.v * es.w;
  const double vcut = 1e-12 * std::max(1.0, max_abs(vp));
  for (int a = 0; a < d; ++a)
    for (int c = a + 1; c < d; ++c)
      if (std::abs(vp(a, c)) <= vcut) r.zero_couplings.emplace_back(a, c);
  r.ergodic = r.zero_couplings.empty();
  if (!r.ergodic) r.warnings.push_back("some V_ab vanish: coherence modes with Re mu = 0 are possible");
  if (!r.nondegenerate) r.warnings.push_back("hs' is degenerate: population block analysis skipped");
  if (b.kind == GeneratorKind::davies && !b.spectrum.detailed_balance)
    r.warnings.push_back("environment is not thermal at the given beta: detailed balance not expected");

  if (r.nondegenerate) {
    const PauliSystem ps = pauli_system(b, gap_tol);
    r.fixed_point_error = (ps.m * ps.p_gibbs).cwiseAbs().maxCoeff();
    const RMat s = symmetrized(ps);
    Eigen::SelfAdjointEigenSolver<RMat> se(RMat(0.5 * (s + s.transpose())));
    const RVec ev = se.eigenvalues();  // ascending
    r.population_spectrum = ev.reverse();
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    double gap = std::numeric_limits<double>::infinity();
    int zero_idx = -1;
    for (int i = 0; i < d; ++i) {
      if (std::abs(ev(i)) <= 1e-10 * scale) {
        ++r.zero_eigenvalues;
        zero_idx = i;
      } else {
        gap = std::min(gap, std::abs(ev(i)));
      }
    }
    r.spectral_gap = std::isfinite(gap) ? gap : 0.0;
    if (zero_idx >= 0) {
      RVec q = ps.p_gibbs.array().sqrt() * se.eigenvectors().col(zero_idx).array();
      q /= q.sum();
      r.gibbs_overlap_defect = (q - ps.p_gibbs).cwiseAbs().maxCoeff();
    }
    // <<A|M B>> against <<M A|B>> on random diagonal operators
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      RVec x(d), y(d);
      for (int i = 0; i < d; ++i) {
        x(i) = nd(rng);
        y(i) = nd(rng);
      }
      const Mat ax = x.cast<cplx>().asDiagonal(), ay = y.cast<cplx>().asDiagonal();
      const Mat mx = RVec(ps.m * x).cast<cplx>().asDiagonal(), my = RVec(ps.m * y).cast<cplx>().asDiagonal();
      const cplx l = weighted_inner(ax, my, es.e, b.beta), rr = weighted_inner(mx, ay, es.e, b.beta);
      worst = std::max(worst, std::abs(l - rr) / std::max(1.0, std::abs(l)));
    }
    r.weighted_selfadjoint_defect = worst;
  }

  // generator in the hs' eigenbasis
  const BasisPtr kb = ketbra_basis(d);
  const Mat t = left_right_super(es.w, es.w.adjoint(), kb).matrix();
  const Mat tinv = left_right_super(es.w.adjoint(), es.w, kb).matrix();
  const Mat le = tinv * b.generator.matrix() * t;
  std::vector<int> coh;
  for (int k = 0; k < kb->size(); ++k) {
    const auto [n, mm] = kb->entry(k);
    if (n != mm) coh.push_back(k);
  }
  if (!coh.empty()) {
    const int nc = static_cast<int>(coh.size());
    Mat c(nc, nc);
    for (int i = 0; i < nc; ++i)
      for (int j = 0; j < nc; ++j) c(i, j) = le(coh[i], coh[j]);
    Eigen::ComplexEigenSolver<Mat> ce(c);
    r.max_re_coherence = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < nc; ++i) {
      r.coherence_spectrum.push_back(ce.eigenvalues()(i));
      r.max_re_coherence = std::max(r.max_re_coherence, ce.eigenvalues()(i).real());
    }
    Eigen::FullPivLU<Mat> lu(ce.eigenvectors());
    r.defective = lu.rcond() < 1e-8;
    if (r.defective) r.warnings.push_back("coherence block is numerically defective");
    double cross = 0.0;
    for (int k = 0; k < kb->size(); ++k)
      for (int i : coh) {
        const auto [n, mm] = kb->entry(k);
        if (n == mm) cross = std::max({cross, std::abs(le(k, i)), std::abs(le(i, k))});
      }
    if (cross > 1e-10 * std::max(1.0, max_abs(le)))
      r.warnings.push_back("generator couples populations and coherences");
  }
  const Mat rho = gibbs_state(b.hs_prime, b.beta);
  r.generator_fixed_point_error = max_abs(b.generator.apply(rho));
  return r;
}

FdtReport fdt_check(const SEModel& m, double beta, double omega_min) {
  validate(m);
  require(is_thermal(m.he, m.rho_e, beta), "fdt_check: rho_e is not thermal at the given beta");
  const BathSpectrum bs = bath_spectrum(m);
  std::vector<double> lines;
  for (size_t k = 0; k < bs.nu.size(); ++k)
    if (std::abs(bs.weight[k]) > 1e-14) lines.push_back(bs.nu[k]);
  require(!lines.empty(), "fdt_check: coupling has no spectral weight");

  // all distinct frequencies entering S and kappa, +-nu and 0
  std::vector<double> all = lines;
  for (double x : lines) all.push_back(-x);
  all.push_back(0.0);
  std::sort(all.begin(), all.end());
  double sep = std::numeric_limits<double>::infinity();
  for (size_t i = 1; i < all.size(); ++i)
    if (all[i] - all[i - 1] > 1e-9) sep = std::min(sep, all[i] - all[i - 1]);
  const double wmax = std::max(std::abs(all.front()), std::abs(all.back()));
  require(std::isfinite(sep), "fdt_check: degenerate bath spectrum");

  FdtReport r;
  r.eta = sep / 8.0;
  r.horizon = 8.5 / r.eta;
  const double h = std::min(std::numbers::pi / (4.0 * std::max(wmax, 1e-3)), 0.25 / r.eta);
  const long n = static_cast<long>(std::ceil(r.horizon / h));
  const double hh = r.horizon / static_cast<double>(n);
  std::vector<double> taus(static_cast<size_t>(n) + 1);
  for (long i = 0; i <= n; ++i) taus[static_cast<size_t>(i)] = i * hh;
  const CorrSusc ck = correlation_and_susceptibility(m, taus);

  for (double om : lines) {
    if (std::abs(om) < omega_min) continue;
    if (!r.omegas.empty() && std::abs(om - r.omegas.back()) < 1e-9) continue;
    // C even, K odd in tau
    double sc = 0.0, sk = 0.0;
    for (long i = 0; i <= n; ++i) {
      const double tau = taus[static_cast<size_t>(i)];
      const double w = ((i == 0 || i == n) ? 0.5 : 1.0) * std::exp(-0.5 * r.eta * r.eta * tau * tau);
      sc += w * ck.c[static_cast<size_t>(i)] * std::cos(om * tau);
      sk += w * ck.k[static_cast<size_t>(i)] * std::sin(om * tau);
    }
    const cplx s = 2.0 * hh * sc;
    const cplx kappa = -2.0 * I * hh * sk;
    const double e = std::exp(-beta * om);
    const cplx lhs = s * (1.0 - e);
    const cplx rhs = I * (1.0 + e) * kappa;
    const double dev = std::abs(lhs - rhs) / std::max(std::abs(lhs), std::abs(rhs));
    r.max_rel_deviation = std::max(r.max_rel_deviation, dev);
    r.omegas.push_back(om);
    r.s.push_back(s);
    r.kappa.push_back(kappa);
  }
  return r;
}

}  // namespace openqs
