#include "openqs/open_quantum.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "detail/grid_table.hpp"

namespace openqs {

SEModel SEModel::single(Mat hs, Mat he, Mat v, Mat f, double lambda, Mat rho_e) {
  SEModel m;
  m.hs = std::move(hs);
  m.he = std::move(he);
  m.couplings.push_back(Coupling{std::move(v), std::move(f)});
  m.lambda = lambda;
  m.rho_e = std::move(rho_e);
  return m;
}

Mat SEModel::total_hamiltonian() const {
  const int ds = dim_s(), de = dim_e();
  Mat h = kron(hs, identity(de)) + kron(identity(ds), he);
  for (const auto& c : couplings) h += lambda * kron(c.v, c.f);
  return h;
}

void validate(const SEModel& m, int dim_cap) {
  require(is_square(m.hs) && m.hs.rows() > 0, "model: hs must be square");
  require(is_square(m.he) && m.he.rows() > 0, "model: he must be square");
  require(is_hermitian(m.hs), "model: hs must be Hermitian");
  require(is_hermitian(m.he), "model: he must be Hermitian");
  require(!m.couplings.empty(), "model: at least one coupling is required");
  for (const auto& c : m.couplings) {
    require(c.v.rows() == m.hs.rows() && is_square(c.v), "model: v must have the dimension of hs");
    require(c.f.rows() == m.he.rows() && is_square(c.f), "model: f must have the dimension of he");
    require(is_hermitian(c.v), "model: v must be Hermitian");
    require(is_hermitian(c.f), "model: f must be Hermitian");
  }
  require(std::isfinite(m.lambda), "model: lambda must be finite");
  require(m.rho_e.rows() == m.he.rows() && is_density(m.rho_e), "model: rho_e must be a density matrix on E");
  require(m.dim_s() * m.dim_e() <= dim_cap, "model: total dimension exceeds the configured cap");
}

// ---------------------------------------------------------------- exact maps

namespace {

SuperOperator reduced_map(const Mat& u, const Mat& rho_e, int ds, int de) {
  const BasisPtr b = ketbra_basis(ds);
  std::vector<Mat> cols(static_cast<size_t>(ds));
  for (int n = 0; n < ds; ++n) cols[static_cast<size_t>(n)] = u.middleCols(n * de, de) * rho_e;
  Mat out(b->size(), b->size());
  for (int l = 0; l < b->size(); ++l) {
    const auto [n, mm] = b->entry(l);
    const Mat full = cols[static_cast<size_t>(n)] * u.middleCols(mm * de, de).adjoint();
    out.col(l) = b->vectorize(partial_trace_E(full, ds, de));
  }
  return SuperOperator(b, std::move(out));
}

struct Spectrum {
  Mat w;
  RVec e;
  Mat unitary(double t) const {
    Vec ph(e.size());
    for (Eigen::Index i = 0; i < e.size(); ++i) ph(i) = std::exp(-I * (t * e(i)));
    return w * ph.asDiagonal() * w.adjoint();
  }
};

Spectrum spectrum_of(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (h + h.adjoint())));
  if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigendecomposition failed");
  return Spectrum{es.eigenvectors(), es.eigenvalues()};
}

}  // namespace

std::vector<SuperOperator> exact_map_series(const SEModel& m, const std::vector<double>& times, int dim_cap) {
  validate(m, dim_cap);
  const Spectrum sp = spectrum_of(m.total_hamiltonian());
  std::vector<SuperOperator> res;
  res.reserve(times.size());
  for (double t : times) res.push_back(reduced_map(sp.unitary(t), m.rho_e, m.dim_s(), m.dim_e()));
  return res;
}

SuperOperator exact_dynamical_map(const SEModel& m, double t, int dim_cap) {
  return exact_map_series(m, {t}, dim_cap).front();
}

KrausSet kraus_from_model(const SEModel& m, double t, int dim_cap) {
  validate(m, dim_cap);
  const int ds = m.dim_s(), de = m.dim_e();
  const Mat u = unitary_exp(m.total_hamiltonian(), t);
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (m.rho_e + m.rho_e.adjoint())));
  KrausSet ks;
  for (int j = 0; j < de; ++j) {
    const double p = es.eigenvalues()(j);
    if (p <= kEpsCut) continue;
    const Vec psi = es.eigenvectors().col(j);
    for (int jp = 0; jp < de; ++jp) {
      Mat k = Mat::Zero(ds, ds);
      for (int a = 0; a < ds; ++a)
        for (int b = 0; b < ds; ++b)
          for (int e = 0; e < de; ++e) k(a, b) += u(a * de + jp, b * de + e) * psi(e);
      ks.push_back(std::sqrt(p) * k);
    }
  }
  return ks;
}

double kraus_completeness_defect(const KrausSet& k) {
  require(!k.empty(), "empty Kraus set");
  Mat s = Mat::Zero(k[0].cols(), k[0].cols());
  for (const auto& x : k) s += x.adjoint() * x;
  return max_abs(s - Mat::Identity(s.rows(), s.cols()));
}

SuperOperator kraus_map(const KrausSet& k) {
  require(!k.empty(), "empty Kraus set");
  const int d = static_cast<int>(k[0].rows());
  return SuperOperator::from_action(ketbra_basis(d), [&k](const Mat& a) {
    Mat out = Mat::Zero(a.rows(), a.cols());
    for (const auto& x : k) out += x * a * x.adjoint();
    return out;
  });
}

// ---------------------------------------------------------------- quasi-probabilities

SpectralDecomp spectral_decompose(const Mat& f, double rel_tol) {
  require(is_square(f) && is_hermitian(f), "spectral_decompose: F must be Hermitian");
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (f + f.adjoint())));
  const RVec& ev = es.eigenvalues();
  const Mat& w = es.eigenvectors();
  const Eigen::Index n = ev.size();
  const double tol = rel_tol * std::max(1.0, ev(n - 1) - ev(0));

  SpectralDecomp sd;
  Eigen::Index start = 0;
  for (Eigen::Index i = 1; i <= n; ++i) {
    if (i < n && ev(i) - ev(i - 1) < tol) continue;
    const Mat cols = w.middleCols(start, i - start);
    sd.values.push_back(ev.segment(start, i - start).mean());
    sd.projectors.push_back(cols * cols.adjoint());
    start = i;
  }

  Mat sum = Mat::Zero(n, n), recon = Mat::Zero(n, n);
  for (int k = 0; k < sd.size(); ++k) {
    sum += sd.projectors[k];
    recon += sd.values[k] * sd.projectors[k];
  }
  const double scale = std::max(1.0, max_abs(f));
  if (max_abs(sum - Mat::Identity(n, n)) > 1e-8 || max_abs(recon - f) > 1e-6 * scale)
    throw NumericalError("spectral_decompose: eigenvalue grouping does not reproduce F");
  return sd;
}

size_t QuasiProbTensor::flat(const std::vector<int>& idx) const {
  require(static_cast<int>(idx.size()) == 2 * order, "quasi-probability index has wrong length");
  size_t f = 0;
  for (int i : idx) f = f * static_cast<size_t>(n()) + static_cast<size_t>(i);
  return f;
}

cplx QuasiProbTensor::total() const {
  cplx s = 0.0;
  for (const auto& x : data) s += x;
  return s;
}

QuasiProbTensor quasi_probability(const Mat& he, const Mat& f, const Mat& rho_e, const std::vector<double>& times,
                                  const QuasiProbOptions& opt) {
  const int k = static_cast<int>(times.size());
  require(k <= opt.k_cap, "quasi_probability: order exceeds the configured cap");
  require(he.rows() <= opt.dim_e_cap, "quasi_probability: environment dimension exceeds the configured cap");
  require(is_square(he) && he.rows() == f.rows() && he.rows() == rho_e.rows(),
          "quasi_probability: dimension mismatch");
  require(is_hermitian(he), "quasi_probability: he must be Hermitian");
  for (int i = 1; i < k; ++i)
    require(times[i - 1] > times[i], "quasi_probability: times must be strictly descending");

  const SpectralDecomp sd = spectral_decompose(f, opt.group_tol);
  const int n = sd.size();
  const Spectrum sp = spectrum_of(he);

  // pr[j][a] = P_I(f_a, s_j)
  std::vector<std::vector<Mat>> pr(static_cast<size_t>(k));
  for (int j = 0; j < k; ++j) {
    const Mat u = sp.unitary(times[j]);  // e^{-i s he}
    for (int a = 0; a < n; ++a) pr[j].push_back(u.adjoint() * sd.projectors[a] * u);
  }

  QuasiProbTensor q;
  q.order = k;
  q.times = times;
  q.values = sd.values;
  size_t total = 1;
  for (int j = 0; j < k; ++j) total *= static_cast<size_t>(n) * n;
  q.data.assign(total, cplx(0.0));
  if (k == 0) {
    q.data[0] = rho_e.trace();
    return q;
  }

  // depth-first from the innermost (latest-listed) slot outwards
  const size_t nn = static_cast<size_t>(n) * n;
  std::vector<size_t> stride(static_cast<size_t>(k));
  stride[static_cast<size_t>(k - 1)] = 1;
  for (int j = k - 2; j >= 0; --j) stride[j] = stride[j + 1] * nn;

  std::function<void(int, const Mat&, size_t)> rec = [&](int j, const Mat& x, size_t off) {
    for (int a = 0; a < n; ++a) {
      const Mat left = pr[j][a] * x;
      for (int b = 0; b < n; ++b) {
        const size_t o = off + stride[j] * (static_cast<size_t>(a) * n + b);
        if (j == 0) {
          // tr(P_a X P_b) = tr(P_b P_a X)
          q.data[o] = (pr[j][b] * left).trace();
        } else {
          rec(j - 1, left * pr[j][b], o);
        }
      }
    }
  };
  rec(k - 1, rho_e, 0);
  return q;
}

QuasiProbTensor quasi_probability(const SEModel& m, const std::vector<double>& times, const QuasiProbOptions& opt,
                                  int alpha) {
  validate(m);
  require(alpha >= 0 && alpha < static_cast<int>(m.couplings.size()), "coupling index out of range");
  return quasi_probability(m.he, m.couplings[alpha].f, m.rho_e, times, opt);
}

QuasiProbTensor contract_pair(const QuasiProbTensor& q, int slot) {
  require(slot >= 0 && slot < q.order, "contract_pair: slot out of range");
  QuasiProbTensor r;
  r.order = q.order - 1;
  r.values = q.values;
  for (int j = 0; j < q.order; ++j)
    if (j != slot) r.times.push_back(q.times[j]);
  const size_t nn = static_cast<size_t>(q.n()) * q.n();
  size_t inner = 1;
  for (int j = slot + 1; j < q.order; ++j) inner *= nn;
  const size_t outer = q.data.size() / (inner * nn);
  r.data.assign(outer * inner, cplx(0.0));
  for (size_t o = 0; o < outer; ++o)
    for (size_t p = 0; p < nn; ++p)
      for (size_t i = 0; i < inner; ++i) r.data[o * inner + i] += q.data[(o * nn + p) * inner + i];
  return r;
}

double consistency_defect(const Mat& he, const Mat& f, const Mat& rho_e, const QuasiProbTensor& q,
                          const QuasiProbOptions& opt) {
  double worst = 0.0;
  for (int slot = 0; slot < q.order; ++slot) {
    const QuasiProbTensor c = contract_pair(q, slot);
    const QuasiProbTensor d = quasi_probability(he, f, rho_e, c.times, opt);
    for (size_t i = 0; i < c.data.size(); ++i) worst = std::max(worst, std::abs(c.data[i] - d.data[i]));
  }
  return worst;
}

namespace {

Mat heisenberg(const SEModel& m, const Mat& op, double t) {
  const Mat u = unitary_exp(m.he, t);  // e^{-it he}
  return u.adjoint() * op * u;
}

const Mat& coupling_f(const SEModel& m, int alpha) {
  require(alpha >= 0 && alpha < static_cast<int>(m.couplings.size()), "coupling index out of range");
  return m.couplings[alpha].f;
}

}  // namespace

QuasiMoments2 quasi_moments_second(const SEModel& m, double t, double s, int alpha) {
  const Mat& f = coupling_f(m, alpha);
  const cplx ff = (heisenberg(m, f, t) * heisenberg(m, f, s) * m.rho_e).trace();
  return QuasiMoments2{ff, std::conj(ff), std::conj(ff), ff};
}

QuasiMoments2 quasi_moments_from_tensor(const QuasiProbTensor& q) {
  require(q.order == 2, "quasi_moments_from_tensor: need a k = 2 tensor");
  const int n = q.n();
  QuasiMoments2 r{0.0, 0.0, 0.0, 0.0};
  for (int a = 0; a < n; ++a)
    for (int ab = 0; ab < n; ++ab)
      for (int b = 0; b < n; ++b)
        for (int bb = 0; bb < n; ++bb) {
          const cplx v = q.at({a, ab, b, bb});
          r.ff += q.values[a] * q.values[b] * v;
          r.fbfb += q.values[ab] * q.values[bb] * v;
          r.ffb += q.values[a] * q.values[bb] * v;
          r.fbf += q.values[ab] * q.values[b] * v;
        }
  return r;
}

double env_mean(const SEModel& m, double t, int alpha) {
  return (heisenberg(m, coupling_f(m, alpha), t) * m.rho_e).trace().real();
}

cplx second_qumulant(const SEModel& m, double s, double u, int alpha, int beta) {
  const cplx mom = (heisenberg(m, coupling_f(m, alpha), s) * heisenberg(m, coupling_f(m, beta), u) * m.rho_e).trace();
  return mom - env_mean(m, s, alpha) * env_mean(m, u, beta);
}

CorrSusc correlation_and_susceptibility(const SEModel& m, const std::vector<double>& taus, int alpha) {
  CorrSusc r;
  r.c.reserve(taus.size());
  r.k.reserve(taus.size());
  for (double tau : taus) {
    const cplx q = second_qumulant(m, tau, 0.0, alpha, alpha);
    r.c.push_back(q.real());
    r.k.push_back(-q.imag());
  }
  return r;
}

cplx BathSpectrum::operator()(double tau) const {
  cplx s = 0.0;
  for (size_t i = 0; i < nu.size(); ++i) s += weight[i] * std::exp(I * (nu[i] * tau));
  return s;
}

bool is_stationary(const SEModel& m, double tol) {
  return max_abs(m.he * m.rho_e - m.rho_e * m.he) <= tol * std::max(1.0, max_abs(m.he));
}

BathSpectrum bath_spectrum(const SEModel& m, int alpha, int beta, double merge_tol) {
  require(is_stationary(m), "bath_spectrum: rho_e must commute with he");
  const Spectrum sp = spectrum_of(m.he);
  const int de = m.dim_e();
  auto centered = [&](int a) {
    const Mat& f = coupling_f(m, a);
    const double mean = (f * m.rho_e).trace().real();
    return Mat(sp.w.adjoint() * (f - mean * Mat::Identity(de, de)) * sp.w);
  };
  const Mat xa = centered(alpha), xb = centered(beta);
  const Mat rho = sp.w.adjoint() * m.rho_e * sp.w;

  std::vector<std::pair<double, cplx>> terms;
  for (int a = 0; a < de; ++a)
    for (int b = 0; b < de; ++b) {
      // sum_c X_a,ab X_b,bc rho_ca
      cplx w = 0.0;
      for (int c = 0; c < de; ++c) w += xa(a, b) * xb(b, c) * rho(c, a);
      if (std::abs(w) > 0.0) terms.emplace_back(sp.e(a) - sp.e(b), w);
    }
  std::sort(terms.begin(), terms.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  const double scale = std::max(1.0, sp.e(de - 1) - sp.e(0));
  BathSpectrum bs;
  for (const auto& [nu, w] : terms) {
    if (!bs.nu.empty() && nu - bs.nu.back() < merge_tol * scale) {
      bs.weight.back() += w;
    } else {
      bs.nu.push_back(nu);
      bs.weight.push_back(w);
    }
  }
  return bs;
}

CentralPicture central_picture(const SEModel& m) {
  validate(m);
  CentralPicture cp;
  cp.stationary = is_stationary(m);
  const auto sp = std::make_shared<Spectrum>(spectrum_of(m.he));
  const auto model = std::make_shared<SEModel>(m);
  auto mean_of = [sp, model](int alpha, double t) {
    const Mat u = sp->unitary(t);
    return (u.adjoint() * model->couplings[alpha].f * u * model->rho_e).trace().real();
  };
  const int nc = static_cast<int>(m.couplings.size());
  if (cp.stationary) {
    std::vector<double> means(static_cast<size_t>(nc));
    for (int a = 0; a < nc; ++a) means[a] = mean_of(a, 0.0);
    Mat hp = m.hs;
    for (int a = 0; a < nc; ++a) hp += m.lambda * means[a] * m.couplings[a].v;
    cp.hs_prime = [hp](double) { return hp; };
    cp.mean = [mu = means[0]](double) { return mu; };
  } else {
    cp.hs_prime = [model, mean_of, nc](double t) {
      Mat hp = model->hs;
      for (int a = 0; a < nc; ++a) hp += model->lambda * mean_of(a, t) * model->couplings[a].v;
      return hp;
    };
    cp.mean = [mean_of](double t) { return mean_of(0, t); };
  }
  cp.x_op = [model, mean = cp.mean](double t) {
    return Mat(model->couplings[0].f - mean(t) * Mat::Identity(model->dim_e(), model->dim_e()));
  };
  return cp;
}

// ---------------------------------------------------------------- super-qumulants

namespace {

// int_0^s e^{ixu} du
cplx phi(double x, double s) {
  const double xs = x * s;
  if (std::abs(xs) < 1e-8) return s * (1.0 + I * (0.5 * xs));
  return (std::exp(I * xs) - 1.0) / (I * x);
}

// L rho = sum_a Vs A rho - A rho Vs + rho B Vs - Vs rho B, as a ket-bra matrix
Mat central_l2(const std::vector<Mat>& vs, const std::vector<Mat>& a, const std::vector<Mat>& b, const BasisPtr& kb) {
  const int d = kb->dim();
  const Mat one = Mat::Identity(d, d);
  Mat l = Mat::Zero(kb->size(), kb->size());
  for (size_t i = 0; i < vs.size(); ++i) {
    l += left_right_super(vs[i] * a[i], one, kb).matrix();
    l -= left_right_super(a[i], vs[i], kb).matrix();
    l += left_right_super(one, b[i] * vs[i], kb).matrix();
    l -= left_right_super(vs[i], b[i], kb).matrix();
  }
  return l;
}

GeneratorFn stationary_l2(const SEModel& m) {
  const int ds = m.dim_s();
  const int nc = static_cast<int>(m.couplings.size());
  const CentralPicture cp = central_picture(m);
  const Spectrum hsp = spectrum_of(cp.hs_prime(0.0));

  struct Data {
    Mat psi;
    RVec e;
    std::vector<Mat> v;                         // eigenbasis of hs'
    std::vector<std::vector<BathSpectrum>> bs;  // [alpha][beta]
    BasisPtr kb;
    double lambda;
  };
  auto dat = std::make_shared<Data>();
  dat->psi = hsp.w;
  dat->e = hsp.e;
  dat->kb = ketbra_basis(ds);
  dat->lambda = m.lambda;
  for (int a = 0; a < nc; ++a) dat->v.push_back(hsp.w.adjoint() * m.couplings[a].v * hsp.w);
  dat->bs.resize(static_cast<size_t>(nc));
  for (int a = 0; a < nc; ++a)
    for (int b = 0; b < nc; ++b) dat->bs[a].push_back(bath_spectrum(m, a, b));

  return GeneratorFn{ds * ds, [dat, nc, ds](double s, Mat& out) {
                       std::vector<Mat> vs(nc), as(nc), bs(nc);
                       auto vc = [&](int b) {
                         Mat x = dat->v[b];
                         for (int j = 0; j < ds; ++j)
                           for (int l = 0; l < ds; ++l) x(j, l) *= std::exp(I * (s * (dat->e(j) - dat->e(l))));
                         return x;
                       };
                       for (int a = 0; a < nc; ++a) {
                         Mat am = Mat::Zero(ds, ds), bm = Mat::Zero(ds, ds);
                         for (int b = 0; b < nc; ++b) {
                           const BathSpectrum& sp = dat->bs[a][b];
                           for (int j = 0; j < ds; ++j)
                             for (int l = 0; l < ds; ++l) {
                               const double om = dat->e(j) - dat->e(l);
                               cplx ca = 0.0, cb = 0.0;
                               for (size_t k = 0; k < sp.nu.size(); ++k) {
                                 ca += sp.weight[k] * std::exp(I * (sp.nu[k] * s)) * phi(om - sp.nu[k], s);
                                 cb += std::conj(sp.weight[k]) * std::exp(-I * (sp.nu[k] * s)) * phi(om + sp.nu[k], s);
                               }
                               am(j, l) += dat->v[b](j, l) * ca;
                               bm(j, l) += dat->v[b](j, l) * cb;
                             }
                         }
                         const Mat& p = dat->psi;
                         vs[a] = p * vc(a) * p.adjoint();
                         as[a] = p * am * p.adjoint();
                         bs[a] = p * bm * p.adjoint();
                       }
                       out = -(dat->lambda * dat->lambda) * central_l2(vs, as, bs, dat->kb);
                     }};
}

// Trapezoid quadrature of the inner integrals on a uniform grid.
GeneratorFn tabulated_l2(const SEModel& m, double h, double t_max) {
  const int ds = m.dim_s();
  const int nc = static_cast<int>(m.couplings.size());
  const CentralPicture cp = central_picture(m);
  const long n = static_cast<long>(std::ceil(t_max / h - 1e-9)) + 2;

  // U_S'(s_i) on the grid
  const GeneratorFn gh = hamiltonian_generator(ds, cp.hs_prime);
  std::vector<double> grid(static_cast<size_t>(n));
  for (long i = 0; i < n; ++i) grid[static_cast<size_t>(i)] = i * h;
  const auto us = propagate_to(gh, 0.0, grid, IntegratorCfg{Method::rk4, h});

  std::vector<std::vector<Mat>> vc(static_cast<size_t>(nc), std::vector<Mat>(static_cast<size_t>(n)));
  std::vector<std::vector<Mat>> fi(static_cast<size_t>(nc), std::vector<Mat>(static_cast<size_t>(n)));
  std::vector<std::vector<double>> mu(static_cast<size_t>(nc), std::vector<double>(static_cast<size_t>(n)));
  for (int a = 0; a < nc; ++a)
    for (long i = 0; i < n; ++i) {
      vc[a][i] = us[i].adjoint() * m.couplings[a].v * us[i];
      fi[a][i] = heisenberg(m, m.couplings[a].f, i * h);
      mu[a][i] = (fi[a][i] * m.rho_e).trace().real();
    }

  auto table = std::make_shared<detail::GridTable>();
  table->delta = h;
  table->values.resize(static_cast<size_t>(n));
  const BasisPtr kb = ketbra_basis(ds);
  const double l2 = m.lambda * m.lambda;
  for (long i = 0; i < n; ++i) {
    std::vector<Mat> vs(nc), as(nc, Mat::Zero(ds, ds)), bs(nc, Mat::Zero(ds, ds));
    for (int a = 0; a < nc; ++a) {
      vs[a] = vc[a][i];
      if (i == 0) continue;
      const Mat fr = fi[a][i];
      for (int b = 0; b < nc; ++b)
        for (long j = 0; j <= i; ++j) {
          const double w = (j == 0 || j == i) ? 0.5 * h : h;
          const cplx k = (fr * fi[b][j] * m.rho_e).trace() - mu[a][i] * mu[b][j];
          as[a] += (w * k) * vc[b][j];
          bs[a] += (w * std::conj(k)) * vc[b][j];
        }
    }
    table->values[static_cast<size_t>(i)] = -l2 * central_l2(vs, as, bs, kb);
  }
  return GeneratorFn{ds * ds, [table](double t, Mat& out) { table->eval(t, out); }};
}

}  // namespace

GeneratorFn superqumulant_generator(const SEModel& m, const SuperQumulantOptions& opt, double t_max) {
  validate(m);
  require(opt.order == 1 || opt.order == 2, "super-qumulant order must be 1 or 2");
  const int ds = m.dim_s();
  if (opt.order == 1) return constant_generator(Mat::Zero(ds * ds, ds * ds));
  if (is_stationary(m)) return stationary_l2(m);
  require(opt.h > 0.0 && t_max >= 0.0, "super-qumulant generator: need h > 0 and t_max >= 0");
  return tabulated_l2(m, opt.h, t_max);
}

std::vector<SuperOperator> second_order_map_series(const SEModel& m, const std::vector<double>& times,
                                                   const IntegratorCfg& cfg, int order) {
  require(!times.empty(), "output time list is empty");
  const GeneratorFn g = superqumulant_generator(m, SuperQumulantOptions{order, cfg.h}, times.back());
  const auto maps = propagate_to(g, 0.0, times, cfg);
  const CentralPicture cp = central_picture(m);
  const int ds = m.dim_s();
  std::vector<Mat> us;
  if (cp.stationary) {
    const Mat hp = cp.hs_prime(0.0);
    for (double t : times) us.push_back(unitary_exp(hp, t));
  } else {
    us = propagate_to(hamiltonian_generator(ds, cp.hs_prime), 0.0, times, cfg);
  }
  const BasisPtr kb = ketbra_basis(ds);
  std::vector<SuperOperator> res;
  res.reserve(times.size());
  for (size_t i = 0; i < times.size(); ++i) res.push_back(lift_unitary(us[i]) * SuperOperator(kb, maps[i]));
  return res;
}

SuperOperator second_order_map(const SEModel& m, double t, const IntegratorCfg& cfg, int order) {
  return second_order_map_series(m, {t}, cfg, order).front();
}

}  // namespace openqs
