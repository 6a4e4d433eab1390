#include "openqs/stochastic_maps.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "detail/grid_table.hpp"

namespace openqs {

void validate(const StochasticHamiltonian& h) {
  require(is_square(h.h0) && is_square(h.v) && h.h0.rows() == h.v.rows() && h.h0.rows() > 0,
          "stochastic Hamiltonian: h0 and v must be square with equal dims");
  require(is_hermitian(h.h0), "stochastic Hamiltonian: h0 must be Hermitian");
  require(is_hermitian(h.v), "stochastic Hamiltonian: v must be Hermitian");
  require(std::isfinite(h.lambda), "stochastic Hamiltonian: lambda must be finite");
  validate(h.process);
}

cplx coherence_rtn(const RtnSpec& s, double lambda, double t) {
  validate(s);
  require(t >= 0.0, "coherence_rtn: t must be >= 0");
  const double w = s.w;
  const double z2 = w * w - lambda * lambda;
  const cplx a(w, s.p * lambda);
  const cplx z = std::sqrt(cplx(z2, 0.0));
  cplx ch, sh_over_z;
  if (std::abs(z) * t < 1e-4) {
    const double x = z2 * t * t;
    ch = 1.0 + x / 2.0 + x * x / 24.0;
    sh_over_z = t * (1.0 + x / 6.0 + x * x / 120.0);
  } else {
    ch = std::cosh(z * t);
    sh_over_z = std::sinh(z * t) / z;
  }
  return std::exp(-w * t) * (ch + a * sh_over_z);
}

std::function<cplx(double)> rtn_gap_coherence(const RtnSpec& s, double t) {
  return [s, t](double g) { return coherence_rtn(s, -g, t); };
}

SuperOperator dephasing_map(const Mat& v, double lambda, const std::function<cplx(double)>& coherence) {
  require(is_square(v), "dephasing_map: v must be square");
  require(is_hermitian(v), "dephasing_map: v must be Hermitian");
  const int d = static_cast<int>(v.rows());
  const BasisPtr b = ketbra_basis(d);

  const bool diagonal = max_abs(v - Mat(v.diagonal().asDiagonal())) == 0.0;
  RVec ev(d);
  Mat w;
  if (diagonal) {
    ev = v.diagonal().real();
  } else {
    Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (v + v.adjoint())));
    ev = es.eigenvalues();
    w = es.eigenvectors();
  }

  Mat m = Mat::Zero(b->size(), b->size());
  for (int k = 0; k < b->size(); ++k) {
    const auto [n, mm] = b->entry(k);
    m(k, k) = (n == mm) ? cplx(1.0) : coherence(lambda * (ev(n) - ev(mm)));
  }
  SuperOperator diag(b, std::move(m));
  if (diagonal) return diag;
  return left_right_super(w, w.adjoint()) * diag * left_right_super(w.adjoint(), w);
}

double trajectory_spacing(const IntegratorCfg& cfg) {
  return cfg.method == Method::rk4 ? 0.5 * cfg.h : cfg.h;
}

namespace {

void check_times(const std::vector<double>& times) {
  require(!times.empty(), "output time list is empty");
  double prev = 0.0;
  for (double t : times) {
    require(std::isfinite(t) && t >= prev, "output times must be finite, >= 0 and non-decreasing");
    prev = t;
  }
}

int worker_count(int requested) {
  if (requested > 0) return requested;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Advances x over [ta, tb] with steps of at most h, last one shortened.
void advance(Stepper& st, Mat& x, double ta, double tb, double h) {
  const double span = tb - ta;
  if (span <= 0.0) return;
  const long n = std::max(1L, static_cast<long>(std::ceil(span / h - 1e-9)));
  for (long j = 0; j < n; ++j) {
    const double t = ta + j * h;
    st.step(x, t, (j == n - 1) ? (tb - t) : h);
  }
}

// accumulates lift(u) into acc, ket-bra basis: entry ((a,b),(n,m)) = u_an conj(u_bm)
void accumulate_lift(const OperatorBasis& b, const Mat& u, Mat& acc) {
  const int n = b.size();
  for (int l = 0; l < n; ++l) {
    const auto [c, e] = b.entry(l);
    for (int k = 0; k < n; ++k) {
      const auto [a, bb] = b.entry(k);
      acc(k, l) += u(a, c) * std::conj(u(bb, e));
    }
  }
}

constexpr long kBlock = 256;

}  // namespace

std::vector<SuperOperator> sample_average_series(const StochasticHamiltonian& h, const std::vector<double>& times,
                                                 const IntegratorCfg& cfg, const SampleAverageOptions& opt) {
  validate(h);
  check_times(times);
  require(opt.n_samples >= 1, "sample average: n_samples must be >= 1");
  require(cfg.h > 0.0 && std::isfinite(cfg.h), "integrator step h must be > 0");

  const int d = static_cast<int>(h.h0.rows());
  const BasisPtr basis = ketbra_basis(d);
  const int nb = basis->size();
  const double dt = trajectory_spacing(cfg);
  const std::vector<double> grid = uniform_grid(times.back(), dt);
  const long last = static_cast<long>(grid.size()) - 1;
  const Mat a = -I * h.h0;
  const Mat bv = -I * h.lambda * h.v;
  const size_t n_out = times.size();

  const long n_blocks = (opt.n_samples + kBlock - 1) / kBlock;
  std::vector<std::vector<Mat>> partial(static_cast<size_t>(n_blocks));
  std::atomic<long> next{0};
  std::atomic<bool> failed{false};
  std::string failure;

  auto worker = [&]() {
    std::vector<double> values;
    const std::vector<double>* vals = &values;
    GeneratorFn g{d, [&, vals](double t, Mat& out) {
                    long i = static_cast<long>(std::floor(t / dt + 1e-7));
                    i = std::clamp(i, 0L, last);
                    out = a + (*vals)[static_cast<size_t>(i)] * bv;
                  }};
    Stepper st(g, cfg.method);
    Mat u(d, d);
    try {
      for (long blk = next++; blk < n_blocks && !failed; blk = next++) {
        std::vector<Mat> acc(n_out, Mat::Zero(nb, nb));
        const long j0 = blk * kBlock;
        const long j1 = std::min(opt.n_samples, j0 + kBlock);
        for (long j = j0; j < j1; ++j) {
          sample_into(h.process, grid, derive_seed(opt.seed, static_cast<std::uint64_t>(j)), values);
          u.setIdentity();
          double tc = 0.0;
          for (size_t o = 0; o < n_out; ++o) {
            advance(st, u, tc, times[o], cfg.h);
            tc = times[o];
            accumulate_lift(*basis, u, acc[o]);
          }
        }
        partial[static_cast<size_t>(blk)] = std::move(acc);
      }
    } catch (const std::exception& ex) {
      if (!failed.exchange(true)) failure = ex.what();
    }
  };

  const int nt = std::min<long>(worker_count(opt.threads), n_blocks);
  if (nt <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nt; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failed) throw NumericalError("sample average: " + failure);

  // fixed block order keeps the sum independent of the thread count
  std::vector<SuperOperator> res;
  res.reserve(n_out);
  for (size_t o = 0; o < n_out; ++o) {
    Mat sum = Mat::Zero(nb, nb);
    for (const auto& p : partial) sum += p[o];
    sum /= static_cast<double>(opt.n_samples);
    res.emplace_back(basis, std::move(sum));
  }
  return res;
}

SuperOperator sample_average_map(const StochasticHamiltonian& h, double t, const IntegratorCfg& cfg,
                                 const SampleAverageOptions& opt) {
  return sample_average_series(h, {t}, cfg, opt).front();
}

// ---------------------------------------------------------------- super-cumulants

namespace {

// C2(s, u) = e^{-2a(s-u)} g(u) for every supported process
struct KernelShape {
  double a = 0.0;        // exponential decay rate / 2
  double c4_scale = 1.0; // scaling of RTN fourth cumulant
  std::function<double(double)> g;
};

KernelShape kernel_shape(const ProcessSpec& p) {
  KernelShape k;
  if (const auto* r = std::get_if<RtnSpec>(&p)) {
    k.a = r->w;
    const RtnSpec s = *r;
    k.g = [s](double u) {
      const double m = rtn_mean(s, u);
      return 1.0 - m * m;
    };
  } else if (const auto* a = std::get_if<AsymTelegraphSpec>(&p)) {
    k.a = 0.5 * (a->w_plus + a->w_minus);
    const AsymTelegraphSpec s = *a;
    k.g = [s](double u) {
      const double m = asym_mean(s, u);
      return 1.0 - m * m;
    };
  } else {
    const auto& gs = std::get<GaussSumSpec>(p);
    k.a = gs.base.w;
    k.c4_scale = 1.0 / gs.n_components;
    k.g = [](double) { return 1.0; };
  }
  return k;
}

class InteractionV {
 public:
  InteractionV(const Mat& h0, const Mat& v) {
    Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (h0 + h0.adjoint())));
    w_ = es.eigenvectors();
    e_ = es.eigenvalues();
    vt_ = w_.adjoint() * v * w_;
    basis_ = ketbra_basis(static_cast<int>(v.rows()));
  }
  Mat op(double s) const {
    Mat x = vt_;
    for (Eigen::Index a = 0; a < x.rows(); ++a)
      for (Eigen::Index b = 0; b < x.cols(); ++b) x(a, b) *= std::exp(I * (s * (e_(a) - e_(b))));
    return w_ * x * w_.adjoint();
  }
  Mat super(double s) const { return commutator_super(op(s), basis_).matrix(); }

 private:
  Mat w_, vt_;
  RVec e_;
  BasisPtr basis_;
};

// fourth cumulant of the zero-mean RTN with rate a, times descending
double rtn_c4(double a, double t1, double t2, double t3, double t4) {
  auto m = [a](double x, double y) { return std::exp(-2.0 * a * (x - y)); };
  // the fourth moment equals the (12)(34) pairing, which cancels
  return -m(t1, t3) * m(t2, t4) - m(t1, t4) * m(t2, t3);
}

// Fourth-order term on a coarse node set; returns C^(4) at every node.
std::vector<Mat> fourth_order_nodes(const InteractionV& vi, const KernelShape& k, double t_max, int nodes) {
  const int n = std::max(2, nodes);
  const double du = t_max / (n - 1);
  std::vector<Mat> vs(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) vs[static_cast<size_t>(i)] = vi.super(i * du);
  const Eigen::Index dd = vs[0].rows();

  auto c2 = [&](int x, int y) { return std::exp(-2.0 * k.a * (x - y) * du); };
  auto tw = [du](int j, int nmax) { return (j == 0 || j == nmax) ? 0.5 * du : du; };

  // P_ab = V_a V_b
  std::vector<Mat> prod(static_cast<size_t>(n) * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b <= a; ++b) prod[static_cast<size_t>(a) * n + b] = vs[a] * vs[b];

  std::vector<Mat> out(static_cast<size_t>(n), Mat::Zero(dd, dd));
  Mat sa(dd, dd), sb(dd, dd), sg(dd, dd), inner(dd, dd), hsum(dd, dd), xsum(dd, dd);
  for (int i = 1; i < n; ++i) {
    xsum.setZero();
    for (int a = 0; a <= i; ++a) {
      hsum.setZero();
      for (int b = 0; b <= a; ++b) {
        if (b == 0) continue;  // inner integral over [0, 0] vanishes
        sa.setZero();
        sb.setZero();
        sg.setZero();
        for (int c = 0; c <= b; ++c) {
          const double wc = tw(c, b);
          const double al = k.c4_scale * rtn_c4(k.a, i * du, a * du, b * du, c * du);
          const double be = c2(i, b) * c2(a, c);
          const double ga = c2(i, c) * c2(a, b);
          sa += (wc * al) * vs[c];
          sb += (wc * be) * vs[c];
          sg += (wc * ga) * vs[c];
        }
        const Mat& p = prod[static_cast<size_t>(a) * n + b];
        const Mat q = p - vs[b] * vs[a];
        inner.noalias() = p * sa;
        inner.noalias() += q * sb;
        inner.noalias() += p * sg;
        inner.noalias() -= sg * p;
        hsum += tw(b, a) * inner;
      }
      if (a > 0) xsum += tw(a, i) * hsum;
    }
    out[static_cast<size_t>(i)] = vs[i] * xsum;
  }
  return out;
}

}  // namespace

GeneratorFn supercumulant_generator(const StochasticHamiltonian& h, const SuperCumulantOptions& opt, double t_max,
                                    const IntegratorCfg& cfg) {
  validate(h);
  require(opt.order == 1 || opt.order == 2 || opt.order == 4, "super-cumulant order must be 1, 2 or 4");
  require(t_max >= 0.0 && std::isfinite(t_max), "super-cumulant generator: t_max must be >= 0");
  require(cfg.h > 0.0, "integrator step h must be > 0");
  if (opt.order == 4)
    require(is_zero_mean(h.process), "fourth-order super-cumulant requires a zero-mean process");

  const int d = static_cast<int>(h.h0.rows());
  const InteractionV vi(h.h0, h.v);
  const KernelShape k = kernel_shape(h.process);
  const double delta = trajectory_spacing(cfg);
  const long n = static_cast<long>(std::ceil(t_max / delta - 1e-9)) + 2;
  const cplx mil = -I * h.lambda;

  auto table = std::make_shared<detail::GridTable>();
  table->delta = delta;
  table->values.resize(static_cast<size_t>(n));

  const double decay = std::exp(-2.0 * k.a * delta);
  Mat vprev = vi.super(0.0);
  double gprev = k.g(0.0);
  Mat j = Mat::Zero(vprev.rows(), vprev.cols());
  for (long i = 0; i < n; ++i) {
    const double s = i * delta;
    const Mat vs = (i == 0) ? vprev : vi.super(s);
    const double gs = k.g(s);
    if (i > 0) j = decay * j + (0.5 * delta) * (decay * gprev * vprev + gs * vs);
    Mat gen = (mil * process_mean(h.process, s)) * vs;
    if (opt.order >= 2) gen += (mil * mil) * (vs * j);
    table->values[static_cast<size_t>(i)] = std::move(gen);
    vprev = vs;
    gprev = gs;
  }

  if (opt.order == 4 && t_max > 0.0) {
    const double tn = (n - 1) * delta;
    const auto c4 = fourth_order_nodes(vi, k, tn, opt.order4_nodes);
    detail::GridTable coarse{tn / (c4.size() - 1), c4};
    const double l4 = std::pow(h.lambda, 4);
    Mat tmp;
    for (long i = 0; i < n; ++i) {
      coarse.eval(i * delta, tmp);
      table->values[static_cast<size_t>(i)] += l4 * tmp;
    }
  }

  return GeneratorFn{d * d, [table](double t, Mat& out) { table->eval(t, out); }};
}

SuperOperator truncated_map_interaction(const StochasticHamiltonian& h, const SuperCumulantOptions& opt, double t,
                                        const IntegratorCfg& cfg) {
  const GeneratorFn g = supercumulant_generator(h, opt, t, cfg);
  return SuperOperator(ketbra_basis(static_cast<int>(h.h0.rows())), propagate(g, 0.0, t, cfg));
}

SuperOperator truncated_map(const StochasticHamiltonian& h, const SuperCumulantOptions& opt, double t,
                            const IntegratorCfg& cfg) {
  return lift_unitary(unitary_exp(h.h0, t)) * truncated_map_interaction(h, opt, t, cfg);
}

std::vector<SuperOperator> truncated_map_series(const StochasticHamiltonian& h, const SuperCumulantOptions& opt,
                                                const std::vector<double>& times, const IntegratorCfg& cfg) {
  check_times(times);
  const GeneratorFn g = supercumulant_generator(h, opt, times.back(), cfg);
  const auto maps = propagate_to(g, 0.0, times, cfg);
  const BasisPtr b = ketbra_basis(static_cast<int>(h.h0.rows()));
  std::vector<SuperOperator> res;
  res.reserve(maps.size());
  for (size_t i = 0; i < maps.size(); ++i)
    res.push_back(lift_unitary(unitary_exp(h.h0, times[i])) * SuperOperator(b, maps[i]));
  return res;
}

bool entropy_monotonicity_check(const SuperOperator& map, const Mat& rho, double tol) {
  const Mat out = map.apply(rho);
  const Mat herm = 0.5 * (out + out.adjoint());
  return entropy(herm, 1e-8) >= entropy(rho) - tol;
}

cplx coherence_element(const SuperOperator& map, int n, int m) {
  const int d = map.dim();
  require(n >= 0 && m >= 0 && n < d && m < d, "coherence_element: index out of range");
  const SuperOperator kb = map.basis()->is_ketbra() ? map : map.in_basis(ketbra_basis(d));
  const int k = kb.basis()->index(n, m);
  return kb.matrix()(k, k);
}

}  // namespace openqs
