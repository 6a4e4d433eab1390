#include "openqs/surrogate_fields.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <thread>

#include "openqs/stochastic_processes.hpp"

namespace openqs {

namespace {

size_t ipow(size_t b, int e) {
  size_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

// flat index of the diagonal entry (f1,f1,...,fk,fk) for the digit string of p
size_t diag_flat(size_t pidx, size_t n, int k) {
  size_t f = 0, scale = 1;
  for (int j = 0; j < k; ++j) {
    const size_t d = pidx % n;
    pidx /= n;
    f += (d * n + d) * scale;
    scale *= n * n;
  }
  return f;
}

std::vector<double> diag_slice(const QuasiProbTensor& q) {
  const size_t n = static_cast<size_t>(q.n());
  std::vector<double> p(ipow(n, q.order));
  for (size_t i = 0; i < p.size(); ++i) p[i] = q.data[diag_flat(i, n, q.order)].real();
  return p;
}

// sum over digit `slot` of a flat n^k array, f1 most significant
std::vector<double> sum_slot(const std::vector<double>& p, size_t n, int k, int slot) {
  size_t inner = ipow(n, k - 1 - slot);
  const size_t outer = p.size() / (inner * n);
  std::vector<double> r(outer * inner, 0.0);
  for (size_t o = 0; o < outer; ++o)
    for (size_t a = 0; a < n; ++a)
      for (size_t i = 0; i < inner; ++i) r[o * inner + i] += p[(o * n + a) * inner + i];
  return r;
}

}  // namespace

DiagonalSplit split_diagonal(const QuasiProbTensor& q) {
  DiagonalSplit s;
  s.order = q.order;
  s.values = q.values;
  s.phi = q;
  const size_t n = static_cast<size_t>(q.n());
  const size_t np = ipow(n, q.order);
  s.p.resize(np);
  double sum = 0.0;
  s.diag_min = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < np; ++i) {
    const size_t f = diag_flat(i, n, q.order);
    const cplx v = q.data[f];
    s.p[i] = v.real();
    s.diag_imag = std::max(s.diag_imag, std::abs(v.imag()));
    s.diag_min = std::min(s.diag_min, v.real());
    sum += v.real();
    s.phi.data[f] = 0.0;
  }
  s.normalization_defect = std::abs(sum - 1.0);
  for (const auto& x : s.phi.data) s.interference_norm = std::max(s.interference_norm, std::abs(x));
  return s;
}

SurrogateReport surrogate_verdict(const SEModel& m, const std::vector<std::vector<double>>& grids, int k_max,
                                  double eps, const QuasiProbOptions& opt, int alpha) {
  validate(m);
  require(k_max >= 1 && k_max <= opt.k_cap, "surrogate_verdict: k_max must lie in [1, k_cap]");
  require(!grids.empty(), "surrogate_verdict: at least one time grid is required");
  require(eps > 0.0, "surrogate_verdict: eps must be > 0");
  for (const auto& g : grids)
    require(static_cast<int>(g.size()) >= k_max, "surrogate_verdict: grid shorter than k_max");
  require(alpha >= 0 && alpha < static_cast<int>(m.couplings.size()), "coupling index out of range");
  const Mat& f = m.couplings[alpha].f;

  auto one_order = [&](int k) {
    SurrogateOrder o;
    o.k = k;
    o.diag_min = std::numeric_limits<double>::infinity();
    for (const auto& g : grids) {
      const std::vector<double> t(g.begin(), g.begin() + k);
      const QuasiProbTensor q = quasi_probability(m.he, f, m.rho_e, t, opt);
      const DiagonalSplit s = split_diagonal(q);
      o.interference_norm = std::max(o.interference_norm, s.interference_norm);
      o.diag_min = std::min(o.diag_min, s.diag_min);
      o.diag_imag = std::max(o.diag_imag, s.diag_imag);
      o.normalization_defect = std::max(o.normalization_defect, s.normalization_defect);
      if (k == 1) {
        o.consistency_defect = std::max(o.consistency_defect, s.normalization_defect);
        continue;
      }
      const size_t n = static_cast<size_t>(q.n());
      for (int slot = 0; slot < k; ++slot) {
        std::vector<double> tr;
        for (int j = 0; j < k; ++j)
          if (j != slot) tr.push_back(t[j]);
        const std::vector<double> lower = diag_slice(quasi_probability(m.he, f, m.rho_e, tr, opt));
        const std::vector<double> summed = sum_slot(s.p, n, k, slot);
        const std::vector<double> contracted = diag_slice(contract_pair(s.phi, slot));
        for (size_t i = 0; i < lower.size(); ++i) {
          const double d = summed[i] - lower[i];
          o.consistency_defect = std::max(o.consistency_defect, std::abs(d));
          o.contraction_mismatch = std::max(o.contraction_mismatch, std::abs(d + contracted[i]));
        }
      }
    }
    o.valid = o.interference_norm <= eps && o.consistency_defect <= eps;
    return o;
  };

  std::vector<std::future<SurrogateOrder>> jobs;
  for (int k = 1; k <= k_max; ++k) jobs.push_back(std::async(std::launch::async, one_order, k));
  SurrogateReport r;
  r.k_max = k_max;
  r.eps = eps;
  r.valid = true;
  for (auto& j : jobs) {
    r.orders.push_back(j.get());
    r.valid = r.valid && r.orders.back().valid;
  }
  return r;
}

nlohmann::json to_json(const SurrogateReport& r) {
  nlohmann::json orders = nlohmann::json::array();
  for (const auto& o : r.orders)
    orders.push_back({{"k", o.k},
                      {"interference_norm", o.interference_norm},
                      {"consistency_defect", o.consistency_defect},
                      {"contraction_mismatch", o.contraction_mismatch},
                      {"diag_min", o.diag_min},
                      {"diag_imag", o.diag_imag},
                      {"normalization_defect", o.normalization_defect},
                      {"valid", o.valid}});
  return {{"k_max", r.k_max}, {"eps", r.eps}, {"valid", r.valid}, {"orders", std::move(orders)}};
}

double gkls_defect(const SuperOperator& l) {
  const int d = l.dim();
  const BasisPtr kb = ketbra_basis(d);
  const SuperOperator lk = l.in_basis(kb);
  double herm = 0.0, tr = 0.0;
  for (int n = 0; n < d; ++n)
    for (int m = 0; m < d; ++m) {
      const Mat a = lk.apply((*kb)[kb->index(n, m)]);
      const Mat b = lk.apply((*kb)[kb->index(m, n)]);
      herm = std::max(herm, max_abs(a - b.adjoint()));
      tr = std::max(tr, std::abs(a.trace()));
    }
  const Mat c = choi_matrix(lk);
  Mat omega = Mat::Zero(d * d, 1);
  for (int n = 0; n < d; ++n) omega(n * d + n, 0) = 1.0 / std::sqrt(static_cast<double>(d));
  const Mat q = Mat::Identity(d * d, d * d) - omega * omega.adjoint();
  const Mat qcq = q * c * q;
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (qcq + qcq.adjoint())));
  const double neg = std::max(0.0, -es.eigenvalues().minCoeff());
  return std::max({herm, tr, neg});
}

GklsQuasiProb gkls_env_quasiprob(const GklsEnvironment& env, const std::vector<double>& times,
                                 const QuasiProbOptions& opt) {
  const int k = static_cast<int>(times.size());
  const int d = env.l.dim();
  require(k >= 1 && k <= opt.k_cap, "gkls_env_quasiprob: order must lie in [1, k_cap]");
  require(d <= opt.dim_e_cap, "gkls_env_quasiprob: environment dimension exceeds the configured cap");
  require(env.f.rows() == d && env.rho.rows() == d, "gkls_env_quasiprob: dimension mismatch");
  require(is_density(env.rho), "gkls_env_quasiprob: rho must be a density matrix");
  for (int i = 1; i < k; ++i)
    require(times[i - 1] > times[i], "gkls_env_quasiprob: times must be strictly descending");
  require(times.back() >= 0.0, "gkls_env_quasiprob: times must be >= 0");
  const double scale = std::max(1.0, max_abs(env.l.matrix()));
  if (gkls_defect(env.l) > 1e-9 * scale) throw ValidationError("gkls_env_quasiprob: L is not a GKLS generator");

  const BasisPtr kb = ketbra_basis(d);
  const SuperOperator l = env.l.in_basis(kb);
  const SpectralDecomp sd = spectral_decompose(env.f, opt.group_tol);
  const int n = sd.size();

  // prop[j] = e^{(s_j - s_{j+1}) L}, s_k = 0
  std::vector<SuperOperator> prop;
  for (int j = 0; j < k; ++j) {
    const double gap = times[j] - (j + 1 < k ? times[j + 1] : 0.0);
    prop.push_back(matrix_exp(l * cplx(gap)));
  }

  GklsQuasiProb r;
  r.q.order = k;
  r.q.times = times;
  r.q.values = sd.values;
  r.q.data.assign(ipow(static_cast<size_t>(n) * n, k), cplx(0.0));
  const size_t nn = static_cast<size_t>(n) * n;
  std::vector<size_t> stride(static_cast<size_t>(k));
  stride[static_cast<size_t>(k - 1)] = 1;
  for (int j = k - 2; j >= 0; --j) stride[j] = stride[j + 1] * nn;

  std::function<void(int, const Mat&, size_t)> rec = [&](int j, const Mat& x, size_t off) {
    for (int a = 0; a < n; ++a) {
      const Mat left = sd.projectors[a] * x;
      for (int b = 0; b < n; ++b) {
        const size_t o = off + stride[j] * (static_cast<size_t>(a) * n + b);
        const Mat y = left * sd.projectors[b];
        if (j == 0)
          r.q.data[o] = y.trace();
        else
          rec(j - 1, prop[j - 1].apply(y), o);
      }
    }
  };
  rec(k - 1, prop[k - 1].apply(env.rho), 0);

  for (int f = 0; f < n; ++f) {
    const Mat pf = left_right_super(sd.projectors[f], sd.projectors[f], kb).matrix() * l.matrix();
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        if (a == b) continue;
        const Mat x = pf * left_right_super(sd.projectors[a], sd.projectors[b], kb).matrix();
        r.block_defect = std::max(r.block_defect, max_abs(x));
      }
  }
  r.block_diagonal = r.block_defect <= 1e-12 * scale;
  return r;
}

namespace {

template <class Evolve>
MeasurementRecord measure_chain(const SpectralDecomp& sd, Mat rho, const std::vector<double>& times,
                                std::uint64_t seed, Evolve&& evolve) {
  require(!times.empty(), "sequential_measurement_sample: no measurement times");
  require(times.front() >= 0.0, "sequential_measurement_sample: times must be >= 0");
  for (size_t i = 1; i < times.size(); ++i)
    require(times[i] > times[i - 1], "sequential_measurement_sample: times must be strictly ascending");
  Rng rng(seed);
  MeasurementRecord rec;
  rec.times = times;
  double t_prev = 0.0;
  std::vector<double> p(static_cast<size_t>(sd.size()));
  for (double t : times) {
    rho = evolve(rho, t - t_prev);
    t_prev = t;
    double total = 0.0;
    for (int a = 0; a < sd.size(); ++a) {
      const double pa = (sd.projectors[a] * rho).trace().real();
      p[a] = pa >= kPruneProbability ? pa : 0.0;
      total += p[a];
    }
    if (total <= 0.0) throw NumericalError("sequential_measurement_sample: every Born branch has zero probability");
    const double u = rng.uniform() * total;
    int pick = -1;
    double acc = 0.0;
    for (int a = 0; a < sd.size(); ++a) {
      if (p[a] == 0.0) continue;
      acc += p[a];
      pick = a;
      if (u < acc) break;
    }
    rec.outcome.push_back(pick);
    rec.values.push_back(sd.values[pick]);
    rec.probability *= p[pick];
    rho = sd.projectors[pick] * rho * sd.projectors[pick] / p[pick];
  }
  return rec;
}

}  // namespace

MeasurementRecord sequential_measurement_sample(const SEModel& m, const std::vector<double>& times,
                                                std::uint64_t seed, int alpha) {
  validate(m);
  require(alpha >= 0 && alpha < static_cast<int>(m.couplings.size()), "coupling index out of range");
  const SpectralDecomp sd = spectral_decompose(m.couplings[alpha].f);
  const Mat he = m.he;
  return measure_chain(sd, m.rho_e, times, seed, [&he](const Mat& rho, double dt) {
    if (dt == 0.0) return rho;
    const Mat u = unitary_exp(he, dt);
    return Mat(u * rho * u.adjoint());
  });
}

MeasurementRecord sequential_measurement_sample(const GklsEnvironment& env, const std::vector<double>& times,
                                                std::uint64_t seed) {
  const double scale = std::max(1.0, max_abs(env.l.matrix()));
  if (gkls_defect(env.l) > 1e-9 * scale)
    throw ValidationError("sequential_measurement_sample: L is not a GKLS generator");
  const SpectralDecomp sd = spectral_decompose(env.f);
  const SuperOperator& l = env.l;
  return measure_chain(sd, env.rho, times, seed, [&l](const Mat& rho, double dt) {
    if (dt == 0.0) return rho;
    return matrix_exp(l * cplx(dt)).apply(rho);
  });
}

std::vector<MeasurementRecord> sequential_measurement_batch(const SEModel& m, const std::vector<double>& times,
                                                            std::uint64_t seed, int n, int threads, int alpha) {
  require(n >= 0, "sequential_measurement_batch: sample count must be >= 0");
  require(threads >= 1, "sequential_measurement_batch: threads must be >= 1");
  std::vector<MeasurementRecord> out(static_cast<size_t>(n));
  const int nt = std::min(threads, std::max(1, n));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(static_cast<size_t>(nt));
  for (int w = 0; w < nt; ++w)
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += nt)
          out[static_cast<size_t>(i)] =
              sequential_measurement_sample(m, times, derive_seed(seed, static_cast<std::uint64_t>(i)), alpha);
      } catch (...) {
        errs[static_cast<size_t>(w)] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace openqs
