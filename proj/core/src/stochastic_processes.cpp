#include "openqs/stochastic_processes.hpp"

#include <algorithm>
#include <cmath>

#include "openqs/errors.hpp"

namespace openqs {

void validate(const RtnSpec& s) {
  require(std::isfinite(s.w) && s.w >= 0.0, "RTN rate w must be >= 0");
  require(std::isfinite(s.p) && s.p >= -1.0 && s.p <= 1.0, "RTN bias p must lie in [-1, 1]");
}

void validate(const AsymTelegraphSpec& s) {
  require(std::isfinite(s.w_plus) && s.w_plus >= 0.0, "w_plus must be >= 0");
  require(std::isfinite(s.w_minus) && s.w_minus >= 0.0, "w_minus must be >= 0");
  require(std::isfinite(s.p) && s.p >= -1.0 && s.p <= 1.0, "bias p must lie in [-1, 1]");
}

void validate(const GaussSumSpec& s) {
  validate(s.base);
  require(s.base.p == 0.0, "gauss-sum components must have p = 0");
  require(s.n_components >= 1, "gauss-sum needs n_components >= 1");
}

void validate(const ProcessSpec& s) {
  std::visit([](const auto& x) { validate(x); }, s);
}

std::string process_name(const ProcessSpec& s) {
  switch (s.index()) {
    case 0: return "rtn";
    case 1: return "asym";
    default: return "gauss-sum";
  }
}

double Trajectory::at(double t) const {
  if (grid.empty()) return 0.0;
  // index of the last grid point <= t, with a tolerance for rounding on the grid
  auto it = std::upper_bound(grid.begin(), grid.end(), t + 1e-12);
  if (it == grid.begin()) return values.front();
  return values[static_cast<size_t>(std::distance(grid.begin(), it) - 1)];
}

std::vector<double> uniform_grid(double t_max, double dt) {
  require(dt > 0.0 && t_max >= 0.0, "uniform_grid: need dt > 0 and t_max >= 0");
  const long n = static_cast<long>(std::ceil(t_max / dt - 1e-9));
  std::vector<double> g(static_cast<size_t>(n) + 1);
  for (long i = 0; i <= n; ++i) g[static_cast<size_t>(i)] = std::min(t_max, i * dt);
  return g;
}

// ---------------------------------------------------------------- RNG

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(splitmix64(base) ^ (index * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL));
}

// ---------------------------------------------------------------- RTN

namespace {
void check_r(int r) { require(r == 1 || r == -1, "telegraph values must be +1 or -1"); }

void check_descending(const std::vector<Point>& pts) {
  for (size_t i = 0; i < pts.size(); ++i) {
    check_r(pts[i].first);
    require(pts[i].second >= 0.0, "times must be >= 0");
    if (i > 0) require(pts[i - 1].second > pts[i].second, "times must be strictly decreasing");
  }
}

void check_descending(const std::vector<double>& ts) {
  for (size_t i = 0; i < ts.size(); ++i) {
    require(ts[i] >= 0.0, "times must be >= 0");
    if (i > 0) require(ts[i - 1] >= ts[i], "times must be decreasing");
  }
}
}  // namespace

double rtn_p1(const RtnSpec& s, int r, double t) {
  check_r(r);
  return 0.5 * (1.0 + s.p * r * std::exp(-2.0 * s.w * t));
}

double rtn_mean(const RtnSpec& s, double t) { return s.p * std::exp(-2.0 * s.w * t); }

double rtn_joint(const RtnSpec& s, const std::vector<Point>& points) {
  require(!points.empty(), "rtn_joint needs at least one point");
  check_descending(points);
  double v = rtn_p1(s, points.back().first, points.back().second);
  for (size_t j = 0; j + 1 < points.size(); ++j) {
    const double dt = points[j].second - points[j + 1].second;
    v *= 0.5 * (1.0 + points[j].first * points[j + 1].first * std::exp(-2.0 * s.w * dt));
  }
  return v;
}

double rtn_moment(const RtnSpec& s, const std::vector<double>& times) {
  check_descending(times);
  const size_t k = times.size();
  double v = 1.0;
  for (size_t j = 0; j + 1 < k; j += 2) v *= std::exp(-2.0 * s.w * (times[j] - times[j + 1]));
  if (k % 2 == 1) v *= s.p * std::exp(-2.0 * s.w * times[k - 1]);
  return v;
}

double rtn_autocorrelation(const RtnSpec& s, double t1, double t2) {
  return std::exp(-2.0 * s.w * std::abs(t1 - t2)) - s.p * s.p * std::exp(-2.0 * s.w * (t1 + t2));
}

// ---------------------------------------------------------------- asymmetric telegraph

Eigen::Matrix2d asym_conditional(const AsymTelegraphSpec& s, double t) {
  const double wb = 0.5 * (s.w_plus + s.w_minus);
  Eigen::Matrix2d u;
  if (wb == 0.0) return Eigen::Matrix2d::Identity();
  const double e = std::exp(-2.0 * wb * t);
  u(0, 0) = s.w_plus + s.w_minus * e;
  u(0, 1) = s.w_plus * (1.0 - e);
  u(1, 0) = s.w_minus * (1.0 - e);
  u(1, 1) = s.w_minus + s.w_plus * e;
  return u / (2.0 * wb);
}

Eigen::Vector2d asym_marginal(const AsymTelegraphSpec& s, double t) {
  const Eigen::Vector2d p0(0.5 * (1.0 + s.p), 0.5 * (1.0 - s.p));
  return asym_conditional(s, t) * p0;
}

double asym_joint(const AsymTelegraphSpec& s, const std::vector<Point>& points) {
  require(!points.empty(), "asym_joint needs at least one point");
  check_descending(points);
  auto idx = [](int r) { return r == 1 ? 0 : 1; };
  double v = asym_marginal(s, points.back().second)(idx(points.back().first));
  for (size_t j = 0; j + 1 < points.size(); ++j) {
    const Eigen::Matrix2d u = asym_conditional(s, points[j].second - points[j + 1].second);
    v *= u(idx(points[j].first), idx(points[j + 1].first));
  }
  return v;
}

double asym_mean(const AsymTelegraphSpec& s, double t) {
  const Eigen::Vector2d p = asym_marginal(s, t);
  return p(0) - p(1);
}

double asym_stationary_plus(const AsymTelegraphSpec& s) {
  const double tot = s.w_plus + s.w_minus;
  if (tot == 0.0) return 0.5 * (1.0 + s.p);
  return s.w_plus / tot;
}

// ---------------------------------------------------------------- cumulants

namespace {

using Partition = std::vector<std::vector<int>>;

void partitions_rec(int i, int n, Partition& cur, std::vector<Partition>& out) {
  if (i == n) {
    out.push_back(cur);
    return;
  }
  for (size_t b = 0; b < cur.size(); ++b) {
    cur[b].push_back(i);
    partitions_rec(i + 1, n, cur, out);
    cur[b].pop_back();
  }
  cur.push_back({i});
  partitions_rec(i + 1, n, cur, out);
  cur.pop_back();
}

const std::vector<Partition>& partitions(int n) {
  static const std::vector<std::vector<Partition>> cache = [] {
    std::vector<std::vector<Partition>> c(5);
    for (int k = 0; k <= 4; ++k) {
      Partition cur;
      partitions_rec(0, k, cur, c[k]);
    }
    return c;
  }();
  return cache[static_cast<size_t>(n)];
}

std::vector<double> pick(const std::vector<double>& ts, const std::vector<int>& block) {
  std::vector<double> r;
  r.reserve(block.size());
  for (int i : block) r.push_back(ts[static_cast<size_t>(i)]);
  return r;
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

CumulantFn cumulants_up_to_4(MomentFn moments) {
  return [moments = std::move(moments)](const std::vector<double>& ts) {
    const int n = static_cast<int>(ts.size());
    require(n >= 1 && n <= 4, "cumulant order must be 1..4");
    double c = 0.0;
    for (const auto& part : partitions(n)) {
      const int b = static_cast<int>(part.size());
      double term = ((b - 1) % 2 == 0 ? 1.0 : -1.0) * factorial(b - 1);
      for (const auto& block : part) term *= moments(pick(ts, block));
      c += term;
    }
    return c;
  };
}

MomentFn moments_from_cumulants(CumulantFn cumulants) {
  return [cumulants = std::move(cumulants)](const std::vector<double>& ts) {
    const int n = static_cast<int>(ts.size());
    require(n >= 1 && n <= 4, "moment order must be 1..4");
    double m = 0.0;
    for (const auto& part : partitions(n)) {
      double term = 1.0;
      for (const auto& block : part) term *= cumulants(pick(ts, block));
      m += term;
    }
    return m;
  };
}

MomentFn exact_moments(const ProcessSpec& s) {
  validate(s);
  if (const auto* r = std::get_if<RtnSpec>(&s)) {
    return [spec = *r](const std::vector<double>& ts) { return rtn_moment(spec, ts); };
  }
  if (const auto* a = std::get_if<AsymTelegraphSpec>(&s)) {
    return [spec = *a](const std::vector<double>& ts) {
      check_descending(ts);
      // r(t)^2 = 1: a run of c equal times contributes r^(c mod 2)
      std::vector<double> kept;
      for (size_t i = 0; i < ts.size();) {
        size_t j = i;
        while (j < ts.size() && ts[j] == ts[i]) ++j;
        if ((j - i) % 2 == 1) kept.push_back(ts[i]);
        i = j;
      }
      const size_t k = kept.size();
      if (k == 0) return 1.0;
      double m = 0.0;
      std::vector<Point> pts(k);
      for (unsigned mask = 0; mask < (1u << k); ++mask) {
        double prod = 1.0;
        for (size_t i = 0; i < k; ++i) {
          const int r = ((mask >> i) & 1u) ? -1 : 1;
          pts[i] = {r, kept[i]};
          prod *= r;
        }
        m += prod * asym_joint(spec, pts);
      }
      return m;
    };
  }
  const auto g = std::get<GaussSumSpec>(s);
  return moments_from_cumulants(exact_cumulants(g));
}

CumulantFn exact_cumulants(const ProcessSpec& s) {
  validate(s);
  if (const auto* g = std::get_if<GaussSumSpec>(&s)) {
    const CumulantFn base = cumulants_up_to_4(exact_moments(ProcessSpec{g->base}));
    const double n = g->n_components;
    return [base, n](const std::vector<double>& ts) {
      const double k = static_cast<double>(ts.size());
      return std::pow(n, 1.0 - 0.5 * k) * base(ts);
    };
  }
  return cumulants_up_to_4(exact_moments(s));
}

double process_mean(const ProcessSpec& s, double t) {
  if (const auto* r = std::get_if<RtnSpec>(&s)) return rtn_mean(*r, t);
  if (const auto* a = std::get_if<AsymTelegraphSpec>(&s)) return asym_mean(*a, t);
  return 0.0;
}

bool is_zero_mean(const ProcessSpec& s) {
  if (const auto* r = std::get_if<RtnSpec>(&s)) return r->p == 0.0;
  if (const auto* a = std::get_if<AsymTelegraphSpec>(&s)) return a->w_plus == a->w_minus && a->p == 0.0;
  return true;
}

// ---------------------------------------------------------------- sampling

void sample_rtn_into(const RtnSpec& s, const std::vector<double>& grid, Rng& rng, std::vector<double>& values) {
  values.resize(grid.size());
  if (grid.empty()) return;
  double r = rng.uniform() < rtn_p1(s, 1, grid[0]) ? 1.0 : -1.0;
  values[0] = r;
  double last_dt = -1.0;
  double stay = 1.0;
  for (size_t i = 1; i < grid.size(); ++i) {
    const double dt = grid[i] - grid[i - 1];
    if (dt != last_dt) {
      stay = 0.5 * (1.0 + std::exp(-2.0 * s.w * dt));
      last_dt = dt;
    }
    if (!(rng.uniform() < stay)) r = -r;
    values[i] = r;
  }
}

namespace {
void check_grid(const std::vector<double>& grid) {
  for (size_t i = 0; i < grid.size(); ++i) {
    require(grid[i] >= 0.0, "grid must start at t >= 0");
    if (i > 0) require(grid[i] > grid[i - 1], "grid must be strictly increasing");
  }
}

void sample_asym_into(const AsymTelegraphSpec& s, const std::vector<double>& grid, Rng& rng,
                      std::vector<double>& values) {
  values.resize(grid.size());
  if (grid.empty()) return;
  int r = rng.uniform() < asym_marginal(s, grid[0])(0) ? 1 : -1;
  values[0] = r;
  double last_dt = -1.0;
  Eigen::Matrix2d u = Eigen::Matrix2d::Identity();
  for (size_t i = 1; i < grid.size(); ++i) {
    const double dt = grid[i] - grid[i - 1];
    if (dt != last_dt) {
      u = asym_conditional(s, dt);
      last_dt = dt;
    }
    const double p_plus = u(0, r == 1 ? 0 : 1);
    r = rng.uniform() < p_plus ? 1 : -1;
    values[i] = r;
  }
}

void sample_gauss_into(const GaussSumSpec& s, const std::vector<double>& grid, std::uint64_t seed,
                       std::vector<double>& values) {
  values.assign(grid.size(), 0.0);
  std::vector<double> comp;
  for (int c = 0; c < s.n_components; ++c) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    sample_rtn_into(s.base, grid, rng, comp);
    for (size_t i = 0; i < grid.size(); ++i) values[i] += comp[i];
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(s.n_components));
  for (double& v : values) v *= scale;
}
}  // namespace

void sample_into(const ProcessSpec& s, const std::vector<double>& grid, std::uint64_t seed,
                 std::vector<double>& values) {
  if (const auto* r = std::get_if<RtnSpec>(&s)) {
    Rng rng(seed);
    sample_rtn_into(*r, grid, rng, values);
  } else if (const auto* a = std::get_if<AsymTelegraphSpec>(&s)) {
    Rng rng(seed);
    sample_asym_into(*a, grid, rng, values);
  } else {
    sample_gauss_into(std::get<GaussSumSpec>(s), grid, seed, values);
  }
}

Trajectory sample_rtn(const RtnSpec& s, const std::vector<double>& grid, std::uint64_t seed) {
  return sample(ProcessSpec{s}, grid, seed);
}

Trajectory sample_asym(const AsymTelegraphSpec& s, const std::vector<double>& grid, std::uint64_t seed) {
  return sample(ProcessSpec{s}, grid, seed);
}

Trajectory sample_gauss_sum(const GaussSumSpec& s, const std::vector<double>& grid, std::uint64_t seed) {
  return sample(ProcessSpec{s}, grid, seed);
}

Trajectory affine(const Trajectory& tr, double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b)) throw ValidationError("affine: non-finite coefficients");
  Trajectory out = tr;
  for (double& x : out.values) x = a + b * x;
  return out;
}

Trajectory sample(const ProcessSpec& s, const std::vector<double>& grid, std::uint64_t seed) {
  validate(s);
  check_grid(grid);
  Trajectory tr;
  tr.grid = grid;
  tr.seed = seed;
  sample_into(s, grid, seed, tr.values);
  return tr;
}

}  // namespace openqs
