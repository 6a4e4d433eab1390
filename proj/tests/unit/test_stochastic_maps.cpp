#include <openqs/stochastic_maps.hpp>

#include "helpers.hpp"

using namespace openqs;
using namespace testutil;

namespace {

// RTN-averaged map from the joint (system, telegraph) master equation:
// d rho_r / dt = -i [h0 + lambda r v, rho_r] + w (rho_{-r} - rho_r).
SuperOperator rtn_joint_map(const StochasticHamiltonian& h, double t) {
  const auto s = std::get<RtnSpec>(h.process);
  const int d = static_cast<int>(h.h0.rows());
  const int dd = d * d;
  auto b = ketbra_basis(d);
  Mat big = Mat::Zero(2 * dd, 2 * dd);
  for (int k = 0; k < 2; ++k) {
    const double r = k == 0 ? 1.0 : -1.0;
    big.block(k * dd, k * dd, dd, dd) = cplx(0, -1) * commutator_super(h.h0 + h.lambda * r * h.v, b).matrix() -
                                        s.w * Mat::Identity(dd, dd);
    big.block(k * dd, (1 - k) * dd, dd, dd) = s.w * Mat::Identity(dd, dd);
  }
  Mat e = matrix_exp(Mat(t * big));
  Mat out = Mat::Zero(dd, dd);
  for (int k = 0; k < 2; ++k)
    for (int j = 0; j < 2; ++j) {
      const double pj = 0.5 * (1.0 + (j == 0 ? s.p : -s.p));
      out += pj * e.block(k * dd, j * dd, dd, dd);
    }
  return SuperOperator(b, out);
}

StochasticHamiltonian rotating_qubit(double lambda, RtnSpec s) {
  return {0.5 * sigma_z(), 0.5 * sigma_x(), lambda, s};
}

}  // namespace

TEST_CASE("coherence_rtn examples") {
  RtnSpec s{0.8, 0.0};
  CHECK(std::abs(coherence_rtn(s, 0.0, 3.0) - 1.0) < 1e-15);
  for (double t : {0.1, 1.0, 4.0})
    CHECK(std::abs(coherence_rtn(s, 0.8, t) - std::exp(-0.8 * t) * (1 + 0.8 * t)) < 1e-12);
  // oscillating regime, bounded by the e^{-wt} envelope times a constant
  const double lam = 10.0;
  double maxr = 0.0;
  bool sign_change = false;
  for (int i = 1; i <= 400; ++i) {
    const double t = 0.01 * i;
    const cplx w = coherence_rtn(s, lam, t);
    maxr = std::max(maxr, std::abs(w) * std::exp(0.8 * t));
    if (i > 1 && w.real() * coherence_rtn(s, lam, t - 0.01).real() < 0) sign_change = true;
  }
  CHECK(sign_change);
  CHECK(maxr < 1.1);

  for (double w : {0.1, 1.0, 3.0})
    for (double lam2 : {0.0, 0.3, 1.0, 2.9, 7.0})
      for (double p : {-0.9, 0.0, 0.5, 1.0})
        for (int i = 0; i <= 50; ++i) CHECK(std::abs(coherence_rtn({w, p}, lam2, 0.1 * i)) <= 1.0 + 1e-12);
}

TEST_CASE("dephasing_map examples") {
  RtnSpec s{0.5, 0.2};
  const double lam = 1.7, t = 1.3;
  auto m = dephasing_map(0.5 * sigma_z(), lam, rtn_gap_coherence(s, t));
  const cplx w = coherence_rtn(s, lam, t);
  CHECK(dist(m.matrix(), diag({1.0, 1.0, std::conj(w), w})) < 1e-14);
  CHECK(std::abs(coherence_element(m, 1, 0) - w) < 1e-15);

  auto id = dephasing_map(identity(3) * 0.4, lam, rtn_gap_coherence(s, t));
  CHECK(dist(id, SuperOperator::identity(3)) < 1e-15);

  auto late = dephasing_map(0.5 * sigma_z(), lam, rtn_gap_coherence(s, 60.0));
  Mat out = late.apply(plus_state());
  CHECK(std::abs(out(0, 1)) < 1e-12);
  CHECK(std::abs(out(0, 0) - 0.5) < 1e-15);
}

TEST_CASE("sample average with a deterministic field is one unitary map") {
  StochasticHamiltonian h{0.5 * sigma_z(), 0.5 * sigma_x(), 0.9, RtnSpec{0.0, 1.0}};
  IntegratorCfg cfg{Method::rk4, 1e-2};
  auto avg = sample_average_map(h, 2.0, cfg, {50, 4, 1});
  Mat u = unitary_exp(h.h0 + h.lambda * h.v, 2.0);
  CHECK(dist(avg, lift_unitary(u)) < 1e-9);
}

TEST_CASE("sample average coherence matches the RTN closed form") {
  RtnSpec s{1.0, 0.3};
  StochasticHamiltonian h{Mat::Zero(2, 2), 0.5 * sigma_z(), 1.4, s};
  const long n = 20000;
  auto maps = sample_average_series(h, {0.5, 1.0, 2.0}, {Method::rk4, 1e-2}, {n, 11, 0});
  int k = 0;
  for (double t : {0.5, 1.0, 2.0}) {
    const cplx w = coherence_rtn(s, 1.4, t);
    const cplx got = coherence_element(maps[k++], 1, 0);
    CHECK(std::abs(got - w) < 4 * std::sqrt((1 - std::norm(w)) / n) + 1e-4);
  }
}

TEST_CASE("sample average is trace and positivity preserving") {
  auto h = rotating_qubit(1.5, {0.7, 0.2});
  auto avg = sample_average_map(h, 2.0, {Method::crank_nicolson, 1e-2}, {2000, 3, 0});
  std::mt19937_64 rng(31);
  for (int i = 0; i < 100; ++i) {
    Mat rho = random_density(2, rng);
    Mat out = avg.apply(rho);
    CHECK(std::abs(out.trace() - cplx(1.0)) < 1e-12);
    CHECK(is_density(out, 1e-10));
  }
  CHECK(min_choi_eigenvalue(avg) > -1e-10);
}

TEST_CASE("sample average converges at rate 1/sqrt(N)") {
  RtnSpec s{1.0, 0.0};
  StochasticHamiltonian h{Mat::Zero(2, 2), 0.5 * sigma_z(), 2.0, s};
  std::vector<double> ts;
  for (int i = 1; i <= 20; ++i) ts.push_back(0.1 * i);
  IntegratorCfg cfg{Method::rk4, 0.02};
  std::vector<double> logn, loge;
  for (long n : {200L, 800L, 3200L, 12800L}) {
    double acc = 0.0;
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
      auto maps = sample_average_series(h, ts, cfg, {n, 1000 + seed, 0});
      for (size_t i = 0; i < ts.size(); ++i) acc += std::norm(coherence_element(maps[i], 1, 0) - coherence_rtn(s, 2.0, ts[i]));
    }
    logn.push_back(std::log(double(n)));
    loge.push_back(0.5 * std::log(acc / (12.0 * ts.size())));
  }
  double mx = 0, my = 0;
  for (size_t i = 0; i < logn.size(); ++i) mx += logn[i], my += loge[i];
  mx /= logn.size();
  my /= logn.size();
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < logn.size(); ++i) sxy += (logn[i] - mx) * (loge[i] - my), sxx += (logn[i] - mx) * (logn[i] - mx);
  const double slope_fit = sxy / sxx;
  MESSAGE("convergence slope " << slope_fit);
  CHECK(near(slope_fit, -0.5, 0.1));
}

TEST_CASE("joint-process oracle agrees with the sample average") {
  auto h = rotating_qubit(1.2, {0.6, 0.4});
  auto ex = rtn_joint_map(h, 1.5);
  auto avg = sample_average_map(h, 1.5, {Method::rk4, 1e-2}, {20000, 8, 0});
  CHECK(dist(avg, ex) < 0.02);
}

TEST_CASE("super-cumulant generators") {
  auto h = rotating_qubit(0.8, {1.0, 0.0});
  IntegratorCfg cfg{Method::rk4, 1e-2};
  auto g1 = supercumulant_generator(h, {1}, 2.0, cfg);
  for (double s : {0.0, 0.7, 1.9}) CHECK(max_abs(g1(s)) == 0.0);

  // order 2 against direct quadrature of -lambda^2 int_0^s C(s,u) [V_I(s), [V_I(u), .]] du
  RtnSpec sp{0.7, 0.5};
  StochasticHamiltonian hb{0.5 * 1.3 * sigma_z(), 0.5 * sigma_x(), 0.9, sp};
  auto g2 = supercumulant_generator(hb, {2}, 2.0, {Method::rk4, 1e-3});
  auto vi = [&](double s) { return commutator_super(unitary_exp(hb.h0, -s) * hb.v * unitary_exp(hb.h0, s)).matrix(); };
  for (double s : {0.5, 1.25, 2.0}) {
    const int n = 4000;
    Mat acc = Mat::Zero(4, 4);
    for (int i = 0; i <= n; ++i) {
      const double u = s * i / n;
      const double wq = (i == 0 || i == n) ? 1.0 / 3 : (i % 2 ? 4.0 / 3 : 2.0 / 3);
      acc += (wq * s / n) * rtn_autocorrelation(sp, s, u) * vi(u);
    }
    Mat expect = -0.81 * vi(s) * acc + cplx(0, -0.9) * rtn_mean(sp, s) * vi(s);
    CHECK(dist(g2(s), expect) < 1e-6);
  }
}

TEST_CASE("truncated maps") {
  auto h = rotating_qubit(0.8, {1.0, 0.0});
  IntegratorCfg cfg{Method::rk4, 1e-2};
  CHECK(dist(truncated_map(h, {2}, 0.0, cfg), SuperOperator::identity(2)) < 1e-15);

  // commuting case: exp of the double integral of C^(2)
  RtnSpec s{0.9, 0.0};
  StochasticHamiltonian dp{Mat::Zero(2, 2), 0.5 * sigma_z(), 1.1, s};
  const double t = 1.7;
  const double dbl = t / (2 * s.w) - (1 - std::exp(-2 * s.w * t)) / (4 * s.w * s.w);
  auto m2 = truncated_map(dp, {2}, t, cfg);
  const cplx w2 = std::exp(-1.1 * 1.1 * dbl);
  // cumulative trapezoid on the h/2 grid: second order in h
  const double q1 = std::abs(coherence_element(m2, 1, 0) - w2);
  const double q2 = std::abs(coherence_element(truncated_map(dp, {2}, t, {Method::rk4, 5e-3}), 1, 0) - w2);
  CHECK(q1 < 5e-6);
  CHECK(near(slope(q1, q2), 2.0, 0.05));
  auto mg = truncated_map(StochasticHamiltonian{dp.h0, dp.v, dp.lambda, GaussSumSpec{{0.9, 0.0}, 5}}, {2}, t, cfg);
  CHECK(dist(mg, m2) < 1e-12);

  auto series = truncated_map_series(h, {2}, {0.5, 1.0, 2.0}, cfg);
  CHECK(dist(series[2], truncated_map(h, {2}, 2.0, cfg)) < 1e-12);

  CHECK_THROWS_AS(truncated_map(h, {3}, 1.0, cfg), ValidationError);
  auto biased = rotating_qubit(0.8, {1.0, 0.3});
  CHECK_THROWS_AS(truncated_map(biased, {4}, 1.0, cfg), ValidationError);
}

TEST_CASE("truncation error scales with the coupling order") {
  const double t = 2.0;
  IntegratorCfg cfg{Method::rk4, 5e-3};
  auto err = [&](double lam, int order) {
    auto h = rotating_qubit(lam, {1.0, 0.0});
    return dist(truncated_map(h, {order}, t, cfg), rtn_joint_map(h, t));
  };
  const double e2a = err(0.4, 2), e2b = err(0.2, 2);
  MESSAGE("order 2 errors " << e2a << " " << e2b);
  CHECK(near(slope(e2a, e2b), 4.0, 0.15));
  const double e4a = err(0.4, 4), e4b = err(0.2, 4);
  MESSAGE("order 4 errors " << e4a << " " << e4b);
  CHECK(e4a < 0.1 * e2a);
  CHECK(slope(e4a, e4b) > 5.0);
}

TEST_CASE("order 2 is closer for a Gaussian-like field") {
  const double lam = 2.5, t = 2.0;
  IntegratorCfg cfg{Method::rk4, 2e-2};
  StochasticHamiltonian r1{Mat::Zero(2, 2), 0.5 * sigma_z(), lam, RtnSpec{1.0, 0.0}};
  StochasticHamiltonian g32{Mat::Zero(2, 2), 0.5 * sigma_z(), lam, GaussSumSpec{{1.0, 0.0}, 32}};
  SampleAverageOptions opt{20000, 5, 0};
  const double d1 = dist(truncated_map(r1, {2}, t, cfg), sample_average_map(r1, t, cfg, opt));
  const double d32 = dist(truncated_map(g32, {2}, t, cfg), sample_average_map(g32, t, cfg, opt));
  MESSAGE("N=1 " << d1 << " N=32 " << d32);
  CHECK(d32 < 0.5 * d1);
}

TEST_CASE("entropy monotonicity") {
  std::mt19937_64 rng(12);
  Mat u = random_unitary(2, rng);
  Mat rho = random_density(2, rng);
  auto uni = lift_unitary(u);
  CHECK(entropy_monotonicity_check(uni, rho));
  CHECK(std::abs(entropy(uni.apply(rho)) - entropy(rho)) < 1e-12);

  auto deph = dephasing_map(0.5 * sigma_z(), 2.0, rtn_gap_coherence({1.0, 0.0}, 40.0));
  CHECK(entropy_monotonicity_check(deph, plus_state()));
  CHECK(entropy(deph.apply(plus_state())) == doctest::Approx(std::log(2.0)).epsilon(1e-10));
  CHECK(entropy_monotonicity_check(deph, 0.5 * identity(2)));
  CHECK(entropy(deph.apply(0.5 * identity(2))) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
}
