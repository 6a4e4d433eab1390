#include "openqs/propagators.hpp"

#include <cmath>

namespace openqs {

Method parse_method(const std::string& name) {
  if (name == "euler") return Method::euler;
  if (name == "rk4") return Method::rk4;
  if (name == "crank_nicolson" || name == "cn" || name == "crank-nicolson") return Method::crank_nicolson;
  throw ValidationError("unknown integrator method: " + name);
}

std::string to_string(Method m) {
  switch (m) {
    case Method::euler: return "euler";
    case Method::rk4: return "rk4";
    case Method::crank_nicolson: return "crank_nicolson";
  }
  return "?";
}

GeneratorFn constant_generator(Mat g) {
  const int d = static_cast<int>(g.rows());
  return GeneratorFn{d, [g = std::move(g)](double, Mat& out) { out = g; }};
}

GeneratorFn hamiltonian_generator(int dim, std::function<Mat(double)> h) {
  return GeneratorFn{dim, [h = std::move(h)](double t, Mat& out) { out = -I * h(t); }};
}

GeneratorFn liouvillian_generator(int dim, std::function<Mat(double)> h) {
  return GeneratorFn{dim * dim,
                     [h = std::move(h)](double t, Mat& out) { out = -I * commutator_super(h(t)).matrix(); }};
}

Stepper::Stepper(const GeneratorFn& g, Method m) : g_(g), m_(m) {}

void Stepper::step(Mat& x, double t, double h) {
  switch (m_) {
    case Method::euler: {
      g_.eval(t, g0_);
      tmp_.noalias() = g0_ * x;
      x += h * tmp_;
      return;
    }
    case Method::rk4: {
      g_.eval(t, g0_);
      g_.eval(t + 0.5 * h, g1_);
      g_.eval(t + h, g2_);
      r1_.noalias() = g0_ * x;
      tmp_ = x + (0.5 * h) * r1_;
      r2_.noalias() = g1_ * tmp_;
      tmp_ = x + (0.5 * h) * r2_;
      r3_.noalias() = g1_ * tmp_;
      tmp_ = x + h * r3_;
      r4_.noalias() = g2_ * tmp_;
      x += (h / 6.0) * (r1_ + 2.0 * r2_ + 2.0 * r3_ + r4_);
      return;
    }
    case Method::crank_nicolson: {
      g_.eval(t, g0_);
      g_.eval(t + h, g1_);
      const Eigen::Index n = g0_.rows();
      a_ = Mat::Identity(n, n) - (0.5 * h) * g1_;
      b_ = Mat::Identity(n, n) + (0.5 * h) * g0_;
      Eigen::PartialPivLU<Mat> lu(a_);
      if (!(lu.rcond() > 1e-14)) throw NumericalError("Crank-Nicolson step: singular linear system");
      tmp_.noalias() = b_ * x;
      x = lu.solve(tmp_);
      return;
    }
  }
}

namespace {

void check_cfg(const IntegratorCfg& cfg) {
  if (!(cfg.h > 0.0) || !std::isfinite(cfg.h)) throw ValidationError("integrator step h must be > 0");
}

// Advances x from ta to tb with steps of at most h.
void advance(Stepper& st, Mat& x, double ta, double tb, double h,
             const std::function<void(double, const Mat&)>* obs) {
  const double span = tb - ta;
  if (span <= 0.0) return;
  const long n = std::max(1L, static_cast<long>(std::ceil(span / h - 1e-9)));
  for (long j = 0; j < n; ++j) {
    const double t = ta + j * h;
    const double hj = (j == n - 1) ? (tb - t) : h;
    st.step(x, t, hj);
    if (obs) (*obs)(t + hj, x);
  }
}

}  // namespace

Mat propagate_from(const GeneratorFn& g, const Mat& x0, double t0, double t1, const IntegratorCfg& cfg) {
  check_cfg(cfg);
  if (t1 < t0) throw ValidationError("propagate: t1 must be >= t0");
  Mat x = x0;
  Stepper st(g, cfg.method);
  advance(st, x, t0, t1, cfg.h, nullptr);
  return x;
}

Mat propagate(const GeneratorFn& g, double t0, double t1, const IntegratorCfg& cfg) {
  return propagate_from(g, Mat::Identity(g.dim, g.dim), t0, t1, cfg);
}

std::vector<Mat> propagate_to(const GeneratorFn& g, double t0, const std::vector<double>& outputs,
                              const IntegratorCfg& cfg) {
  check_cfg(cfg);
  std::vector<Mat> res;
  res.reserve(outputs.size());
  Mat x = Mat::Identity(g.dim, g.dim);
  Stepper st(g, cfg.method);
  double t = t0;
  for (double out : outputs) {
    if (out < t) throw ValidationError("propagate_to: output times must be increasing and >= t0");
    advance(st, x, t, out, cfg.h, nullptr);
    t = out;
    res.push_back(x);
  }
  return res;
}

void propagate_observed(const GeneratorFn& g, double t0, double t1, const IntegratorCfg& cfg,
                        const std::function<void(double, const Mat&)>& obs) {
  check_cfg(cfg);
  if (t1 < t0) throw ValidationError("propagate: t1 must be >= t0");
  Mat x = Mat::Identity(g.dim, g.dim);
  obs(t0, x);
  Stepper st(g, cfg.method);
  advance(st, x, t0, t1, cfg.h, &obs);
}

double compose_check(const GeneratorFn& g, double t0, double tm, double t1, const IntegratorCfg& cfg) {
  if (!(t0 <= tm && tm <= t1)) throw ValidationError("compose_check: need t0 <= tm <= t1");
  const Mat full = propagate(g, t0, t1, cfg);
  const Mat first = propagate(g, t0, tm, cfg);
  const Mat second = propagate(g, tm, t1, cfg);
  return max_abs(full - second * first);
}

SuperOperator lift_unitary(const Mat& u, double tol) {
  if (!is_unitary(u, tol)) throw ValidationError("lift_unitary: operator is not unitary");
  return left_right_super(u, u.adjoint());
}

GeneratorFn interaction_picture(const GeneratorFn& v, const Mat& h0) {
  require(is_hermitian(h0, 1e-12 * std::max(1.0, max_abs(h0))), "interaction_picture: h0 must be Hermitian");
  require(h0.rows() == v.dim, "interaction_picture: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (h0 + h0.adjoint())));
  const Mat w = es.eigenvectors();
  const RVec e = es.eigenvalues();
  return GeneratorFn{v.dim, [v, w, e](double t, Mat& out) {
                       Mat vt;
                       v.eval(t, vt);
                       Mat x = w.adjoint() * vt * w;
                       for (Eigen::Index a = 0; a < x.rows(); ++a)
                         for (Eigen::Index b = 0; b < x.cols(); ++b) x(a, b) *= std::exp(I * (t * (e(a) - e(b))));
                       out = w * x * w.adjoint();
                     }};
}

}  // namespace openqs
