#pragma once

#include <functional>
#include <string>
#include <vector>

#include "openqs/linalg.hpp"

namespace openqs {

enum class Method { euler, rk4, crank_nicolson };

Method parse_method(const std::string& name);
std::string to_string(Method m);

struct IntegratorCfg {
  Method method = Method::rk4;
  double h = 1e-3;
};

// Right-hand side of dX/dt = G(t) X. eval writes G(t) into its second argument.
struct GeneratorFn {
  int dim = 0;
  std::function<void(double, Mat&)> eval;

  Mat operator()(double t) const {
    Mat g;
    eval(t, g);
    return g;
  }
};

GeneratorFn constant_generator(Mat g);
// t -> -i H(t)
GeneratorFn hamiltonian_generator(int dim, std::function<Mat(double)> h);
// t -> -i [H(t), .] as a ket-bra superoperator matrix
GeneratorFn liouvillian_generator(int dim, std::function<Mat(double)> h);

// Time-ordered exponential from identity at t0. Fixed step h, last step shortened.
Mat propagate(const GeneratorFn& g, double t0, double t1, const IntegratorCfg& cfg);

// Same, starting from x0 instead of the identity.
Mat propagate_from(const GeneratorFn& g, const Mat& x0, double t0, double t1, const IntegratorCfg& cfg);

// One pass over increasing output times; steps are cut so every output is hit exactly.
std::vector<Mat> propagate_to(const GeneratorFn& g, double t0, const std::vector<double>& outputs,
                              const IntegratorCfg& cfg);

// Calls obs(t, X) at t0 and after every step.
void propagate_observed(const GeneratorFn& g, double t0, double t1, const IntegratorCfg& cfg,
                        const std::function<void(double, const Mat&)>& obs);

// max |U(t1,t0) - U(t1,tm) U(tm,t0)|
double compose_check(const GeneratorFn& g, double t0, double tm, double t1, const IntegratorCfg& cfg);

SuperOperator lift_unitary(const Mat& u, double tol = 1e-8);

// t -> e^{i t h0} v(t) e^{-i t h0}
GeneratorFn interaction_picture(const GeneratorFn& v, const Mat& h0);

// Reusable single-step integrator. Buffers live in the object, so one
// instance must not be shared between threads.
class Stepper {
 public:
  Stepper(const GeneratorFn& g, Method m);
  // advances x from t to t + h in place
  void step(Mat& x, double t, double h);

 private:
  const GeneratorFn& g_;
  Method m_;
  Mat g0_, g1_, g2_, r1_, r2_, r3_, r4_, tmp_, a_, b_;
};

}  // namespace openqs
