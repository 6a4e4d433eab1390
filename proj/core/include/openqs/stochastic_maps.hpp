#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "openqs/linalg.hpp"
#include "openqs/propagators.hpp"
#include "openqs/stochastic_processes.hpp"

namespace openqs {

// H[F](t) = h0 + lambda F(t) v
struct StochasticHamiltonian {
  Mat h0;
  Mat v;
  double lambda = 0.0;
  ProcessSpec process = RtnSpec{};
};

void validate(const StochasticHamiltonian& h);

// mean of exp(+i lambda int_0^t R(s) ds) for RTN R
cplx coherence_rtn(const RtnSpec& s, double lambda, double t);

// Pure dephasing: <n|U rho|m> = rho_nm W_nm with W_nm = coherence(lambda (v_n - v_m)),
// where coherence(g) is the mean of exp(-i g int F). Built in the eigenbasis of v and
// returned in the ket-bra basis of the original space.
SuperOperator dephasing_map(const Mat& v, double lambda, const std::function<cplx(double)>& coherence);

// coherence(g) for an RTN process at time t, for use with dephasing_map
std::function<cplx(double)> rtn_gap_coherence(const RtnSpec& s, double t);

struct SampleAverageOptions {
  long n_samples = 1000;
  std::uint64_t seed = 0;
  int threads = 0;  // 0: hardware concurrency
};

// Arithmetic mean of lifted trajectory unitaries, lab frame.
SuperOperator sample_average_map(const StochasticHamiltonian& h, double t, const IntegratorCfg& cfg,
                                 const SampleAverageOptions& opt);
// All output times from one set of trajectories.
std::vector<SuperOperator> sample_average_series(const StochasticHamiltonian& h, const std::vector<double>& times,
                                                 const IntegratorCfg& cfg, const SampleAverageOptions& opt);

// Trajectory grid for a given integrator: spacing h/2 for rk4, h otherwise.
double trajectory_spacing(const IntegratorCfg& cfg);

struct SuperCumulantOptions {
  int order = 2;              // 1, 2 or 4
  int order4_nodes = 48;      // quadrature nodes on [0, t_max] for the fourth-order term
};

// s -> sum_{k <= order} (-i lambda)^k C^(k)(s), interaction picture w.r.t. h0.
// Tabulated on the propagator grid up to t_max; nested integrals by cumulative trapezoid.
GeneratorFn supercumulant_generator(const StochasticHamiltonian& h, const SuperCumulantOptions& opt,
                                    double t_max, const IntegratorCfg& cfg);

// Interaction-picture truncated map, i.e. the time-ordered exponential of the generator above.
SuperOperator truncated_map_interaction(const StochasticHamiltonian& h, const SuperCumulantOptions& opt, double t,
                                        const IntegratorCfg& cfg);
// Same map brought to the lab frame: lift(e^{-i t h0}) times the interaction-picture map.
SuperOperator truncated_map(const StochasticHamiltonian& h, const SuperCumulantOptions& opt, double t,
                            const IntegratorCfg& cfg);
std::vector<SuperOperator> truncated_map_series(const StochasticHamiltonian& h, const SuperCumulantOptions& opt,
                                                const std::vector<double>& times, const IntegratorCfg& cfg);

// S(map(rho)) >= S(rho) - tol
bool entropy_monotonicity_check(const SuperOperator& map, const Mat& rho, double tol = 1e-10);

// Multiplier of the |n><m| slot: <n| map(|n><m|) |m>.
cplx coherence_element(const SuperOperator& map, int n, int m);

}  // namespace openqs
