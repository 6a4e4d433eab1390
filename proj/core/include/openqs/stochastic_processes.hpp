#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace openqs {

// Symmetric random telegraph noise, values +-1, switching rate w,
// P(r, t) = (1 + p r e^{-2wt}) / 2.
struct RtnSpec {
  double w = 1.0;
  double p = 0.0;
};

// Two-state Markov process with rate w_plus into +1 and w_minus into -1.
struct AsymTelegraphSpec {
  double w_plus = 1.0;
  double w_minus = 1.0;
  double p = 0.0;
};

// G(t) = sum_i R_i(t) / sqrt(N) over independent zero-mean copies of base.
struct GaussSumSpec {
  RtnSpec base;
  int n_components = 1;
};

using ProcessSpec = std::variant<RtnSpec, AsymTelegraphSpec, GaussSumSpec>;

void validate(const RtnSpec& s);
void validate(const AsymTelegraphSpec& s);
void validate(const GaussSumSpec& s);
void validate(const ProcessSpec& s);
std::string process_name(const ProcessSpec& s);

// A sampled path. Between grid points the value is held constant (zero-order hold).
struct Trajectory {
  std::vector<double> grid;
  std::vector<double> values;
  std::uint64_t seed = 0;

  double at(double t) const;
};

std::vector<double> uniform_grid(double t_max, double dt);

// ---------------------------------------------------------------- RNG
// Stream generator is std::mt19937_64; every trajectory gets its own seed
// derive_seed(base, index) built from the SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  // 53-bit uniform in [0, 1)
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

// ---------------------------------------------------------------- exact statistics
using Point = std::pair<int, double>;  // (r, t)

double rtn_p1(const RtnSpec& s, int r, double t);
double rtn_mean(const RtnSpec& s, double t);
// points ordered by strictly decreasing time
double rtn_joint(const RtnSpec& s, const std::vector<Point>& points);
// times ordered decreasing, k = times.size()
double rtn_moment(const RtnSpec& s, const std::vector<double>& times);
double rtn_autocorrelation(const RtnSpec& s, double t1, double t2);

// rows: r in {+1, -1}; columns: previous value r' in {+1, -1}
Eigen::Matrix2d asym_conditional(const AsymTelegraphSpec& s, double t);
Eigen::Vector2d asym_marginal(const AsymTelegraphSpec& s, double t);
double asym_joint(const AsymTelegraphSpec& s, const std::vector<Point>& points);
double asym_mean(const AsymTelegraphSpec& s, double t);
double asym_stationary_plus(const AsymTelegraphSpec& s);

// Moment/cumulant providers take times in decreasing order.
using MomentFn = std::function<double(const std::vector<double>&)>;
using CumulantFn = std::function<double(const std::vector<double>&)>;

CumulantFn cumulants_up_to_4(MomentFn moments);
MomentFn moments_from_cumulants(CumulantFn cumulants);
MomentFn exact_moments(const ProcessSpec& s);
CumulantFn exact_cumulants(const ProcessSpec& s);
double process_mean(const ProcessSpec& s, double t);
bool is_zero_mean(const ProcessSpec& s);

// ---------------------------------------------------------------- sampling
Trajectory sample_rtn(const RtnSpec& s, const std::vector<double>& grid, std::uint64_t seed);
Trajectory sample_asym(const AsymTelegraphSpec& s, const std::vector<double>& grid, std::uint64_t seed);
Trajectory sample_gauss_sum(const GaussSumSpec& s, const std::vector<double>& grid, std::uint64_t seed);
Trajectory sample(const ProcessSpec& s, const std::vector<double>& grid, std::uint64_t seed);

// a + b F(t) pointwise; e.g. a = (r+ + r-)/2, b = (r+ - r-)/2 maps RTN values onto {r-, r+}
Trajectory affine(const Trajectory& tr, double a, double b);

// In-place variants for hot loops; values is resized to grid.size().
void sample_rtn_into(const RtnSpec& s, const std::vector<double>& grid, Rng& rng, std::vector<double>& values);
void sample_into(const ProcessSpec& s, const std::vector<double>& grid, std::uint64_t seed,
                 std::vector<double>& values);

}  // namespace openqs
