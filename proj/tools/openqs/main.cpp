// openqs command-line front end.
//
// Exit codes: 0 success, 2 invalid input, 3 numerical failure.
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <openqs/master_equations.hpp>
#include <openqs/open_quantum.hpp>
#include <openqs/propagators.hpp>
#include <openqs/serialize.hpp>
#include <openqs/stochastic_maps.hpp>
#include <openqs/stochastic_processes.hpp>
#include <openqs/surrogate_fields.hpp>

#include "output.hpp"

using namespace openqs;
using namespace openqs::cli;

namespace {

struct Global {
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;
  std::string format;  // empty: scenario default
};

int resolve_threads(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("OPENQS_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw ValidationError("OPENQS_THREADS must be a positive integer");
    return static_cast<int>(v);
  }
  return 0;
}

std::vector<double> output_times(double t_max, int points) {
  require(t_max > 0.0 && std::isfinite(t_max), "--t-max must be > 0");
  require(points >= 2, "--points must be >= 2");
  std::vector<double> t(static_cast<size_t>(points));
  for (int i = 0; i < points; ++i) t[i] = t_max * i / (points - 1);
  return t;
}

// Rows with named columns, written as CSV or as JSON {columns, rows}.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void write(const Global& g) const {
    Sink sink(g.out);
    if (g.format.empty() || g.format == "csv") {
      Csv csv(sink.os(), columns);
      for (const auto& r : rows) csv.row(r);
    } else {
      write_json(sink.os(), json{{"columns", columns}, {"rows", rows}});
    }
  }
};

void emit_json(const Global& g, const json& j) {
  require(g.format.empty() || g.format == "json", "this scenario emits JSON only (--format json)");
  Sink sink(g.out);
  write_json(sink.os(), j);
}

// ---------------------------------------------------------------- propagate
struct PropagateArgs {
  std::string hamiltonian;
  double mu = 1.0, omega = 1.0;
  std::string method = "rk4";
  double h = 1e-3, t_max = 1.0;
  int points = 101;
};

void run_propagate(const Global& g, const PropagateArgs& a) {
  const Method m = parse_method(a.method);
  require(a.h > 0.0, "--h must be > 0");
  const std::vector<double> times = output_times(a.t_max, a.points);
  GeneratorFn gen;
  if (!a.hamiltonian.empty()) {
    std::ifstream in(a.hamiltonian);
    if (!in) throw ValidationError("cannot open '" + a.hamiltonian + "'");
    json j;
    in >> j;
    const Mat h = operator_from_json(j);
    require(is_hermitian(h), "hamiltonian must be Hermitian");
    gen = constant_generator(Mat(-I * h));
  } else {
    const double mu = a.mu, om = a.omega;
    gen = hamiltonian_generator(2, [mu, om](double t) {
      return Mat(mu / 2 * (std::cos(om * t) * sigma_x() - std::sin(om * t) * sigma_y()));
    });
  }
  const auto us = propagate_to(gen, 0.0, times, {m, a.h});
  Table tab;
  tab.columns = {"t"};
  for (auto& c : matrix_columns("U", gen.dim, gen.dim)) tab.columns.push_back(c);
  for (size_t i = 0; i < times.size(); ++i) {
    std::vector<double> r{times[i]};
    append_matrix(r, us[i]);
    tab.rows.push_back(std::move(r));
  }
  tab.write(g);
}

// ---------------------------------------------------------------- stochastic
struct ProcessArgs {
  std::string process = "rtn";
  double w = 1.0, w_plus = 1.0, w_minus = 1.0, p = 0.0;
  int n_components = 4;

  ProcessSpec spec() const {
    ProcessSpec s;
    if (process == "rtn")
      s = RtnSpec{w, p};
    else if (process == "asym")
      s = AsymTelegraphSpec{w_plus, w_minus, p};
    else if (process == "gauss-sum")
      s = GaussSumSpec{RtnSpec{w, 0.0}, n_components};
    else
      throw ValidationError("--process must be rtn, asym or gauss-sum");
    validate(s);
    return s;
  }
};

struct StochasticArgs {
  ProcessArgs proc;
  double lambda = 1.0, omega0 = 0.0;
  int order = 0;
  long samples = 1000;
  std::string method = "rk4";
  double h = 1e-2, t_max = 5.0;
  int points = 101;
};

StochasticHamiltonian qubit_hamiltonian(const StochasticArgs& a) {
  StochasticHamiltonian h{Mat(0.5 * a.omega0 * sigma_z()), Mat(0.5 * sigma_z()), a.lambda, a.proc.spec()};
  validate(h);
  return h;
}

std::vector<SuperOperator> stochastic_maps(const Global& g, const StochasticArgs& a, const std::vector<double>& times,
                                           const std::string& route) {
  const StochasticHamiltonian h = qubit_hamiltonian(a);
  const IntegratorCfg cfg{parse_method(a.method), a.h};
  require(a.h > 0.0, "--h must be > 0");
  if (route == "sample-average") {
    require(a.samples >= 1, "--samples must be >= 1");
    return sample_average_series(h, times, cfg, {a.samples, g.seed, resolve_threads(g.threads)});
  }
  if (route == "cumulant1" || route == "cumulant2" || route == "cumulant4") {
    SuperCumulantOptions opt;
    opt.order = route.back() - '0';
    return truncated_map_series(h, opt, times, cfg);
  }
  if (route == "closed-form") {
    require(a.proc.process == "rtn" && a.omega0 == 0.0, "closed-form route needs --process rtn and --omega0 0");
    std::vector<SuperOperator> out;
    const RtnSpec s{a.proc.w, a.proc.p};
    for (double t : times) out.push_back(dephasing_map(h.v, h.lambda, rtn_gap_coherence(s, t)));
    return out;
  }
  throw ValidationError("unknown stochastic route '" + route + "'");
}

void run_stochastic(const Global& g, const StochasticArgs& a) {
  require(a.order == 0 || a.order == 1 || a.order == 2 || a.order == 4, "--order must be 0, 1, 2 or 4");
  const std::vector<double> times = output_times(a.t_max, a.points);
  const std::string route = a.order == 0 ? "sample-average" : "cumulant" + std::to_string(a.order);
  const auto maps = stochastic_maps(g, a, times, route);
  Table tab;
  tab.columns = {"t"};
  for (auto& c : matrix_columns("M", 4, 4)) tab.columns.push_back(c);
  for (const char* c : {"re_W", "im_W", "abs_W"}) tab.columns.emplace_back(c);
  for (size_t i = 0; i < times.size(); ++i) {
    std::vector<double> r{times[i]};
    append_matrix(r, maps[i].matrix());
    const cplx w = coherence_element(maps[i], 1, 0);
    r.insert(r.end(), {w.real(), w.imag(), std::abs(w)});
    tab.rows.push_back(std::move(r));
  }
  tab.write(g);
}

// ---------------------------------------------------------------- exact
struct ExactArgs {
  std::string model, rho0;
  double t_max = 1.0;
  int points = 101;
};

Mat initial_state(const std::string& path, int d) {
  if (path.empty()) {
    Mat psi = Mat::Constant(d, 1, 1.0 / std::sqrt(static_cast<double>(d)));
    return psi * psi.adjoint();
  }
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  json j;
  in >> j;
  const Mat rho = operator_from_json(j);
  require(rho.rows() == d, "rho0 dimension does not match the model");
  require(is_density(rho), "rho0 must be a density matrix");
  return rho;
}

void run_exact(const Global& g, const ExactArgs& a) {
  const SEModel m = load_model(a.model);
  const std::vector<double> times = output_times(a.t_max, a.points);
  const Mat rho0 = initial_state(a.rho0, m.dim_s());
  const auto maps = exact_map_series(m, times);
  Table tab;
  tab.columns = {"t"};
  for (auto& c : matrix_columns("rho", m.dim_s(), m.dim_s())) tab.columns.push_back(c);
  tab.columns.emplace_back("entropy");
  for (size_t i = 0; i < times.size(); ++i) {
    const Mat rho = maps[i].apply(rho0);
    std::vector<double> r{times[i]};
    append_matrix(r, rho);
    r.push_back(entropy(rho));
    tab.rows.push_back(std::move(r));
  }
  tab.write(g);
}

// ---------------------------------------------------------------- quasiprob
struct QuasiArgs {
  std::string model;
  std::vector<double> times;
  int alpha = 0;
};

void run_quasiprob(const Global& g, const QuasiArgs& a) {
  const SEModel m = load_model(a.model);
  require(!a.times.empty(), "--times needs at least one value");
  const QuasiProbTensor q = quasi_probability(m, a.times, {}, a.alpha);
  const DiagonalSplit s = split_diagonal(q);
  json re = json::array(), im = json::array();
  for (const auto& z : q.data) {
    re.push_back(z.real());
    im.push_back(z.imag());
  }
  emit_json(g, {{"order", q.order},
                {"times", q.times},
                {"values", q.values},
                {"layout", "flat, (f1, fb1) most significant"},
                {"re", std::move(re)},
                {"im", std::move(im)},
                {"diagonal", s.p},
                {"interference_norm", s.interference_norm},
                {"normalization_defect", s.normalization_defect},
                {"consistency_defect", consistency_defect(m.he, m.couplings[a.alpha].f, m.rho_e, q)}});
}

// ---------------------------------------------------------------- davies
struct DaviesArgs {
  std::string model;
  double beta = 1.0, horizon = 0.0, gap_tol = -1.0, t_max = 0.0, width = 0.05;
  int points = 101;
};

void run_davies(const Global& g, const DaviesArgs& a) {
  const SEModel m = load_model(a.model);
  require(a.width > 0.0, "--width must be > 0");
  require(a.horizon >= 0.0, "--horizon must be >= 0");
  require(a.t_max >= 0.0, "--t-max must be >= 0");
  require(a.points >= 2, "--points must be >= 2");
  const GeneratorBundle b = davies_from_model(m, {a.beta, a.width, a.gap_tol});
  const ThermalizationReport rep = thermalization_analysis(b, a.gap_tol);

  json gamma = json::array(), spectrum = json::array(), coh = json::array(), hcurve = json::array();
  for (const auto& z : b.gamma) gamma.push_back(cplx_json(z));
  for (Eigen::Index i = 0; i < rep.population_spectrum.size(); ++i) spectrum.push_back(rep.population_spectrum(i));
  for (const auto& z : rep.coherence_spectrum) coh.push_back(cplx_json(z));
  std::vector<std::string> warnings = rep.warnings;

  if (rep.nondegenerate) {
    const PauliSystem ps = pauli_system(b, a.gap_tol);
    const double scale = b.lambda * b.lambda * std::max(rep.spectral_gap, 1e-12);
    const double t_max = a.t_max > 0.0 ? a.t_max : 5.0 / scale;
    const std::vector<double> times = output_times(t_max, a.points);
    RVec q0 = RVec::Zero(ps.energies.size());
    q0(q0.size() - 1) = 1.0;
    const auto qs = pauli_evolve(ps, b.lambda, q0, times);
    for (size_t i = 0; i < times.size(); ++i)
      hcurve.push_back({{"t", times[i]}, {"h", h_functional(qs[i].cwiseMax(0.0), ps.p_gibbs)}});
  }

  json j{{"beta", a.beta},
         {"lambda", b.lambda},
         {"omegas", b.freq.omegas},
         {"gamma", std::move(gamma)},
         {"spectrum", std::move(spectrum)},
         {"coherence_spectrum", std::move(coh)},
         {"gap", rep.spectral_gap},
         {"zero_eigenvalues", rep.zero_eigenvalues},
         {"max_re_coherence", rep.max_re_coherence},
         {"fixed_point_error", rep.fixed_point_error},
         {"generator_fixed_point_error", rep.generator_fixed_point_error},
         {"gibbs_overlap_defect", rep.gibbs_overlap_defect},
         {"ergodic", rep.ergodic},
         {"nondegenerate", rep.nondegenerate},
         {"defective", rep.defective},
         {"h_curve", std::move(hcurve)}};

  if (a.horizon > 0.0) {
    // time-domain rates of the broadened correlation, for comparison with the closed form
    const BathSpectrum bs = bath_spectrum(m);
    const double eta = a.width;
    auto corr = [&bs, eta](double tau) { return bs(tau) * std::exp(-0.5 * eta * eta * tau * tau); };
    const GammaResult gr = gamma_rates(corr, b.freq.omegas, a.horizon, std::min(0.01, 0.1 / (1.0 + eta)));
    json gq = json::array();
    for (const auto& z : gr.gamma) gq.push_back(cplx_json(z));
    j["gamma_quadrature"] = std::move(gq);
    j["tail_bound"] = gr.tail_bound;
    if (!b.spectrum.detailed_balance) warnings.push_back("gamma_quadrature is not thermalized; compare with care");
  }
  j["warnings"] = warnings;
  emit_json(g, j);
}

// ---------------------------------------------------------------- surrogate
struct SurrogateArgs {
  std::string model, samples_out;
  std::vector<double> times;
  int k_max = 0;
  double eps = 1e-8;
  int samples = 0;
  int alpha = 0;
};

void run_surrogate(const Global& g, const SurrogateArgs& a) {
  const SEModel m = load_model(a.model);
  require(!a.times.empty(), "--times needs at least one value");
  const int k_max = a.k_max > 0 ? a.k_max : std::min<int>(3, static_cast<int>(a.times.size()));
  require(a.samples >= 0, "--samples must be >= 0");
  require(a.samples == 0 || !a.samples_out.empty(), "--samples needs --samples-out");
  const SurrogateReport r = surrogate_verdict(m, {a.times}, k_max, a.eps, {}, a.alpha);
  json j = to_json(r);
  if (a.samples > 0) {
    std::vector<double> asc(a.times.rbegin(), a.times.rend());
    const auto recs = sequential_measurement_batch(m, asc, g.seed, a.samples, std::max(1, resolve_threads(g.threads)), a.alpha);
    Sink sink(a.samples_out);
    Csv csv(sink.os(), {"sample", "t", "f", "probability"});
    for (size_t i = 0; i < recs.size(); ++i)
      for (size_t k = 0; k < asc.size(); ++k)
        csv.row({static_cast<double>(i), recs[i].times[k], recs[i].values[k], recs[i].probability});
    j["samples"] = a.samples;
    j["samples_out"] = a.samples_out;
  }
  emit_json(g, j);
}

// ---------------------------------------------------------------- compare
struct CompareArgs {
  std::string a, b, model, method = "rk4";
  StochasticArgs st;
  double beta = 1.0, width = 0.05, h = 1e-2, t_max = 5.0;
  int points = 51;
};

bool is_model_route(const std::string& r) {
  return r == "exact" || r == "second-order" || r == "davies" || r == "redfield";
}

std::vector<SuperOperator> model_maps(const SEModel& m, const CompareArgs& c, const std::vector<double>& times,
                                      const std::string& route) {
  if (route == "exact") return exact_map_series(m, times);
  if (route == "second-order") return second_order_map_series(m, times, {parse_method(c.method), c.h});
  const GeneratorBundle b = route == "davies" ? davies_from_model(m, {c.beta, c.width, -1.0})
                                              : redfield_from_model(m, {c.beta, c.width, -1.0});
  std::vector<SuperOperator> out;
  for (double t : times) out.push_back(matrix_exp(b.generator * cplx(t)));
  return out;
}

void run_compare(const Global& g, const CompareArgs& c) {
  const std::vector<double> times = output_times(c.t_max, c.points);
  require(c.h > 0.0, "--h must be > 0");
  const bool ma = is_model_route(c.a), mb = is_model_route(c.b);
  require(ma == mb, "incompatible pipelines: model routes and stochastic routes act on different systems");
  std::vector<SuperOperator> xa, xb;
  if (ma) {
    require(!c.model.empty(), "model routes need --model");
    const SEModel m = load_model(c.model);
    xa = model_maps(m, c, times, c.a);
    xb = c.b == c.a ? xa : model_maps(m, c, times, c.b);
  } else {
    StochasticArgs st = c.st;
    st.method = c.method;
    st.h = c.h;
    xa = stochastic_maps(g, st, times, c.a);
    xb = c.b == c.a ? xa : stochastic_maps(g, st, times, c.b);
  }
  require(xa.front().dim() == xb.front().dim(), "incompatible dimensions");
  Table tab;
  tab.columns = {"t", "divergence"};
  for (size_t i = 0; i < times.size(); ++i)
    tab.rows.push_back({times[i], max_abs(xa[i].matrix() - xb[i].in_basis(xa[i].basis()).matrix())});
  tab.write(g);
}

void add_process_flags(CLI::App* s, ProcessArgs& p) {
  s->add_option("--process", p.process, "rtn | asym | gauss-sum")->check(CLI::IsMember({"rtn", "asym", "gauss-sum"}));
  s->add_option("--w", p.w, "switching rate (rtn, gauss-sum)");
  s->add_option("--w-plus", p.w_plus, "rate into +1 (asym)");
  s->add_option("--w-minus", p.w_minus, "rate into -1 (asym)");
  s->add_option("--p", p.p, "initial bias, P(+-1, 0) = (1 +- p)/2");
  s->add_option("--n-components", p.n_components, "number of RTN copies (gauss-sum)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"openqs: open quantum system dynamics"};
  app.set_help_flag("--help", "print help and exit");
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI file with option values");
  app.allow_config_extras(CLI::config_extras_mode::error);
  Global g;
  app.add_option("--seed", g.seed, "base seed for sampling");
  app.add_option("--threads", g.threads, "worker cap (0: OPENQS_THREADS or hardware)")->check(CLI::NonNegativeNumber);
  app.add_option("--out", g.out, "output path (default stdout)");
  app.add_option("--format", g.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));

  PropagateArgs pa;
  auto* sp = app.add_subcommand("propagate", "time-ordered exponential of a qubit drive or constant Hamiltonian");
  sp->add_option("--hamiltonian", pa.hamiltonian, "operator JSON; default is the rotating drive")->check(CLI::ExistingFile);
  sp->add_option("--mu", pa.mu, "drive amplitude");
  sp->add_option("--omega", pa.omega, "drive frequency");
  sp->add_option("--method", pa.method, "euler | rk4 | cn");
  sp->add_option("--h", pa.h, "step");
  sp->add_option("--t-max", pa.t_max, "final time");
  sp->add_option("--points", pa.points, "output times");

  StochasticArgs sa;
  auto* ss = app.add_subcommand("stochastic", "stochastic dephasing map of a qubit");
  add_process_flags(ss, sa.proc);
  ss->add_option("--lambda", sa.lambda, "coupling");
  ss->add_option("--omega0", sa.omega0, "h0 = omega0 sigma_z / 2");
  ss->add_option("--order", sa.order, "0: sample average; 1, 2, 4: super-cumulant truncation");
  ss->add_option("--samples", sa.samples, "trajectories for the sample average");
  ss->add_option("--method", sa.method, "euler | rk4 | cn");
  ss->add_option("--h", sa.h, "step");
  ss->add_option("--t-max", sa.t_max, "final time");
  ss->add_option("--points", sa.points, "output times");

  ExactArgs ea;
  auto* se = app.add_subcommand("exact", "exact reduced dynamics rho_S(t)");
  se->add_option("--model", ea.model, "model JSON")->required()->check(CLI::ExistingFile);
  se->add_option("--rho0", ea.rho0, "initial system state (default: uniform superposition)")->check(CLI::ExistingFile);
  se->add_option("--t-max", ea.t_max, "final time");
  se->add_option("--points", ea.points, "output times");

  QuasiArgs qa;
  auto* sq = app.add_subcommand("quasiprob", "joint quasi-probability tensor of the coupling operator");
  sq->add_option("--model", qa.model, "model JSON")->required()->check(CLI::ExistingFile);
  sq->add_option("--times", qa.times, "strictly descending times, comma separated")->required()->delimiter(',');
  sq->add_option("--alpha", qa.alpha, "coupling index");

  DaviesArgs da;
  auto* sd = app.add_subcommand("davies", "Davies generator and thermalization report");
  sd->add_option("--model", da.model, "model JSON")->required()->check(CLI::ExistingFile);
  sd->add_option("--beta", da.beta, "inverse temperature");
  sd->add_option("--horizon", da.horizon, "also compute rates by quadrature up to this horizon");
  sd->add_option("--gap-tol", da.gap_tol, "Bohr frequency merge tolerance");
  sd->add_option("--t-max", da.t_max, "H-curve final time (default 5 / (lambda^2 gap))");
  sd->add_option("--width", da.width, "line broadening of the finite bath");
  sd->add_option("--points", da.points, "H-curve points");

  SurrogateArgs ua;
  auto* su = app.add_subcommand("surrogate", "surrogate-field verdict and sequential measurement samples");
  su->add_option("--model", ua.model, "model JSON")->required()->check(CLI::ExistingFile);
  su->add_option("--times", ua.times, "strictly descending times, comma separated")->required()->delimiter(',');
  su->add_option("--k-max", ua.k_max, "highest order tested (default min(3, #times))");
  su->add_option("--eps", ua.eps, "verdict tolerance");
  su->add_option("--samples", ua.samples, "sequential measurement samples");
  su->add_option("--samples-out", ua.samples_out, "CSV path for sampled sequences");
  su->add_option("--alpha", ua.alpha, "coupling index");

  CompareArgs ca;
  auto* sc = app.add_subcommand("compare", "max-norm divergence of two pipelines versus t");
  const std::vector<std::string> routes = {"exact", "second-order", "davies", "redfield", "sample-average",
                                           "cumulant1", "cumulant2", "cumulant4", "closed-form"};
  sc->add_option("--a", ca.a, "first pipeline")->required()->check(CLI::IsMember(routes));
  sc->add_option("--b", ca.b, "second pipeline")->required()->check(CLI::IsMember(routes));
  sc->add_option("--model", ca.model, "model JSON (model routes)")->check(CLI::ExistingFile);
  sc->add_option("--beta", ca.beta, "inverse temperature (davies, redfield)");
  sc->add_option("--width", ca.width, "line broadening (davies, redfield)");
  add_process_flags(sc, ca.st.proc);
  sc->add_option("--lambda", ca.st.lambda, "coupling (stochastic routes)");
  sc->add_option("--omega0", ca.st.omega0, "h0 = omega0 sigma_z / 2 (stochastic routes)");
  sc->add_option("--samples", ca.st.samples, "trajectories (sample-average)");
  sc->add_option("--method", ca.method, "euler | rk4 | cn");
  sc->add_option("--h", ca.h, "step");
  sc->add_option("--t-max", ca.t_max, "final time");
  sc->add_option("--points", ca.points, "output times");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*sp) run_propagate(g, pa);
    else if (*ss) run_stochastic(g, sa);
    else if (*se) run_exact(g, ea);
    else if (*sq) run_quasiprob(g, qa);
    else if (*sd) run_davies(g, da);
    else if (*su) run_surrogate(g, ua);
    else if (*sc) run_compare(g, ca);
  } catch (const ValidationError& e) {
    std::cerr << "openqs: invalid input: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "openqs: invalid input: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "openqs: numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "openqs: numerical failure: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
