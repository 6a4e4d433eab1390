#include <openqs/master_equations.hpp>
#include <openqs/surrogate_fields.hpp>

#include "helpers.hpp"

using namespace openqs;
using namespace testutil;

namespace {

struct Random3 {
  Mat hs, v;
};

// nondegenerate, all off-diagonal couplings in the eigenbasis nonzero
Random3 random3(std::mt19937_64& rng) {
  Mat hs = diag({0.0, 0.83, 2.1});
  Mat u = random_unitary(3, rng);
  Mat v = random_hermitian(3, rng);
  return {u * hs * u.adjoint(), u * v * u.adjoint()};
}

// eigenbasis ket-bra elements W |a><b| W^dag in ket-bra order
BasisPtr eigen_basis(const Mat& w) {
  const int d = static_cast<int>(w.rows());
  auto kb = ketbra_basis(d);
  std::vector<Mat> el;
  for (int k = 0; k < kb->size(); ++k) el.push_back(w * (*kb)[k] * w.adjoint());
  return std::make_shared<const OperatorBasis>(OperatorBasis::from_elements(el));
}

SEModel parity_bath(double lambda) {
  Mat he = diag({0.0, 0.7, 0.3, 1.2});
  Mat b(2, 2);
  b << cplx(0.8, 0.0), cplx(0.3, 0.2), cplx(0.4, -0.1), cplx(0.6, 0.0);
  Mat f = Mat::Zero(4, 4);
  f.topRightCorner(2, 2) = b;
  f.bottomLeftCorner(2, 2) = b.adjoint();
  return SEModel::single(0.5 * sigma_z(), he, sigma_x(), f, lambda, gibbs_state(he, 1.0));
}

}  // namespace

TEST_CASE("frequency decomposition") {
  const double om = 1.4;
  auto fd = frequency_decompose(0.5 * om * sigma_z(), sigma_x());
  REQUIRE(fd.omegas.size() == 2);
  CHECK(std::abs(fd.omegas[0] + om) < 1e-14);
  CHECK(std::abs(fd.omegas[1] - om) < 1e-14);
  CHECK(dist(fd.v_omega[1], ket(2, 0) * ket(2, 1).adjoint()) < 1e-14);
  CHECK(dist(fd.v_omega[0], fd.v_omega[1].adjoint()) < 1e-14);

  auto d0 = frequency_decompose(0.5 * om * sigma_z(), sigma_z());
  REQUIRE(d0.omegas.size() == 1);
  CHECK(d0.omegas[0] == 0.0);

  // near-equal gaps merge
  std::mt19937_64 rng(1);
  Mat u = random_unitary(3, rng);
  Mat h = u * diag({0.0, 1.0, 2.0 + 1e-12}) * u.adjoint();
  Mat v = random_hermitian(3, rng);
  auto fm = frequency_decompose(h, v);
  CHECK(fm.omegas.size() == 5);
  Mat sum = Mat::Zero(3, 3);
  for (const auto& x : fm.v_omega) sum += x;
  CHECK(dist(sum, v) < 1e-13);
  auto fs = frequency_decompose(h, v, 1e-14);
  CHECK(fs.omegas.size() == 7);
}

TEST_CASE("gamma rates of an exponential kernel") {
  const double w = 0.7;
  auto corr = [w](double t) { return cplx(std::exp(-2 * w * t)); };
  auto g = gamma_rates(corr, {0.0, 1.3, -2.0}, -1.0, 1e-3);
  CHECK(std::abs(g.gamma[0] - 1.0 / (2 * w)) < 1e-6);
  CHECK(std::abs(g.gamma[1] - 1.0 / cplx(2 * w, 1.3)) < 1e-6);
  CHECK(std::abs(g.gamma[2] - 1.0 / cplx(2 * w, -2.0)) < 1e-6);
  CHECK(g.tail_bound < 1e-7);
  CHECK_THROWS_AS(gamma_rates(corr, {0.0}, 2.0, 1e-3), NumericalError);
}

TEST_CASE("thermal spectra") {
  const double beta = 1.3;
  auto sp = lorentzian_spectrum(beta, 1.0, 0.8);
  for (double w : {-2.0, -0.3, 0.4, 1.5}) {
    CHECK(std::abs(sp.j(w) - 2 * sp.s(w) / (std::exp(beta * w) + 1)) < 1e-14);
    CHECK(std::abs(sp.j(w) / sp.j(-w) - std::exp(-beta * w)) < 1e-12);
  }
  CHECK(std::abs(2.0 * sp.gamma(0.9).real() - sp.j(0.9)) < 1e-15);

  // finite bath: 2 Re gamma from the broadened correlation by quadrature
  auto m = parity_bath(0.1);
  auto ts = spectrum_from_model(m, 1.0, 0.2);
  CHECK(ts.detailed_balance);
  const double width = 0.2;
  const BathSpectrum bs = bath_spectrum(m);
  auto windowed = [&](double tau) { return bs(tau) * std::exp(-0.5 * width * width * tau * tau); };
  auto gq = gamma_rates(windowed, {-1.0, 1.0}, 60.0, 2e-3);
  // the windowed transform is the direct spectrum; in a thermal state it satisfies detailed balance
  CHECK(std::abs(2 * gq.gamma[0].real() - ts.j_direct(-1.0)) < 1e-8);
  CHECK(std::abs(2 * gq.gamma[1].real() - ts.j_direct(1.0)) < 1e-8);
}

TEST_CASE("Davies generator: qubit") {
  const double om = 1.2, beta = 0.9, lam = 0.3;
  auto sp = lorentzian_spectrum(beta, 1.0, 1.0);
  Mat hs = 0.5 * om * sigma_z();
  auto b = davies_generator(hs, sigma_x(), lam, sp);

  // trace preservation and GKLS form
  auto kb = ketbra_basis(2);
  Vec tr = Vec::Zero(4);
  tr(0) = tr(1) = 1.0;
  CHECK((tr.adjoint() * b.generator.matrix()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(min_choi_eigenvalue(matrix_exp(b.generator * cplx(1e-3))) > -1e-12);
  CHECK(is_hermitian(b.hamiltonian, 1e-15));

  // fixed point is the Gibbs state of hs'
  Mat fixed = matrix_exp(b.generator * cplx(400.0)).apply(0.5 * identity(2));
  CHECK(dist(fixed, gibbs_state(hs, beta)) < 1e-10);

  // secular invariance
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int i = 0; i < 10; ++i) {
    const double t = u(rng);
    auto rot = lift_unitary(unitary_exp(hs, t)) * b.generator * lift_unitary(unitary_exp(hs, -t));
    CHECK(dist(rot, b.generator) <= 1e-10);
  }
  // populations and coherences decouple
  for (int r : {0, 1})
    for (int c : {2, 3}) {
      CHECK(std::abs(b.generator.matrix()(r, c)) < 1e-15);
      CHECK(std::abs(b.generator.matrix()(c, r)) < 1e-15);
    }
}

TEST_CASE("Davies generator: commuting coupling is pure dephasing") {
  auto sp = lorentzian_spectrum(1.0, 1.0, 1.0);
  auto b = davies_generator(0.5 * sigma_z(), sigma_z(), 0.4, sp);
  REQUIRE(b.freq.omegas.size() == 1);
  Mat up = projector(ket(2, 0));
  CHECK(max_abs(b.generator.apply(up)) < 1e-15);
  const cplx rate = b.generator.apply(ket(2, 0) * ket(2, 1).adjoint())(0, 1);
  CHECK(std::abs(rate.real() + 2 * 0.16 * sp.j(0.0)) < 1e-14);
}

TEST_CASE("Davies generator: random three-level model") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 5; ++rep) {
    auto r = random3(rng);
    const double beta = 0.5 + 0.3 * rep;
    auto b = davies_generator(r.hs, r.v, 0.2, lorentzian_spectrum(beta, 1.0, 1.0));
    CHECK(gkls_defect(b.generator) < 1e-12);
    CHECK(min_choi_eigenvalue(matrix_exp(b.generator * cplx(1e-2))) > -1e-12);

    auto rep_t = thermalization_analysis(b);
    CHECK(rep_t.ergodic);
    CHECK(rep_t.nondegenerate);
    CHECK(rep_t.zero_eigenvalues == 1);
    CHECK(rep_t.population_spectrum(1) < -1e-6);
    CHECK(rep_t.gibbs_overlap_defect < 1e-10);
    CHECK(rep_t.fixed_point_error < 1e-12);
    CHECK(rep_t.generator_fixed_point_error < 1e-12);
    CHECK(rep_t.weighted_selfadjoint_defect < 1e-12);
    CHECK(rep_t.max_re_coherence < 0.0);
    CHECK_FALSE(rep_t.defective);
    CHECK(std::abs(rep_t.spectral_gap + rep_t.population_spectrum(1)) < 1e-15);
  }
}

TEST_CASE("thermalization analysis flags vanishing couplings") {
  Mat hs = diag({0.0, 0.9, 2.3});
  Mat v(3, 3);
  v << 0.3, 0.0, 0.5, 0.0, -0.2, 0.7, 0.5, 0.7, 0.1;
  auto b = davies_generator(hs, v, 0.3, lorentzian_spectrum(1.0, 1.0, 1.0));
  auto r = thermalization_analysis(b);
  CHECK_FALSE(r.ergodic);
  REQUIRE(r.zero_couplings.size() == 1);
  CHECK(r.zero_couplings[0] == std::pair<int, int>{0, 1});
  CHECK_FALSE(r.warnings.empty());

  Mat vd = diag({0.4, -0.1, 0.2});
  auto rd = thermalization_analysis(davies_generator(hs, vd, 0.3, lorentzian_spectrum(1.0, 1.0, 1.0)));
  CHECK(rd.zero_eigenvalues == 3);
}

TEST_CASE("weighted inner product self-adjointness of M") {
  std::mt19937_64 rng(7);
  auto r = random3(rng);
  const double beta = 1.4;
  auto b = davies_generator(r.hs, r.v, 0.2, lorentzian_spectrum(beta, 1.0, 1.0));
  auto ps = pauli_system(b);
  RVec a = RVec::Random(3), c = RVec::Random(3);
  auto as_diag = [](const RVec& x) { return Mat(x.cast<cplx>().asDiagonal()); };
  const cplx lhs = weighted_inner(as_diag(a), as_diag(ps.m * c), ps.energies, beta);
  const cplx rhs = weighted_inner(as_diag(ps.m * a), as_diag(c), ps.energies, beta);
  CHECK(std::abs(lhs - rhs) < 1e-14);
}

TEST_CASE("Pauli rate equation") {
  const double om = 1.3, beta = 0.8;
  auto b = davies_generator(0.5 * om * sigma_z(), sigma_x(), 0.2, lorentzian_spectrum(beta, 1.0, 1.0));
  auto ps = pauli_system(b);
  // index 0 is the lower level
  CHECK(std::abs(ps.gamma(0, 1) / ps.gamma(1, 0) - std::exp(beta * om)) < 1e-12);
  for (int c = 0; c < 2; ++c) CHECK(std::abs(ps.m.col(c).sum()) < 1e-16);
  CHECK((ps.m * ps.p_gibbs).norm() < 1e-16);

  auto b0 = davies_generator(0.5 * om * sigma_z(), sigma_x(), 0.2, lorentzian_spectrum(0.0, 1.0, 1.0));
  auto p0 = pauli_system(b0);
  CHECK(std::abs(p0.gamma(0, 1) - p0.gamma(1, 0)) < 1e-15);
  CHECK(std::abs(p0.p_gibbs(0) - 0.5) < 1e-15);

  std::mt19937_64 rng(8);
  auto r = random3(rng);
  auto p3 = pauli_system(davies_generator(r.hs, r.v, 0.2, lorentzian_spectrum(1.7, 1.0, 1.0)));
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < 3; ++c) {
      if (a == c) continue;
      CHECK(p3.m(a, c) >= 0.0);
      const double w_ac = p3.energies(a) - p3.energies(c);
      CHECK(std::abs(p3.gamma(c, a) - std::exp(1.7 * w_ac) * p3.gamma(a, c)) <= 1e-12 * std::max(1.0, p3.gamma(c, a)));
    }

  CHECK_THROWS_AS(pauli_system(davies_generator(diag({0.0, 1.0, 1.0}), r.v, 0.2, lorentzian_spectrum(1.0, 1.0, 1.0))),
                  ValidationError);
}

TEST_CASE("H functional") {
  RVec g(2);
  g << 0.7, 0.3;
  CHECK(h_functional(g, g) == 0.0);
  const double e = std::exp(0.5);
  RVec pg(2);
  pg << e / (e + 1 / e), (1 / e) / (e + 1 / e);
  RVec uni = RVec::Constant(2, 0.5);
  CHECK(std::abs(h_functional(uni, pg) - (0.5 * std::log(0.5 / pg(0)) + 0.5 * std::log(0.5 / pg(1)))) < 1e-16);
  RVec bad(2);
  bad << 1.1, -0.1;
  CHECK_THROWS_AS(h_functional(bad, pg), ValidationError);

  // monotone along the Pauli flow; exponential approach at the spectral gap
  std::mt19937_64 rng(9);
  auto r = random3(rng);
  const double lam = 0.2;
  auto b = davies_generator(r.hs, r.v, lam, lorentzian_spectrum(1.2, 1.0, 1.0));
  auto ps = pauli_system(b);
  auto rep = thermalization_analysis(b);
  RVec q0(3);
  q0 << 0.05, 0.15, 0.8;
  std::vector<double> ts;
  for (int i = 0; i <= 100; ++i) ts.push_back(5.0 * i);
  auto qs = pauli_evolve(ps, lam, q0, ts);
  double prev = h_functional(qs[0], ps.p_gibbs);
  double cmax = 0.0;
  for (size_t i = 1; i < qs.size(); ++i) {
    const double hcur = h_functional(qs[i], ps.p_gibbs);
    CHECK(hcur <= prev + 1e-15);
    prev = hcur;
    const double l1 = (qs[i] - ps.p_gibbs).lpNorm<1>();
    if (l1 > 1e-12) cmax = std::max(cmax, l1 * std::exp(lam * lam * rep.spectral_gap * ts[i]));
  }
  CHECK(cmax < 10.0 * (q0 - ps.p_gibbs).lpNorm<1>());
}

TEST_CASE("Redfield generator") {
  std::mt19937_64 rng(10);
  auto r = random3(rng);
  auto sp = lorentzian_spectrum(1.0, 1.0, 1.0);
  auto zero = redfield_generator(r.hs, r.v, 0.0, sp);
  CHECK(dist(zero.generator, commutator_super(r.hs) * cplx(0, -1)) < 1e-15);

  auto red = redfield_generator(r.hs, r.v, 0.3, sp);
  Vec tr = Vec::Zero(9);
  tr(0) = tr(1) = tr(2) = 1.0;
  CHECK((tr.adjoint() * red.generator.matrix()).cwiseAbs().maxCoeff() < 1e-15);

  // secular average of Redfield in the hs eigenbasis is Davies
  auto dav = davies_generator(r.hs, r.v, 0.3, sp);
  auto eb = eigen_basis(dav.freq.eigvecs);
  Mat rm = red.generator.in_basis(eb).matrix();
  Mat dm = dav.generator.in_basis(eb).matrix();
  auto kb = ketbra_basis(3);
  const RVec& e = dav.freq.energies;
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j) {
      const auto [a, bb] = kb->entry(i);
      const auto [c, d] = kb->entry(j);
      if (std::abs((e(a) - e(bb)) - (e(c) - e(d))) > 1e-8) rm(i, j) = 0.0;
    }
  CHECK(max_abs(rm - dm) < 1e-14);
}

TEST_CASE("Redfield agrees with the exact map to second order") {
  const double t = 1.0;
  DaviesModelOptions opt{1.0, 0.05, -1.0};
  auto diff = [&](double lam) {
    auto m = parity_bath(lam);
    auto g = redfield_from_model(m, opt);
    return dist(matrix_exp(g.generator * cplx(t)), exact_dynamical_map(m, t));
  };
  const double d1 = diff(0.2), d2 = diff(0.1);
  MESSAGE("Redfield vs exact " << d1 << " " << d2);
  CHECK(near(slope(d1, d2), 2.0, 0.1));
}

TEST_CASE("model-level Davies") {
  auto m = parity_bath(0.1);
  auto b = davies_from_model(m, {1.0, 0.05, -1.0});
  CHECK(b.spectrum.detailed_balance);
  auto r = thermalization_analysis(b);
  CHECK(r.zero_eigenvalues == 1);
  CHECK(r.generator_fixed_point_error < 1e-12);

  // stationary but not thermal: built without detailed balance
  auto nt = m;
  nt.rho_e = identity(4) / 8.0 + projector(ket(4, 1)) * 0.5;
  CHECK_FALSE(davies_from_model(nt, {1.0, 0.05, -1.0}).spectrum.detailed_balance);
  std::mt19937_64 rng(12);
  nt.rho_e = random_density(4, rng);
  CHECK_THROWS_AS(davies_from_model(nt, {1.0, 0.05, -1.0}), ValidationError);
}

TEST_CASE("fluctuation-dissipation check") {
  std::mt19937_64 rng(11);
  Mat he = random_hermitian(4, rng), f = random_hermitian(4, rng);
  auto m = SEModel::single(0.5 * sigma_z(), he, sigma_x(), f, 0.1, gibbs_state(he, 1.0));
  auto r = fdt_check(m, 1.0);
  MESSAGE("fdt deviation " << r.max_rel_deviation);
  CHECK(r.max_rel_deviation <= 1e-3);
  CHECK(r.omegas.size() >= 6);

  auto hot = m;
  hot.rho_e = gibbs_state(he, 1e-6);
  CHECK(fdt_check(hot, 1e-6).max_rel_deviation <= 1e-3);

  auto nt = m;
  nt.rho_e = random_density(4, rng);
  CHECK_THROWS_AS(fdt_check(nt, 1.0), ValidationError);
}
