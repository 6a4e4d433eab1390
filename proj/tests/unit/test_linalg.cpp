#include "helpers.hpp"

using namespace openqs;
using namespace testutil;

TEST_CASE("hs_inner on Pauli and ket-bra elements") {
  CHECK(std::abs(hs_inner(sigma_z(), sigma_z()) - cplx(2.0)) < 1e-15);
  CHECK(std::abs(hs_inner(sigma_x(), sigma_y())) < 1e-15);
  Mat e01 = ket(2, 0) * ket(2, 1).adjoint();
  CHECK(std::abs(hs_inner(e01, e01) - cplx(1.0)) < 1e-15);
}

TEST_CASE("ket-bra basis ordering and orthonormality") {
  auto b = ketbra_basis(3);
  REQUIRE(b->size() == 9);
  CHECK(b->index(0, 0) == 0);
  CHECK(b->index(2, 2) == 2);
  CHECK(b->index(0, 1) == 3);
  CHECK(b->index(1, 0) == 4);
  for (int n = 0; n < b->size(); ++n)
    for (int m = 0; m < b->size(); ++m)
      CHECK(std::abs(hs_inner((*b)[n], (*b)[m]) - cplx(n == m ? 1.0 : 0.0)) < 1e-15);

  auto q = ketbra_basis(2);
  CHECK(dist((*q)[2], ket(2, 0) * ket(2, 1).adjoint()) == 0.0);
  CHECK(dist((*q)[3], ket(2, 1) * ket(2, 0).adjoint()) == 0.0);
}

TEST_CASE("vectorize round trip is exact") {
  std::mt19937_64 rng(3);
  auto b = ketbra_basis(4);
  Mat a = Mat::Random(4, 4);
  Mat back = b->unvectorize(b->vectorize(a));
  CHECK((back.array() == a.array()).all());
}

TEST_CASE("commutator_super examples") {
  auto s = commutator_super(0.5 * sigma_z());
  Mat expect = diag({0.0, 0.0, 1.0, -1.0});
  CHECK(dist(s.matrix(), expect) < 1e-15);
  CHECK(max_abs(commutator_super(identity(3)).matrix()) < 1e-15);
  CHECK(std::abs(commutator_super(sigma_x()).matrix().trace()) < 1e-15);
}

TEST_CASE("left_right_super examples") {
  CHECK(dist(left_right_super(identity(3), identity(3)), SuperOperator::identity(3)) < 1e-15);

  std::mt19937_64 rng(11);
  Mat u = random_unitary(3, rng);
  auto s = left_right_super(u, u.adjoint());
  CHECK(is_unitary(s.matrix(), 1e-12));

  Mat up = ket(2, 0) * ket(2, 0).adjoint();
  Mat rho = random_density(2, rng);
  Mat out = left_right_super(up, up).apply(rho);
  CHECK(dist(out, rho(0, 0) * up) < 1e-15);
}

TEST_CASE("superoperator matrix elements match tr(E_n^dag A[E_m])") {
  std::mt19937_64 rng(5);
  auto b = ketbra_basis(3);
  Mat l1 = Mat::Random(3, 3), r1 = Mat::Random(3, 3), l2 = Mat::Random(3, 3), r2 = Mat::Random(3, 3);
  auto action = [&](const Mat& x) -> Mat { return l1 * x * r1 + l2 * x * r2; };
  auto s = SuperOperator::from_action(b, action);
  for (int n = 0; n < b->size(); ++n)
    for (int m = 0; m < b->size(); ++m)
      CHECK(std::abs(s.matrix()(n, m) - hs_inner((*b)[n], action((*b)[m]))) < 1e-14);
  // and back: apply() agrees with the direct action
  Mat x = Mat::Random(3, 3);
  CHECK(dist(s.apply(x), action(x)) < 1e-13);
  CHECK(dist(left_right_super(l1, r1) + left_right_super(l2, r2), s) < 1e-14);
}

TEST_CASE("unitary conjugation maps densities to densities") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 20; ++i) {
    Mat u = random_unitary(4, rng);
    Mat rho = random_density(4, rng);
    CHECK(is_density(left_right_super(u, u.adjoint()).apply(rho)));
  }
}

TEST_CASE("partial traces") {
  Mat x = plus_state();
  CHECK(dist(partial_trace_E(kron(x, x), 2, 2), x) < 1e-15);

  Mat bell = Mat::Zero(4, 1);
  bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
  CHECK(dist(partial_trace_E(projector(bell), 2, 2), 0.5 * identity(2)) < 1e-15);
  CHECK(dist(partial_trace_S(projector(bell), 2, 2), 0.5 * identity(2)) < 1e-15);

  // (l t / 2) s_z s_z acting on |X>|X> at l t = pi/2
  Mat u = unitary_exp(0.5 * kron(sigma_z(), sigma_z()), M_PI / 2);
  Mat rho = u * kron(x, x) * u.adjoint();
  CHECK(dist(partial_trace_E(rho, 2, 2), 0.5 * identity(2)) < 1e-15);
  CHECK(std::abs(entropy(partial_trace_E(rho, 2, 2)) - std::log(2.0)) < 1e-12);
}

TEST_CASE("matrix_exp examples") {
  Mat e = matrix_exp(cplx(0, -M_PI / 2) * sigma_z());
  CHECK(dist(e, diag({std::exp(cplx(0, -M_PI / 2)), std::exp(cplx(0, M_PI / 2))})) < 1e-15);
  CHECK(dist(matrix_exp(Mat::Zero(3, 3)), identity(3)) == 0.0);

  // column-stochastic rate matrix: columns of exp(tM) sum to one; dense series oracle
  Eigen::Matrix3d g;
  g << 0.0, 0.7, 0.2, 0.4, 0.0, 1.1, 0.3, 0.5, 0.0;
  Mat m = g.cast<cplx>();
  for (int c = 0; c < 3; ++c) m(c, c) = -g.col(c).sum();
  Mat tm = 2.5 * m;
  Mat series = identity(3), term = identity(3);
  for (int k = 1; k < 80; ++k) {
    term = term * tm / static_cast<double>(k);
    series += term;
  }
  Mat ex = matrix_exp(tm);
  CHECK(dist(ex, series) < 1e-14);
  for (int c = 0; c < 3; ++c) CHECK(std::abs(ex.col(c).sum() - cplx(1.0)) < 1e-14);

  // superoperator exponential equals lifting of the operator exponential
  std::mt19937_64 rng(9);
  Mat h = random_hermitian(3, rng);
  auto se = matrix_exp(commutator_super(h) * cplx(0, -0.7));
  Mat u = unitary_exp(h, 0.7);
  CHECK(dist(se, left_right_super(u, u.adjoint())) < 1e-13);
}

TEST_CASE("entropy examples") {
  std::mt19937_64 rng(21);
  Mat psi = random_unitary(3, rng).col(0);
  CHECK(std::abs(entropy(projector(psi))) < 1e-12);
  CHECK(std::abs(entropy(0.5 * identity(2)) - std::log(2.0)) < 1e-15);
  CHECK(std::abs(entropy(identity(5) / 5.0) - std::log(5.0)) < 1e-14);
  for (int i = 0; i < 10; ++i) {
    Mat rho = random_density(4, rng);
    Mat u = random_unitary(4, rng);
    CHECK(std::abs(entropy(u * rho * u.adjoint()) - entropy(rho)) < 1e-12);
  }
  CHECK_THROWS_AS(entropy(sigma_z()), ValidationError);
}

TEST_CASE("structural predicates") {
  CHECK(is_hermitian(sigma_y()));
  CHECK_FALSE(is_hermitian(ket(2, 0) * ket(2, 1).adjoint()));
  CHECK(is_unitary(sigma_x()));
  CHECK_FALSE(is_unitary(2.0 * identity(2)));
  CHECK(is_density(plus_state()));
  CHECK_FALSE(is_density(identity(2)));
}

TEST_CASE("Choi matrix of unitary conjugation is a rank-one positive operator") {
  std::mt19937_64 rng(4);
  Mat u = random_unitary(3, rng);
  auto s = left_right_super(u, u.adjoint());
  CHECK(min_choi_eigenvalue(s) > -1e-12);
  Eigen::SelfAdjointEigenSolver<Mat> es(choi_matrix(s));
  CHECK(std::abs(es.eigenvalues()(8) - 3.0) < 1e-12);
  CHECK(std::abs(es.eigenvalues()(7)) < 1e-12);
  // transpose is positive but not completely positive
  auto t = SuperOperator::from_action(ketbra_basis(2), [](const Mat& x) -> Mat { return x.transpose(); });
  CHECK(min_choi_eigenvalue(t) < -0.5);
}
