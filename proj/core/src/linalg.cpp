#include "openqs/linalg.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace openqs {

double max_abs(const Mat& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

bool is_square(const Mat& a) { return a.rows() == a.cols(); }

bool is_hermitian(const Mat& a, double tol) {
  return is_square(a) && max_abs(a - a.adjoint()) <= tol;
}

bool is_unitary(const Mat& a, double tol) {
  return is_square(a) && max_abs(a.adjoint() * a - Mat::Identity(a.rows(), a.cols())) <= tol;
}

bool is_density(const Mat& a, double tol) {
  if (!is_hermitian(a, tol)) return false;
  if (std::abs(a.trace() - 1.0) > tol) return false;
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (a + a.adjoint())), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol;
}

bool all_finite(const Mat& a) { return a.allFinite(); }

Mat identity(int d) { return Mat::Identity(d, d); }

Mat sigma_x() {
  Mat s(2, 2);
  s << 0, 1, 1, 0;
  return s;
}

Mat sigma_y() {
  Mat s(2, 2);
  s << 0, -I, I, 0;
  return s;
}

Mat sigma_z() {
  Mat s(2, 2);
  s << 1, 0, 0, -1;
  return s;
}

Mat ket(int d, int i) {
  Mat k = Mat::Zero(d, 1);
  k(i, 0) = 1.0;
  return k;
}

Mat projector(const Mat& psi) { return psi * psi.adjoint(); }

Mat kron(const Mat& a, const Mat& b) { return Eigen::kroneckerProduct(a, b).eval(); }

// ---------------------------------------------------------------- basis

OperatorBasis OperatorBasis::ketbra(int d) {
  require(d > 0, "basis dimension must be positive");
  OperatorBasis b;
  b.dim_ = d;
  b.ketbra_ = true;
  b.index_.assign(d * d, -1);
  auto push = [&](int n, int m) {
    b.index_[n * d + m] = static_cast<int>(b.entries_.size());
    b.entries_.emplace_back(n, m);
    Mat e = Mat::Zero(d, d);
    e(n, m) = 1.0;
    b.elements_.push_back(std::move(e));
  };
  for (int n = 0; n < d; ++n) push(n, n);
  for (int n = 0; n < d; ++n)
    for (int m = n + 1; m < d; ++m) {
      push(n, m);
      push(m, n);
    }
  return b;
}

OperatorBasis OperatorBasis::from_elements(std::vector<Mat> elements, double tol) {
  require(!elements.empty(), "empty operator basis");
  const int d = static_cast<int>(elements.front().rows());
  require(static_cast<int>(elements.size()) == d * d, "basis needs d^2 elements");
  for (const auto& e : elements) require(e.rows() == d && e.cols() == d, "basis element has wrong shape");
  for (int n = 0; n < d * d; ++n)
    for (int m = 0; m < d * d; ++m) {
      const cplx g = hs_inner(elements[n], elements[m]);
      require(std::abs(g - (n == m ? 1.0 : 0.0)) <= tol, "basis is not orthonormal");
    }
  OperatorBasis b;
  b.dim_ = d;
  b.ketbra_ = false;
  b.elements_ = std::move(elements);
  return b;
}

Vec OperatorBasis::vectorize(const Mat& a) const {
  require(a.rows() == dim_ && a.cols() == dim_, "vectorize: dimension mismatch");
  Vec v(size());
  if (ketbra_) {
    for (int k = 0; k < size(); ++k) v(k) = a(entries_[k].first, entries_[k].second);
  } else {
    for (int k = 0; k < size(); ++k) v(k) = hs_inner(elements_[k], a);
  }
  return v;
}

Mat OperatorBasis::unvectorize(const Vec& v) const {
  require(v.size() == size(), "unvectorize: length mismatch");
  Mat a = Mat::Zero(dim_, dim_);
  if (ketbra_) {
    for (int k = 0; k < size(); ++k) a(entries_[k].first, entries_[k].second) = v(k);
  } else {
    for (int k = 0; k < size(); ++k) a += v(k) * elements_[k];
  }
  return a;
}

BasisPtr ketbra_basis(int d) {
  static std::mutex mu;
  static std::map<int, BasisPtr> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(d);
  if (it != cache.end()) return it->second;
  auto b = std::make_shared<const OperatorBasis>(OperatorBasis::ketbra(d));
  cache.emplace(d, b);
  return b;
}

// ---------------------------------------------------------------- superoperators

SuperOperator::SuperOperator(BasisPtr basis, Mat matrix) : basis_(std::move(basis)), m_(std::move(matrix)) {
  require(basis_ != nullptr, "superoperator needs a basis");
  require(m_.rows() == basis_->size() && m_.cols() == basis_->size(), "superoperator matrix has wrong size");
}

SuperOperator SuperOperator::identity(int d) {
  auto b = ketbra_basis(d);
  return SuperOperator(b, Mat::Identity(b->size(), b->size()));
}

SuperOperator SuperOperator::zero(int d) {
  auto b = ketbra_basis(d);
  return SuperOperator(b, Mat::Zero(b->size(), b->size()));
}

SuperOperator SuperOperator::from_action(BasisPtr basis, const std::function<Mat(const Mat&)>& action) {
  const int n = basis->size();
  Mat m(n, n);
  for (int c = 0; c < n; ++c) {
    const Mat img = action((*basis)[c]);
    m.col(c) = basis->vectorize(img);
  }
  return SuperOperator(std::move(basis), std::move(m));
}

Mat SuperOperator::apply(const Mat& a) const { return basis_->unvectorize(m_ * basis_->vectorize(a)); }

SuperOperator SuperOperator::in_basis(const BasisPtr& other) const {
  require(other->dim() == dim(), "in_basis: dimension mismatch");
  if (other == basis_) return *this;
  // columns of t hold the coefficients of the new basis elements in the old one
  const int n = basis_->size();
  Mat t(n, n);
  for (int k = 0; k < n; ++k) t.col(k) = basis_->vectorize((*other)[k]);
  return SuperOperator(other, t.adjoint() * m_ * t);
}

SuperOperator SuperOperator::operator*(const SuperOperator& o) const {
  require(o.dim() == dim(), "superoperator product: dimension mismatch");
  const SuperOperator r = o.in_basis(basis_);
  return SuperOperator(basis_, m_ * r.m_);
}

SuperOperator SuperOperator::operator+(const SuperOperator& o) const {
  require(o.dim() == dim(), "superoperator sum: dimension mismatch");
  return SuperOperator(basis_, m_ + o.in_basis(basis_).m_);
}

SuperOperator SuperOperator::operator-(const SuperOperator& o) const {
  require(o.dim() == dim(), "superoperator difference: dimension mismatch");
  return SuperOperator(basis_, m_ - o.in_basis(basis_).m_);
}

SuperOperator SuperOperator::operator*(cplx s) const { return SuperOperator(basis_, m_ * s); }

cplx hs_inner(const Mat& a, const Mat& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "hs_inner: dimension mismatch");
  return (a.adjoint() * b).trace();
}

namespace {

// l A r in the ket-bra basis: |a><b| coefficient of l |n><m| r is l_an r_mb.
Mat ketbra_left_right(const OperatorBasis& b, const Mat& l, const Mat& r) {
  const int d = b.dim();
  const int n2 = b.size();
  Mat m = Mat::Zero(n2, n2);
  for (int col = 0; col < n2; ++col) {
    const auto [n, mm] = b.entry(col);
    for (int a = 0; a < d; ++a) {
      const cplx lan = l(a, n);
      if (lan == 0.0) continue;
      for (int c = 0; c < d; ++c) m(b.index(a, c), col) += lan * r(mm, c);
    }
  }
  return m;
}

BasisPtr resolve(BasisPtr basis, int d) {
  if (basis) {
    require(basis->dim() == d, "basis dimension mismatch");
    return basis;
  }
  return ketbra_basis(d);
}

}  // namespace

SuperOperator left_right_super(const Mat& l, const Mat& r, BasisPtr basis) {
  require(is_square(l) && is_square(r) && l.rows() == r.rows(), "left_right_super: dimension mismatch");
  const int d = static_cast<int>(l.rows());
  auto kb = ketbra_basis(d);
  SuperOperator s(kb, ketbra_left_right(*kb, l, r));
  return s.in_basis(resolve(std::move(basis), d));
}

SuperOperator commutator_super(const Mat& h, BasisPtr basis) {
  require(is_square(h), "commutator_super: operator must be square");
  const int d = static_cast<int>(h.rows());
  auto kb = ketbra_basis(d);
  const Mat one = Mat::Identity(d, d);
  SuperOperator s(kb, ketbra_left_right(*kb, h, one) - ketbra_left_right(*kb, one, h));
  return s.in_basis(resolve(std::move(basis), d));
}

SuperOperator anticommutator_super(const Mat& h, BasisPtr basis) {
  require(is_square(h), "anticommutator_super: operator must be square");
  const int d = static_cast<int>(h.rows());
  auto kb = ketbra_basis(d);
  const Mat one = Mat::Identity(d, d);
  SuperOperator s(kb, ketbra_left_right(*kb, h, one) + ketbra_left_right(*kb, one, h));
  return s.in_basis(resolve(std::move(basis), d));
}

// ---------------------------------------------------------------- partial traces

Mat partial_trace_E(const Mat& a, int dimS, int dimE) {
  require(dimS > 0 && dimE > 0, "partial_trace_E: dimensions must be positive");
  require(a.rows() == dimS * dimE && a.cols() == dimS * dimE, "partial_trace_E: dimensions do not factor");
  Mat r = Mat::Zero(dimS, dimS);
  for (int i = 0; i < dimS; ++i)
    for (int j = 0; j < dimS; ++j) {
      cplx s = 0.0;
      for (int e = 0; e < dimE; ++e) s += a(i * dimE + e, j * dimE + e);
      r(i, j) = s;
    }
  return r;
}

Mat partial_trace_S(const Mat& a, int dimS, int dimE) {
  require(a.rows() == dimS * dimE && a.cols() == dimS * dimE, "partial_trace_S: dimensions do not factor");
  Mat r = Mat::Zero(dimE, dimE);
  for (int s = 0; s < dimS; ++s) r += a.block(s * dimE, s * dimE, dimE, dimE);
  return r;
}

// ---------------------------------------------------------------- exponentials

Mat matrix_exp(const Mat& a) {
  require(is_square(a), "matrix_exp: matrix must be square");
  if (!a.allFinite()) throw ValidationError("matrix_exp: non-finite entries");
  const Eigen::Index n = a.rows();
  if (n == 0) return a;
  const double scale = std::max(1.0, max_abs(a));
  if (max_abs(a - a.adjoint()) <= 1e-14 * scale) {
    Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (a + a.adjoint())));
    const RVec ev = es.eigenvalues();
    const Mat& v = es.eigenvectors();
    return v * ev.array().exp().matrix().cast<cplx>().asDiagonal() * v.adjoint();
  }
  const Mat comm = a * a.adjoint() - a.adjoint() * a;
  if (max_abs(comm) <= 1e-13 * scale * scale) {
    // normal input: the complex Schur form is diagonal up to rounding
    Eigen::ComplexSchur<Mat> cs(a);
    const Mat& t = cs.matrixT();
    const Mat& u = cs.matrixU();
    Mat off = t;
    off.diagonal().setZero();
    if (max_abs(off) <= 1e-12 * scale) {
      Vec e(n);
      for (Eigen::Index i = 0; i < n; ++i) e(i) = std::exp(t(i, i));
      return u * e.asDiagonal() * u.adjoint();
    }
  }
  return a.exp();
}

SuperOperator matrix_exp(const SuperOperator& a) { return SuperOperator(a.basis(), matrix_exp(a.matrix())); }

Mat unitary_exp(const Mat& h, double t) {
  require(is_hermitian(h, 1e-12 * std::max(1.0, max_abs(h))), "unitary_exp: operator must be Hermitian");
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (h + h.adjoint())));
  const RVec& ev = es.eigenvalues();
  Vec ph(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) ph(i) = std::exp(-I * (t * ev(i)));
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

double entropy(const Mat& rho, double tol, double eps_cut) {
  if (!is_density(rho, tol)) throw ValidationError("entropy: input is not a density matrix");
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (rho + rho.adjoint())), Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double p = es.eigenvalues()(i);
    if (p > eps_cut) s -= p * std::log(p);
  }
  return s;
}

Mat choi_matrix(const SuperOperator& s) {
  const int d = s.dim();
  Mat c = Mat::Zero(d * d, d * d);
  for (int n = 0; n < d; ++n)
    for (int m = 0; m < d; ++m) {
      Mat e = Mat::Zero(d, d);
      e(n, m) = 1.0;
      c.block(n * d, m * d, d, d) = s.apply(e);
    }
  return c;
}

double min_choi_eigenvalue(const SuperOperator& s) {
  const Mat c = choi_matrix(s);
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (c + c.adjoint())), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// ---------------------------------------------------------------- random helpers

namespace {
Mat ginibre(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = cplx(g(rng), g(rng));
  return a;
}
}  // namespace

Mat random_hermitian(int d, std::mt19937_64& rng, double scale) {
  const Mat a = ginibre(d, rng);
  return 0.5 * scale * (a + a.adjoint());
}

Mat random_unitary(int d, std::mt19937_64& rng) {
  const Mat a = ginibre(d, rng);
  Eigen::HouseholderQR<Mat> qr(a);
  Mat q = qr.householderQ();
  const Mat r = qr.matrixQR();
  for (int i = 0; i < d; ++i) {
    const cplx ph = r(i, i) / std::abs(r(i, i));
    q.col(i) *= ph;
  }
  return q;
}

Mat random_density(int d, std::mt19937_64& rng) {
  const Mat a = ginibre(d, rng);
  Mat rho = a * a.adjoint();
  rho /= rho.trace();
  return 0.5 * (rho + rho.adjoint());
}

Mat gibbs_state(const Mat& h, double beta) {
  require(is_hermitian(h, 1e-12 * std::max(1.0, max_abs(h))), "gibbs_state: Hamiltonian must be Hermitian");
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (h + h.adjoint())));
  const RVec& ev = es.eigenvalues();
  const double e0 = ev.minCoeff();
  RVec w = (-beta * (ev.array() - e0)).exp();
  w /= w.sum();
  return es.eigenvectors() * w.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace openqs
