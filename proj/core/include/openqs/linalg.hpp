#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "openqs/errors.hpp"

namespace openqs {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr cplx I{0.0, 1.0};
inline constexpr double kTol = 1e-10;
inline constexpr double kEpsCut = 1e-14;

// Operators are plain dense complex matrices; the predicates below carry the
// structural invariants.
using Operator = Mat;

double max_abs(const Mat& a);
bool is_square(const Mat& a);
bool is_hermitian(const Mat& a, double tol = kTol);
bool is_unitary(const Mat& a, double tol = kTol);
bool is_density(const Mat& a, double tol = kTol);
bool all_finite(const Mat& a);

Mat identity(int d);
Mat sigma_x();
Mat sigma_y();
Mat sigma_z();
Mat ket(int d, int i);
Mat projector(const Mat& psi);
Mat kron(const Mat& a, const Mat& b);

// Orthonormal operator basis under the Hilbert-Schmidt product.
// The ket-bra basis lists |n><n| first, then for every n < m the pair
// |n><m|, |m><n|. For a qubit this is {|0><0|, |1><1|, |0><1|, |1><0|}.
class OperatorBasis {
 public:
  static OperatorBasis ketbra(int d);
  static OperatorBasis from_elements(std::vector<Mat> elements, double tol = kTol);

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(elements_.size()); }
  bool is_ketbra() const { return ketbra_; }
  const Mat& operator[](int k) const { return elements_[k]; }

  // ket-bra only
  int index(int n, int m) const { return index_[n * dim_ + m]; }
  std::pair<int, int> entry(int k) const { return entries_[k]; }

  Vec vectorize(const Mat& a) const;
  Mat unvectorize(const Vec& v) const;

 private:
  OperatorBasis() = default;
  int dim_ = 0;
  bool ketbra_ = false;
  std::vector<Mat> elements_;
  std::vector<int> index_;
  std::vector<std::pair<int, int>> entries_;
};

using BasisPtr = std::shared_ptr<const OperatorBasis>;

// Shared immutable ket-bra basis for dimension d.
BasisPtr ketbra_basis(int d);

class SuperOperator {
 public:
  SuperOperator() = default;
  SuperOperator(BasisPtr basis, Mat matrix);

  static SuperOperator identity(int d);
  static SuperOperator zero(int d);
  // A_nm = tr(E_n^dag action(E_m))
  static SuperOperator from_action(BasisPtr basis, const std::function<Mat(const Mat&)>& action);

  int dim() const { return basis_ ? basis_->dim() : 0; }
  const Mat& matrix() const { return m_; }
  Mat& matrix() { return m_; }
  const BasisPtr& basis() const { return basis_; }

  Mat apply(const Mat& a) const;
  SuperOperator in_basis(const BasisPtr& other) const;

  SuperOperator operator*(const SuperOperator& o) const;
  SuperOperator operator+(const SuperOperator& o) const;
  SuperOperator operator-(const SuperOperator& o) const;
  SuperOperator operator*(cplx s) const;

 private:
  BasisPtr basis_;
  Mat m_;
};

inline SuperOperator operator*(cplx s, const SuperOperator& a) { return a * s; }

cplx hs_inner(const Mat& a, const Mat& b);

// Matrix of A -> hA - Ah (no factor -i).
SuperOperator commutator_super(const Mat& h, BasisPtr basis = nullptr);
SuperOperator anticommutator_super(const Mat& h, BasisPtr basis = nullptr);
// Matrix of A -> l A r.
SuperOperator left_right_super(const Mat& l, const Mat& r, BasisPtr basis = nullptr);

struct CompositeSpace {
  int dimS = 0;
  int dimE = 0;
  int dim() const { return dimS * dimE; }
};

Mat partial_trace_E(const Mat& a, int dimS, int dimE);
Mat partial_trace_S(const Mat& a, int dimS, int dimE);
inline Mat partial_trace_E(const Mat& a, const CompositeSpace& c) {
  return partial_trace_E(a, c.dimS, c.dimE);
}

Mat matrix_exp(const Mat& a);
SuperOperator matrix_exp(const SuperOperator& a);
// exp(-i t h) for Hermitian h via one eigendecomposition
Mat unitary_exp(const Mat& h, double t);

double entropy(const Mat& rho, double tol = kTol, double eps_cut = kEpsCut);

// Choi matrix sum_nm |n><m| (x) S(|n><m|).
Mat choi_matrix(const SuperOperator& s);
double min_choi_eigenvalue(const SuperOperator& s);

// Test and demo helpers.
Mat random_hermitian(int d, std::mt19937_64& rng, double scale = 1.0);
Mat random_unitary(int d, std::mt19937_64& rng);
Mat random_density(int d, std::mt19937_64& rng);
Mat gibbs_state(const Mat& h, double beta);

}  // namespace openqs
