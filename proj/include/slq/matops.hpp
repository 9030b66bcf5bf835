#pragma once

#include <Eigen/Dense>
#include <vector>

namespace slq {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/** Kronecker product A ⊗ B. Satisfies vec(AXB) = (Bᵀ ⊗ A) vec(X) with
 *  column-major vec. */
Mat kron(const Eigen::Ref<const Mat>& A, const Eigen::Ref<const Mat>& B);

/** Column-major vectorization. */
Vec vec(const Eigen::Ref<const Mat>& M);

/** Inverse of vec: reshape a column-major vector into rows x cols. */
Mat unvec(const Eigen::Ref<const Vec>& v, int rows, int cols);

/** Half-vectorization of a symmetric P with doubled off-diagonals, ordered
 *  [p11, 2 p12, ..., 2 p1n, p22, 2 p23, ..., pnn].
 *  Paired with xbar so that dot(xbar(x), svec(P)) = x' P x. */
Vec svec(const Eigen::Ref<const Mat>& P);

/** Inverse of svec. */
Mat smat(const Eigen::Ref<const Vec>& v, int n);

/** Monomial vector [x1^2, x1 x2, ..., x1 xn, x2^2, ..., xn^2].
 *  No doubling here; the factor 2 lives in svec. */
Vec xbar(const Eigen::Ref<const Vec>& x);

/** Duplication map T (n^2 x n(n+1)/2) with vec(P) = T svec(P) for symmetric P.
 *  Full column rank n(n+1)/2. */
Mat duplication_map(int n);

/** For L (p x q) and T_p = duplication_map(p): lbar(L) = (Lᵀ ⊗ Lᵀ) T_p,
 *  of size q^2 x p(p+1)/2, so that (xᵀ ⊗ xᵀ) lbar(L) svec(S) = (Lx)ᵀ S (Lx)
 *  for symmetric S (p x p). The paper writes K̄_T for lbar(K_T). */
Mat lbar(const Eigen::Ref<const Mat>& L, const Eigen::Ref<const Mat>& T_p);
Mat lbar(const Eigen::Ref<const Mat>& L);

struct LeastSquaresResult {
  Vec theta;        // argmin ||Phi theta - psi||
  double residual;  // ||Phi theta - psi||
  int rank;         // numeric rank of Phi
  double cond;      // sigma_max / sigma_min over retained singular values
};

/** SVD least squares. Numeric rank uses the threshold
 *  max(rows, cols) * eps * sigma_max; rank < cols throws NumericalError
 *  carrying the numeric rank. */
LeastSquaresResult least_squares(const Eigen::Ref<const Mat>& Phi,
                                 const Eigen::Ref<const Vec>& psi);

/** Numeric rank of M under the same threshold rule as least_squares. */
int numeric_rank(const Eigen::Ref<const Mat>& M);

Mat symmetrize(const Eigen::Ref<const Mat>& M);
bool is_symmetric(const Eigen::Ref<const Mat>& M, double tol = 1e-12);

/** Smallest eigenvalue of a symmetric matrix. */
double sym_min_eig(const Eigen::Ref<const Mat>& M);

/** min eig > tol * max(1, ||M||_F). */
bool is_positive_definite(const Eigen::Ref<const Mat>& M, double tol = 0.0);

/** Reduction-order-independent sum (recursive pairwise halving). */
double pairwise_sum(const std::vector<double>& xs);

}  // namespace slq
