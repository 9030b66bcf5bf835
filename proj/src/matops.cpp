#include "slq/matops.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "slq/errors.hpp"

namespace slq {

Mat kron(const Eigen::Ref<const Mat>& A, const Eigen::Ref<const Mat>& B) {
  Mat out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

Vec vec(const Eigen::Ref<const Mat>& M) {
  return Eigen::Map<const Vec>(M.data(), M.size());
}

Mat unvec(const Eigen::Ref<const Vec>& v, int rows, int cols) {
  if (v.size() != static_cast<Eigen::Index>(rows) * cols)
    throw NumericalError("unvec: size " + std::to_string(v.size()) + " != " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  return Eigen::Map<const Mat>(v.data(), rows, cols);
}

Vec svec(const Eigen::Ref<const Mat>& P) {
  const int n = static_cast<int>(P.rows());
  Vec out(n * (n + 1) / 2);
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) out(k++) = (i == j) ? P(i, i) : 2.0 * P(i, j);
  return out;
}

Mat smat(const Eigen::Ref<const Vec>& v, int n) {
  if (v.size() != n * (n + 1) / 2)
    throw NumericalError("smat: size " + std::to_string(v.size()) + " != n(n+1)/2 for n=" +
                         std::to_string(n));
  Mat P(n, n);
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      P(i, j) = (i == j) ? v(k) : 0.5 * v(k);
      P(j, i) = P(i, j);
      ++k;
    }
  return P;
}

Vec xbar(const Eigen::Ref<const Vec>& x) {
  const int n = static_cast<int>(x.size());
  Vec out(n * (n + 1) / 2);
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) out(k++) = x(i) * x(j);
  return out;
}

Mat duplication_map(int n) {
  Mat T = Mat::Zero(n * n, n * (n + 1) / 2);
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      if (i == j) {
        T(i * n + i, k) = 1.0;
      } else {
        T(j * n + i, k) = 0.5;  // vec index of P(i, j), column-major
        T(i * n + j, k) = 0.5;
      }
      ++k;
    }
  return T;
}

Mat lbar(const Eigen::Ref<const Mat>& L, const Eigen::Ref<const Mat>& T_p) {
  const Mat Lt = L.transpose();
  if (T_p.rows() != Lt.cols() * Lt.cols())
    throw NumericalError("lbar: duplication map does not match L's row dimension");
  return kron(Lt, Lt) * T_p;
}

Mat lbar(const Eigen::Ref<const Mat>& L) {
  return lbar(L, duplication_map(static_cast<int>(L.rows())));
}

namespace {

double rank_threshold(const Eigen::Ref<const Mat>& M, double sigma_max) {
  return static_cast<double>(std::max(M.rows(), M.cols())) *
         std::numeric_limits<double>::epsilon() * sigma_max;
}

}  // namespace

LeastSquaresResult least_squares(const Eigen::Ref<const Mat>& Phi,
                                 const Eigen::Ref<const Vec>& psi) {
  if (Phi.rows() != psi.size())
    throw NumericalError("least_squares: row mismatch");
  Eigen::BDCSVD<Mat> svd(Phi, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  const double thresh = rank_threshold(Phi, sv.size() ? sv(0) : 0.0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > thresh) ++rank;
  if (rank < Phi.cols())
    throw NumericalError("least_squares: rank " + std::to_string(rank) + " < " +
                         std::to_string(Phi.cols()) + " unknowns (singular system)");
  LeastSquaresResult out;
  out.rank = rank;
  out.cond = sv(0) / sv(rank - 1);
  out.theta = svd.solve(psi);
  out.residual = (Phi * out.theta - psi).norm();
  return out;
}

int numeric_rank(const Eigen::Ref<const Mat>& M) {
  if (M.size() == 0) return 0;
  Eigen::BDCSVD<Mat> svd(M);
  const Vec& sv = svd.singularValues();
  const double thresh = rank_threshold(M, sv.size() ? sv(0) : 0.0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > thresh) ++rank;
  return rank;
}

Mat symmetrize(const Eigen::Ref<const Mat>& M) { return 0.5 * (M + M.transpose()); }

bool is_symmetric(const Eigen::Ref<const Mat>& M, double tol) {
  if (M.rows() != M.cols()) return false;
  return (M - M.transpose()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, M.cwiseAbs().maxCoeff());
}

double sym_min_eig(const Eigen::Ref<const Mat>& M) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(M, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

bool is_positive_definite(const Eigen::Ref<const Mat>& M, double tol) {
  return sym_min_eig(M) > tol * std::max(1.0, M.norm());
}

double pairwise_sum(const std::vector<double>& xs) {
  // Recursive halving keeps the reduction order independent of chunking.
  struct Rec {
    static double sum(const double* p, std::size_t len) {
      if (len <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < len; ++i) s += p[i];
        return s;
      }
      const std::size_t half = len / 2;
      return sum(p, half) + sum(p + half, len - half);
    }
  };
  return xs.empty() ? 0.0 : Rec::sum(xs.data(), xs.size());
}

}  // namespace slq
