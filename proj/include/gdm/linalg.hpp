#pragma once

// Dense symmetric eigen-solvers backed by LAPACK. Eigen holds the data;
// LAPACKE does the factorizations.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <lapacke.h>

#include "gdm/error.hpp"

namespace gdm {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

constexpr double machine_epsilon = std::numeric_limits<double>::epsilon();

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

// Flip each column so that its largest-magnitude entry (first one on ties) is positive.
inline void normalize_signs(Matrix& vectors) {
  for (Index j = 0; j < vectors.cols(); ++j) {
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < vectors.rows(); ++i) {
      const double a = std::abs(vectors(i, j));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (vectors.rows() > 0 && vectors(arg, j) < 0.0) vectors.col(j) *= -1.0;
  }
}

struct SymmetricSpectrum {
  Vector values;   // ascending
  Matrix vectors;  // columns match values
};

// Full eigendecomposition of a symmetric matrix (lower triangle is read).
inline SymmetricSpectrum symmetric_eigen(const Matrix& a) {
  require(a.rows() == a.cols(), ErrorKind::dimension, "symmetric_eigen needs a square matrix");
  const auto n = static_cast<lapack_int>(a.rows());
  SymmetricSpectrum out{Vector(a.rows()), a};
  if (n == 0) return out;
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, out.vectors.data(), n, out.values.data());
  require(info == 0, ErrorKind::invalid_data, "dsyevd failed with info=" + std::to_string(info));
  normalize_signs(out.vectors);
  return out;
}

struct PartialSpectrum {
  Vector all_values;   // every eigenvalue, descending
  Vector top_values;   // the retained leading eigenvalues, descending
  Matrix top_vectors;  // n x retained, columns match top_values
};

// All eigenvalues plus eigenvectors for the leading `choose(all_values)` of them.
// One tridiagonal reduction is shared by both stages, so eigenvectors cost
// O(n^2 * retained) on top of the reduction.
inline PartialSpectrum top_eigenpairs(const Matrix& a, const std::function<Index(const Vector&)>& choose) {
  require(a.rows() == a.cols(), ErrorKind::dimension, "top_eigenpairs needs a square matrix");
  const Index n = a.rows();
  PartialSpectrum out;
  if (n == 0) {
    out.all_values = Vector(0);
    const Index none = choose(out.all_values);
    require(none == 0, ErrorKind::dimension, "cannot retain eigenpairs of an empty matrix");
    out.top_values = Vector(0);
    out.top_vectors = Matrix(0, 0);
    return out;
  }
  if (n == 1) {
    out.all_values = Vector::Constant(1, a(0, 0));
    const Index keep = choose(out.all_values);
    require(keep >= 0 && keep <= 1, ErrorKind::dimension, "retained count out of range");
    out.top_values = out.all_values.head(keep);
    out.top_vectors = Matrix::Ones(1, keep);
    return out;
  }

  Matrix reflectors = a;
  const auto ln = static_cast<lapack_int>(n);
  std::vector<double> diag(n), offdiag(n), tau(n - 1);
  lapack_int info = LAPACKE_dsytrd(LAPACK_COL_MAJOR, 'L', ln, reflectors.data(), ln, diag.data(), offdiag.data(), tau.data());
  require(info == 0, ErrorKind::invalid_data, "dsytrd failed with info=" + std::to_string(info));
  offdiag[n - 1] = 0.0;

  std::vector<double> values(diag), sub(offdiag.begin(), offdiag.end() - 1);
  info = LAPACKE_dsterf(ln, values.data(), sub.data());
  require(info == 0, ErrorKind::invalid_data, "dsterf failed with info=" + std::to_string(info));
  out.all_values = Vector(n);
  for (Index i = 0; i < n; ++i) out.all_values(i) = values[n - 1 - i];

  const Index keep = choose(out.all_values);
  require(keep >= 0 && keep <= n, ErrorKind::dimension, "retained count out of range");
  if (keep == 0) {
    out.top_values = Vector(0);
    out.top_vectors = Matrix(n, 0);
    return out;
  }

  lapack_int found = 0;
  lapack_logical tryrac = 1;
  std::vector<double> w(n);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(keep));
  Matrix z(n, keep);
  info = LAPACKE_dstemr(LAPACK_COL_MAJOR, 'V', 'I', ln, diag.data(), offdiag.data(), 0.0, 0.0,
                        static_cast<lapack_int>(n - keep + 1), ln, &found, w.data(), z.data(), ln,
                        static_cast<lapack_int>(keep), support.data(), &tryrac);
  require(info == 0 && found == keep, ErrorKind::invalid_data, "dstemr failed with info=" + std::to_string(info));
  info = LAPACKE_dormtr(LAPACK_COL_MAJOR, 'L', 'L', 'N', ln, static_cast<lapack_int>(keep), reflectors.data(), ln,
                        tau.data(), z.data(), ln);
  require(info == 0, ErrorKind::invalid_data, "dormtr failed with info=" + std::to_string(info));

  out.top_values = Vector(keep);
  out.top_vectors = Matrix(n, keep);
  for (Index j = 0; j < keep; ++j) {
    out.top_values(j) = w[keep - 1 - j];
    out.top_vectors.col(j) = z.col(keep - 1 - j);
  }
  normalize_signs(out.top_vectors);
  return out;
}

}  // namespace gdm
