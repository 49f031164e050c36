#pragma once

// Graph-based alignment solver.
//
// For each subject the centered Gram K_i = V_i D_i V_i^T is truncated to its
// leading L_i eigenpairs (chosen by singular-value energy). The reduced
// problem C = Vhat*^T L Vhat* is L_total x L_total; its K smallest
// eigenvectors Ehat give every subject's map implicitly as
//   W_i = Phi_i Vhat_i Dhat_i^-1 Ehat_i,
// so a new sample z of subject i lands at Ehat_i^T Dhat_i^-1 Vhat_i^T k_c(z),
// where k_c(z) are its centered kernel values against the training samples.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <future>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gdm/dataset.hpp"
#include "gdm/error.hpp"
#include "gdm/graph.hpp"
#include "gdm/kernel.hpp"
#include "gdm/linalg.hpp"

namespace gdm {

struct SubjectBasis {
  Matrix eigvecs;  // T_i x L_i, orthonormal columns
  Vector eigvals;  // L_i, positive, descending
  Index retained_dim = 0;
  Index total_rank = 0;
  double energy_kept = 0.0;  // realized sum sqrt(retained) / sum sqrt(all positive)
};

// Eigenvalues at or below T * eps * lambda_max count as rank deficiency.
inline double rank_tolerance(Index size, double lambda_max) {
  return static_cast<double>(size) * machine_epsilon * lambda_max;
}

// Smallest L whose cumulative singular-value fraction reaches energy/100.
// `singular_values` are descending and positive.
inline Index energy_dimension(const Vector& singular_values, double energy_percent) {
  const Index s = singular_values.size();
  if (energy_percent >= 100.0) return s;
  const double total = singular_values.sum();
  const double target = energy_percent / 100.0;
  double cumulative = 0.0;
  for (Index l = 0; l < s; ++l) {
    cumulative += singular_values(l);
    if (cumulative / total >= target - 1e-12) return l + 1;
  }
  return s;
}

inline SubjectBasis subject_basis(const GramMatrix& k_centered, double energy_percent) {
  require(energy_percent > 0.0 && energy_percent <= 100.0, ErrorKind::parameter,
          "energy must lie in (0, 100], got " + std::to_string(energy_percent));
  require(k_centered.entries.rows() == k_centered.entries.cols(), ErrorKind::dimension, "Gram matrix must be square");
  const Index t = k_centered.entries.rows();
  SubjectBasis basis;
  const auto choose = [&](const Vector& desc) -> Index {
    require(desc.size() > 0 && desc(0) > 0.0, ErrorKind::degenerate_subject,
            "centered Gram has no positive eigenvalue (constant data?)");
    const double tol = rank_tolerance(t, desc(0));
    Index s = 0;
    while (s < desc.size() && desc(s) > tol) ++s;
    const Vector sv = desc.head(s).cwiseSqrt();
    basis.total_rank = s;
    basis.retained_dim = energy_dimension(sv, energy_percent);
    basis.energy_kept = sv.head(basis.retained_dim).sum() / sv.sum();
    return basis.retained_dim;
  };
  PartialSpectrum spectrum = top_eigenpairs(k_centered.entries, choose);
  basis.eigvecs = std::move(spectrum.top_vectors);
  basis.eigvals = std::move(spectrum.top_values);
  return basis;
}

// C(i,j) = Vhat_i^T L(i,j) Vhat_j, without forming the block-diagonal Vhat*.
inline Matrix assemble_core(const std::vector<SubjectBasis>& bases, const Laplacian& lap) {
  Index total = 0;
  Index reduced = 0;
  for (const auto& b : bases) {
    total += b.eigvecs.rows();
    reduced += b.eigvecs.cols();
  }
  require(total == lap.size(), ErrorKind::assembly,
          "bases cover " + std::to_string(total) + " samples, Laplacian has " + std::to_string(lap.size()));
  if (!lap.block_sizes.empty() && lap.block_sizes.size() == bases.size())
    for (std::size_t i = 0; i < bases.size(); ++i)
      require(lap.block_sizes[i] == bases[i].eigvecs.rows(), ErrorKind::assembly,
              "subject " + std::to_string(i) + " basis rows do not match its Laplacian block");

  Matrix core(reduced, reduced);
  Index col_sample = 0, col_reduced = 0;
  for (const auto& bj : bases) {
    const Index tj = bj.eigvecs.rows(), lj = bj.eigvecs.cols();
    const Matrix lv = lap.entries.middleCols(col_sample, tj) * bj.eigvecs;  // T x L_j
    Index row_sample = 0, row_reduced = 0;
    for (const auto& bi : bases) {
      const Index ti = bi.eigvecs.rows(), li = bi.eigvecs.cols();
      core.block(row_reduced, col_reduced, li, lj).noalias() = bi.eigvecs.transpose() * lv.middleRows(row_sample, ti);
      row_sample += ti;
      row_reduced += li;
    }
    col_sample += tj;
    col_reduced += lj;
  }
  const Matrix sym = 0.5 * (core + core.transpose());
  return sym;
}

struct ReducedSolution {
  Matrix ehat;         // size x K
  Vector eigenvalues;  // all of them, ascending
};

inline ReducedSolution solve_reduced(const Matrix& core, Index k) {
  require(core.rows() == core.cols(), ErrorKind::dimension, "reduced matrix must be square");
  require(k >= 1, ErrorKind::parameter, "K must be >= 1");
  require(k <= core.rows(), ErrorKind::infeasible,
          "K=" + std::to_string(k) + " exceeds the reduced dimension " + std::to_string(core.rows()) +
              "; no orthonormal solution exists");
  SymmetricSpectrum spectrum = symmetric_eigen(core);
  return {spectrum.vectors.leftCols(k), std::move(spectrum.values)};
}

inline double eigengap_at(const Vector& ascending, Index k) {
  if (k >= ascending.size()) return std::numeric_limits<double>::infinity();
  return ascending(k) - ascending(k - 1);
}

struct SubjectModel {
  std::string id;
  Matrix train;  // standardized training data, voxels x T_i
  StandardizationStats stats;
  KernelSpec kernel;
  double energy_percent = 100.0;
  Matrix gram_raw;  // uncentered training Gram, needed to center new samples
  SubjectBasis basis;
  Matrix ehat;  // L_i x K
};

struct AlignmentModel {
  std::vector<SubjectModel> subjects;
  Index k = 0;
  Vector reduced_eigenvalues;  // ascending
  double eigengap = 0.0;       // +inf when K equals the reduced dimension
  double objective = 0.0;
  std::string solver = "gdm";

  std::optional<std::size_t> find(const std::string& id) const {
    for (std::size_t i = 0; i < subjects.size(); ++i)
      if (subjects[i].id == id) return i;
    return std::nullopt;
  }

  // Y_i = Ehat_i^T Vhat_i^T, K x T_i.
  Matrix training_responses(std::size_t subject) const {
    require(subject < subjects.size(), ErrorKind::index, "subject index out of range");
    const SubjectModel& s = subjects[subject];
    return s.ehat.transpose() * s.basis.eigvecs.transpose();
  }

  Matrix training_responses() const {
    Index total = 0;
    for (const auto& s : subjects) total += s.basis.eigvecs.rows();
    Matrix y(k, total);
    Index offset = 0;
    for (std::size_t i = 0; i < subjects.size(); ++i) {
      const Index t = subjects[i].basis.eigvecs.rows();
      y.middleCols(offset, t) = training_responses(i);
      offset += t;
    }
    return y;
  }

  std::vector<Index> retained_dims() const {
    std::vector<Index> out;
    for (const auto& s : subjects) out.push_back(s.basis.retained_dim);
    return out;
  }
};

struct FitOptions {
  std::vector<KernelSpec> kernels{KernelSpec::linear()};  // one for all, or one per subject
  std::vector<double> energies{82.0};                     // percent; one for all, or one per subject
  Index k = 10;
  unsigned threads = 1;
};

namespace detail {

template <typename T>
const T& per_subject(const std::vector<T>& values, std::size_t subject, std::size_t count, const char* what) {
  require(values.size() == 1 || values.size() == count, ErrorKind::parameter,
          std::string("expected 1 or ") + std::to_string(count) + " " + what + ", got " + std::to_string(values.size()));
  return values.size() == 1 ? values.front() : values[subject];
}

inline void check_graph_matches(const MultiSubjectDataset& data, const Laplacian& lap) {
  require(lap.size() == data.total_samples(), ErrorKind::dimension,
          "graph has " + std::to_string(lap.size()) + " nodes, dataset has " + std::to_string(data.total_samples()) +
              " samples");
  if (lap.block_sizes.size() == data.subject_count())
    require(lap.block_sizes == data.sample_counts(), ErrorKind::dimension, "graph blocks do not match subject sizes");
}

// Runs job(i) for i in [0, n) on up to `threads` workers; rethrows the first
// failure in index order.
template <typename Job>
void parallel_for(std::size_t n, unsigned threads, Job&& job) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  for (std::size_t start = 0; start < n; start += threads) {
    std::vector<std::future<void>> wave;
    for (std::size_t i = start; i < std::min(n, start + threads); ++i)
      wave.push_back(std::async(std::launch::async, [&, i] {
        try {
          job(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }));
    for (auto& f : wave) f.get();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct PreparedSubject {
  Matrix train;
  StandardizationStats stats;
  Matrix gram_raw;
  GramMatrix gram_centered;
};

inline PreparedSubject prepare_subject(const Subject& subject, const KernelSpec& kernel) {
  try {
    auto [train, stats] = standardize(subject.data);
    GramMatrix raw = gram(train, kernel);
    GramMatrix centered = center_gram(raw);
    return {std::move(train), std::move(stats), std::move(raw.entries), std::move(centered)};
  } catch (const Error& e) {
    throw Error(e.kind(), "subject '" + subject.id + "': " + e.what());
  }
}

}  // namespace detail

inline AlignmentModel fit(const MultiSubjectDataset& data, const Laplacian& lap, const FitOptions& options) {
  const std::size_t m = data.subject_count();
  require(m >= 1, ErrorKind::parameter, "dataset has no subjects");
  require(options.k >= 1, ErrorKind::parameter, "K must be >= 1");
  detail::check_graph_matches(data, lap);

  AlignmentModel model;
  model.k = options.k;
  model.subjects.resize(m);
  detail::parallel_for(m, options.threads, [&](std::size_t i) {
    const Subject& subject = data.subject(i);
    SubjectModel& out = model.subjects[i];
    out.id = subject.id;
    out.kernel = detail::per_subject(options.kernels, i, m, "kernels");
    out.energy_percent = detail::per_subject(options.energies, i, m, "energies");
    detail::PreparedSubject prepared = detail::prepare_subject(subject, out.kernel);
    try {
      out.basis = subject_basis(prepared.gram_centered, out.energy_percent);
    } catch (const Error& e) {
      throw Error(e.kind(), "subject '" + subject.id + "': " + e.what());
    }
    out.train = std::move(prepared.train);
    out.stats = std::move(prepared.stats);
    out.gram_raw = std::move(prepared.gram_raw);
  });

  std::vector<SubjectBasis> bases;
  for (const auto& s : model.subjects) bases.push_back(s.basis);
  const Matrix core = assemble_core(bases, lap);
  ReducedSolution reduced = solve_reduced(core, options.k);

  Index offset = 0;
  for (auto& s : model.subjects) {
    s.ehat = reduced.ehat.middleRows(offset, s.basis.retained_dim);
    offset += s.basis.retained_dim;
  }
  model.objective = reduced.eigenvalues.head(options.k).sum();
  model.eigengap = eigengap_at(reduced.eigenvalues, options.k);
  model.reduced_eigenvalues = std::move(reduced.eigenvalues);
  return model;
}

inline AlignmentModel fit(const MultiSubjectDataset& data, const CrossSubjectGraph& graph, const FitOptions& options) {
  return fit(data, laplacian(graph), options);
}

struct SharedResponses {
  Matrix matrix;  // K x n
  std::size_t subject = 0;
};

inline SharedResponses project(const AlignmentModel& model, std::size_t subject, const Matrix& z) {
  require(subject < model.subjects.size(), ErrorKind::index,
          "subject index " + std::to_string(subject) + " not in model");
  const SubjectModel& s = model.subjects[subject];
  require(z.rows() == s.train.rows(), ErrorKind::dimension,
          "subject '" + s.id + "' expects " + std::to_string(s.train.rows()) + " voxels, got " +
              std::to_string(z.rows()));
  if (z.cols() == 0) return {Matrix(model.k, 0), subject};
  const Matrix zs = apply_standardization(z, s.stats);
  const Matrix centered = center_cross_gram(kernel_matrix(zs, s.train, s.kernel), s.gram_raw);  // E x T
  const Matrix coords = s.basis.eigvals.cwiseInverse().asDiagonal() * (s.basis.eigvecs.transpose() * centered.transpose());
  return {s.ehat.transpose() * coords, subject};
}

inline SharedResponses project(const AlignmentModel& model, const std::string& id, const Matrix& z) {
  const auto index = model.find(id);
  require(index.has_value(), ErrorKind::index, "subject '" + id + "' not in model");
  return project(model, *index, z);
}

// tr(Y L Y^T).
inline double objective(const Matrix& y, const Laplacian& lap) {
  require(y.cols() == lap.size(), ErrorKind::dimension,
          "responses have " + std::to_string(y.cols()) + " samples, Laplacian has " + std::to_string(lap.size()));
  return (y * lap.entries).cwiseProduct(y).sum();
}

struct NaiveOptions {
  std::vector<KernelSpec> kernels{KernelSpec::linear()};
  Index k = 10;
  Index max_samples = 3000;  // dense T x T work guard
};

// Reference solver: substitutes W_i = Phi_i B_i and solves the generalized
// eigenproblem  K* L K* b = lambda K* K* b  densely over all T samples,
// whitening by the pseudo-inverse square root of K* K* on its positive range.
// Subject bases at full energy are attached only so the result can be used
// through the same projection path as `fit`.
inline AlignmentModel naive_fit(const MultiSubjectDataset& data, const Laplacian& lap, const NaiveOptions& options) {
  const std::size_t m = data.subject_count();
  require(m >= 1, ErrorKind::parameter, "dataset has no subjects");
  require(options.k >= 1, ErrorKind::parameter, "K must be >= 1");
  detail::check_graph_matches(data, lap);
  const Index t = data.total_samples();
  require(t <= options.max_samples, ErrorKind::parameter,
          "naive solver limited to " + std::to_string(options.max_samples) + " samples, got " + std::to_string(t));

  AlignmentModel model;
  model.k = options.k;
  model.solver = "naive";
  model.subjects.resize(m);
  Matrix kstar = Matrix::Zero(t, t);
  Index offset = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const Subject& subject = data.subject(i);
    SubjectModel& out = model.subjects[i];
    out.id = subject.id;
    out.kernel = detail::per_subject(options.kernels, i, m, "kernels");
    out.energy_percent = 100.0;
    detail::PreparedSubject prepared = detail::prepare_subject(subject, out.kernel);
    const Index ti = subject.data.cols();
    kstar.block(offset, offset, ti, ti) = prepared.gram_centered.entries;
    out.basis = subject_basis(prepared.gram_centered, 100.0);
    out.train = std::move(prepared.train);
    out.stats = std::move(prepared.stats);
    out.gram_raw = std::move(prepared.gram_raw);
    offset += ti;
  }

  Matrix numerator = kstar * lap.entries * kstar;
  numerator = (0.5 * (numerator + numerator.transpose())).eval();
  Matrix metric = kstar * kstar;
  metric = (0.5 * (metric + metric.transpose())).eval();

  const SymmetricSpectrum metric_spectrum = symmetric_eigen(metric);
  const double mu_max = metric_spectrum.values(t - 1);
  require(mu_max > 0.0, ErrorKind::degenerate_subject, "all Gram matrices vanish");
  const double tol = rank_tolerance(t, mu_max);
  Index first = 0;
  while (first < t && metric_spectrum.values(first) <= tol) ++first;
  const Index range = t - first;
  require(options.k <= range, ErrorKind::infeasible,
          "K=" + std::to_string(options.k) + " exceeds the rank " + std::to_string(range) + " of K*K*");

  const Matrix whitening = metric_spectrum.vectors.rightCols(range) *
                           metric_spectrum.values.tail(range).cwiseSqrt().cwiseInverse().asDiagonal();
  Matrix reduced = whitening.transpose() * numerator * whitening;
  reduced = (0.5 * (reduced + reduced.transpose())).eval();
  const SymmetricSpectrum reduced_spectrum = symmetric_eigen(reduced);
  const Matrix coefficients = whitening * reduced_spectrum.vectors.leftCols(options.k);  // B, T x K
  const Matrix y = coefficients.transpose() * kstar;

  offset = 0;
  for (auto& s : model.subjects) {
    const Index ti = s.basis.eigvecs.rows();
    // Ehat_i = Dhat_i Vhat_i^T B_i reproduces Y_i = B_i^T K_i through the basis.
    s.ehat = s.basis.eigvals.asDiagonal() * (s.basis.eigvecs.transpose() * coefficients.middleRows(offset, ti));
    offset += ti;
  }
  model.reduced_eigenvalues = reduced_spectrum.values;
  model.eigengap = eigengap_at(reduced_spectrum.values, options.k);
  model.objective = objective(y, lap);
  return model;
}

inline AlignmentModel naive_fit(const MultiSubjectDataset& data, const CrossSubjectGraph& graph,
                                const NaiveOptions& options) {
  return naive_fit(data, laplacian(graph), options);
}

struct HaObjectivePair {
  double lhs = 0.0;  // sum_i ||W_i^T X_i - S*||^2
  double rhs = 0.0;  // tr(W^T X* (I - G_HA) X*^T W)
};

inline HaObjectivePair ha_objective_pair(const std::vector<Matrix>& maps, const std::vector<Matrix>& data) {
  require(!data.empty() && maps.size() == data.size(), ErrorKind::dimension, "need one map per subject");
  const auto m = static_cast<Index>(data.size());
  const Index t0 = data.front().cols();
  const Index k = maps.front().cols();
  Index voxels = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    require(data[i].cols() == t0, ErrorKind::dimension, "subjects must be temporally aligned");
    require(maps[i].rows() == data[i].rows() && maps[i].cols() == k, ErrorKind::dimension,
            "map " + std::to_string(i) + " shape mismatch");
    voxels += data[i].rows();
  }

  Matrix shared = Matrix::Zero(k, t0);
  for (std::size_t i = 0; i < data.size(); ++i) shared += maps[i].transpose() * data[i];
  shared /= static_cast<double>(m);
  HaObjectivePair out;
  for (std::size_t i = 0; i < data.size(); ++i) out.lhs += (maps[i].transpose() * data[i] - shared).squaredNorm();

  Matrix w(voxels, k);
  Matrix xstar = Matrix::Zero(voxels, m * t0);
  Index row = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Index vi = data[i].rows();
    w.middleRows(row, vi) = maps[i];
    xstar.block(row, static_cast<Index>(i) * t0, vi, t0) = data[i];
    row += vi;
  }
  const CrossSubjectGraph g_ha = build_temporal_graph(m, t0);
  const Matrix residual = Matrix::Identity(m * t0, m * t0) - g_ha.weights();
  out.rhs = (w.transpose() * xstar * residual * xstar.transpose() * w).trace();
  return out;
}

}  // namespace gdm
