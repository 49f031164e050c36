#pragma once

// Cross-subject graphs over the global sample index. The global index is
// subject-major: all samples of subject 0, then subject 1, and so on.

#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gdm/error.hpp"
#include "gdm/linalg.hpp"

namespace gdm {

constexpr double symmetry_tolerance = 1e-12;

class CrossSubjectGraph {
public:
  CrossSubjectGraph() = default;

  // Rejects asymmetry beyond 1e-12 absolute, then stores the exactly
  // symmetric average of `weights` and its transpose.
  CrossSubjectGraph(Matrix weights, std::vector<Index> block_sizes)
      : weights_(std::move(weights)), block_sizes_(std::move(block_sizes)) {
    require(weights_.rows() == weights_.cols(), ErrorKind::invalid_graph, "graph matrix must be square");
    const Index total = std::accumulate(block_sizes_.begin(), block_sizes_.end(), Index{0});
    require(total == weights_.rows(), ErrorKind::invalid_graph,
            "graph size " + std::to_string(weights_.rows()) + " does not match total sample count " +
                std::to_string(total));
    require(all_finite(weights_), ErrorKind::invalid_graph, "graph contains non-finite weights");
    const double asym = max_abs(weights_ - weights_.transpose());
    require(asym <= symmetry_tolerance, ErrorKind::invalid_graph,
            "graph is not symmetric (max asymmetry " + std::to_string(asym) + ")");
    const Matrix sym = 0.5 * (weights_ + weights_.transpose());
    weights_ = sym;
  }

  const Matrix& weights() const noexcept { return weights_; }
  Index size() const noexcept { return weights_.rows(); }
  const std::vector<Index>& block_sizes() const noexcept { return block_sizes_; }
  std::size_t subject_count() const noexcept { return block_sizes_.size(); }

  Index block_offset(std::size_t subject) const {
    require(subject < block_sizes_.size(), ErrorKind::index, "subject index out of range");
    return std::accumulate(block_sizes_.begin(), block_sizes_.begin() + static_cast<std::ptrdiff_t>(subject), Index{0});
  }

private:
  Matrix weights_;
  std::vector<Index> block_sizes_;
};

struct Laplacian {
  Matrix entries;
  Vector degrees;
  std::vector<Index> block_sizes;

  Index size() const noexcept { return entries.rows(); }
};

using LabelSequence = std::vector<int>;

// G[a][b] = +1 when samples a and b share a category, -1 otherwise.
// Self-loops get +1; they cancel in D - G.
inline CrossSubjectGraph build_category_graph(const std::vector<LabelSequence>& labels) {
  std::vector<Index> sizes;
  std::vector<int> flat;
  for (const auto& seq : labels) {
    sizes.push_back(static_cast<Index>(seq.size()));
    flat.insert(flat.end(), seq.begin(), seq.end());
  }
  const auto n = static_cast<Index>(flat.size());
  Matrix g(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) g(i, j) = flat[i] == flat[j] ? 1.0 : -1.0;
  return CrossSubjectGraph(std::move(g), std::move(sizes));
}

inline CrossSubjectGraph build_category_graph(const std::vector<std::optional<LabelSequence>>& labels) {
  std::vector<LabelSequence> present;
  present.reserve(labels.size());
  for (std::size_t s = 0; s < labels.size(); ++s) {
    require(labels[s].has_value(), ErrorKind::labeled_data_required,
            "category graph needs labels for every sample; subject " + std::to_string(s) + " has none");
    present.push_back(*labels[s]);
  }
  return build_category_graph(present);
}

// G[a][b] = weight when a and b share a within-subject time index (including
// a == b), 0 otherwise. The default weight 1/M makes every row sum to 1.
inline CrossSubjectGraph build_temporal_graph(Index subject_count, Index samples_per_subject,
                                              std::optional<double> weight = std::nullopt) {
  require(subject_count >= 1 && samples_per_subject >= 1, ErrorKind::parameter,
          "temporal graph needs at least one subject and one sample per subject");
  const double w = weight.value_or(1.0 / static_cast<double>(subject_count));
  const Index n = subject_count * samples_per_subject;
  Matrix g = Matrix::Zero(n, n);
  for (Index a = 0; a < n; ++a)
    for (Index b = a % samples_per_subject; b < n; b += samples_per_subject) g(a, b) = w;
  return CrossSubjectGraph(std::move(g), std::vector<Index>(static_cast<std::size_t>(subject_count), samples_per_subject));
}

struct SubsetGraph {
  CrossSubjectGraph graph;
  std::vector<Index> old_to_new;  // -1 for dropped samples
};

// Principal submatrix on the kept samples. `keep[s]` lists local indices of
// subject s, strictly increasing.
inline SubsetGraph build_subset_graph(const CrossSubjectGraph& base, const std::vector<std::vector<Index>>& keep) {
  require(keep.size() == base.subject_count(), ErrorKind::index,
          "subset lists " + std::to_string(keep.size()) + " subjects, graph has " +
              std::to_string(base.subject_count()));
  std::vector<Index> global;
  std::vector<Index> sizes;
  Index offset = 0;
  for (std::size_t s = 0; s < keep.size(); ++s) {
    const Index block = base.block_sizes()[s];
    for (std::size_t k = 0; k < keep[s].size(); ++k) {
      const Index local = keep[s][k];
      require(local >= 0 && local < block, ErrorKind::index,
              "subject " + std::to_string(s) + " index " + std::to_string(local) + " out of range [0, " +
                  std::to_string(block) + ")");
      require(k == 0 || keep[s][k - 1] < local, ErrorKind::index,
              "subject " + std::to_string(s) + " keep indices must be strictly increasing");
      global.push_back(offset + local);
    }
    sizes.push_back(static_cast<Index>(keep[s].size()));
    offset += block;
  }
  const auto n = static_cast<Index>(global.size());
  Matrix g(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) g(i, j) = base.weights()(global[i], global[j]);
  SubsetGraph out{CrossSubjectGraph(std::move(g), std::move(sizes)), std::vector<Index>(base.size(), -1)};
  for (Index k = 0; k < n; ++k) out.old_to_new[global[k]] = k;
  return out;
}

// L = diag(D) - G with signed degrees D[i] = sum_j G[i][j].
inline Laplacian laplacian(const Matrix& g, std::vector<Index> block_sizes = {}) {
  require(g.rows() == g.cols(), ErrorKind::invalid_graph, "graph matrix must be square");
  const double asym = max_abs(g - g.transpose());
  require(asym <= symmetry_tolerance, ErrorKind::invalid_graph,
          "graph is not symmetric (max asymmetry " + std::to_string(asym) + ")");
  if (block_sizes.empty() && g.rows() > 0) block_sizes = {g.rows()};
  Laplacian out{-g, g.rowwise().sum(), std::move(block_sizes)};
  out.entries.diagonal() += out.degrees;
  return out;
}

inline Laplacian laplacian(const CrossSubjectGraph& g) { return laplacian(g.weights(), g.block_sizes()); }

}  // namespace gdm
