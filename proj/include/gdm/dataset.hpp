#pragma once

// Multi-subject data. Samples are COLUMNS: subject i contributes a V_i x T_i
// matrix. Voxel counts may differ between subjects.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/QR>

#include "gdm/error.hpp"
#include "gdm/graph.hpp"
#include "gdm/linalg.hpp"
#include "gdm/rng.hpp"

namespace gdm {

struct Subject {
  std::string id;
  Matrix data;                          // voxels x samples
  std::optional<LabelSequence> labels;  // one per sample when present
};

class MultiSubjectDataset {
public:
  MultiSubjectDataset() = default;

  explicit MultiSubjectDataset(std::vector<Subject> subjects) : subjects_(std::move(subjects)) {
    offsets_.reserve(subjects_.size() + 1);
    for (const auto& s : subjects_) {
      require(s.data.cols() >= 1, ErrorKind::insufficient_samples, "subject '" + s.id + "' has no samples");
      if (s.labels)
        require(static_cast<Index>(s.labels->size()) == s.data.cols(), ErrorKind::dimension,
                "subject '" + s.id + "' has " + std::to_string(s.labels->size()) + " labels for " +
                    std::to_string(s.data.cols()) + " samples");
      offsets_.push_back(offsets_.back() + s.data.cols());
    }
  }

  std::size_t subject_count() const noexcept { return subjects_.size(); }
  const Subject& subject(std::size_t i) const {
    require(i < subjects_.size(), ErrorKind::index, "subject index " + std::to_string(i) + " out of range");
    return subjects_[i];
  }
  const std::vector<Subject>& subjects() const noexcept { return subjects_; }

  Index samples(std::size_t i) const { return subject(i).data.cols(); }
  Index total_samples() const noexcept { return offsets_.empty() ? 0 : offsets_.back(); }

  std::vector<Index> sample_counts() const {
    std::vector<Index> out;
    for (const auto& s : subjects_) out.push_back(s.data.cols());
    return out;
  }

  Index global_index(std::size_t subject_index, Index local) const {
    require(local >= 0 && local < samples(subject_index), ErrorKind::index, "local sample index out of range");
    return offsets_[subject_index] + local;
  }

  std::pair<std::size_t, Index> locate(Index global) const {
    require(global >= 0 && global < total_samples(), ErrorKind::index, "global sample index out of range");
    const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), global);
    const auto s = static_cast<std::size_t>(it - offsets_.begin() - 1);
    return {s, global - offsets_[s]};
  }

  bool labeled() const {
    return std::all_of(subjects_.begin(), subjects_.end(), [](const Subject& s) { return s.labels.has_value(); });
  }

  std::vector<std::optional<LabelSequence>> label_sequences() const {
    std::vector<std::optional<LabelSequence>> out;
    for (const auto& s : subjects_) out.push_back(s.labels);
    return out;
  }

  std::optional<std::size_t> find(const std::string& id) const {
    for (std::size_t i = 0; i < subjects_.size(); ++i)
      if (subjects_[i].id == id) return i;
    return std::nullopt;
  }

  // Keeps the listed local columns (in the listed order) of every subject.
  MultiSubjectDataset select(const std::vector<std::vector<Index>>& keep) const {
    require(keep.size() == subjects_.size(), ErrorKind::index, "selection must list every subject");
    std::vector<Subject> out;
    for (std::size_t s = 0; s < subjects_.size(); ++s) {
      const Subject& src = subjects_[s];
      Subject dst{src.id, Matrix(src.data.rows(), static_cast<Index>(keep[s].size())), std::nullopt};
      if (src.labels) dst.labels.emplace();
      for (std::size_t k = 0; k < keep[s].size(); ++k) {
        const Index j = keep[s][k];
        require(j >= 0 && j < src.data.cols(), ErrorKind::index, "subject '" + src.id + "' index out of range");
        dst.data.col(static_cast<Index>(k)) = src.data.col(j);
        if (src.labels) dst.labels->push_back((*src.labels)[j]);
      }
      out.push_back(std::move(dst));
    }
    return MultiSubjectDataset(std::move(out));
  }

private:
  std::vector<Subject> subjects_;
  std::vector<Index> offsets_{0};
};

inline std::vector<LabelSequence> require_labels(const MultiSubjectDataset& data) {
  std::vector<LabelSequence> out;
  for (const auto& s : data.subjects()) {
    require(s.labels.has_value(), ErrorKind::labeled_data_required, "subject '" + s.id + "' has no labels");
    out.push_back(*s.labels);
  }
  return out;
}

struct SynthGroundTruth {
  Matrix shared;               // latent x samples
  std::vector<Matrix> mixings; // voxels x latent, orthonormal columns
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

struct SynthParams {
  Index subjects = 3;
  Index voxels = 30;
  Index samples = 40;
  Index latent = 4;
  Index categories = 4;
  double sigma = 0.1;
  std::uint64_t seed = 0;
  double class_separation = 1.0;  // scale of category mean vectors
  double jitter = 0.1;            // per-sample spread around the category mean
};

// X_i = A_i S + sigma N_i. S holds one Gaussian mean vector per category plus
// per-sample jitter; labels are assigned in contiguous blocks of equal size.
// The latent matrix is shared, so the dataset is temporally aligned.
inline std::pair<MultiSubjectDataset, SynthGroundTruth> synth_dataset(const SynthParams& p) {
  require(p.subjects >= 1, ErrorKind::parameter, "need at least one subject");
  require(p.voxels >= 1 && p.samples >= 1 && p.latent >= 1, ErrorKind::parameter, "sizes must be positive");
  require(p.latent <= std::min(p.voxels, p.samples), ErrorKind::parameter,
          "latent dimension " + std::to_string(p.latent) + " exceeds min(voxels, samples)");
  require(p.categories >= 1 && p.samples % p.categories == 0, ErrorKind::parameter,
          "category count must divide the sample count");
  require(std::isfinite(p.sigma) && p.sigma >= 0.0, ErrorKind::parameter, "sigma must be >= 0");
  require(p.jitter >= 0.0 && p.class_separation >= 0.0, ErrorKind::parameter, "jitter and separation must be >= 0");

  std::normal_distribution<double> normal(0.0, 1.0);
  SynthGroundTruth truth;
  truth.noise_sigma = p.sigma;
  truth.seed = p.seed;

  Engine shared_rng = make_engine(p.seed, "synth/shared");
  Matrix means(p.latent, p.categories);
  for (Index c = 0; c < p.categories; ++c)
    for (Index k = 0; k < p.latent; ++k) means(k, c) = normal(shared_rng);
  if (p.latent >= p.categories) {
    // Orthogonal class means at Gaussian-like scale; random draws can come out nearly coplanar.
    Eigen::HouseholderQR<Matrix> qr(means);
    means = std::sqrt(static_cast<double>(p.latent)) * (qr.householderQ() * Matrix::Identity(p.latent, p.categories));
  }
  means *= p.class_separation;
  const Index block = p.samples / p.categories;
  LabelSequence labels(static_cast<std::size_t>(p.samples));
  truth.shared.resize(p.latent, p.samples);
  for (Index t = 0; t < p.samples; ++t) {
    const Index c = t / block;
    labels[static_cast<std::size_t>(t)] = static_cast<int>(c);
    for (Index k = 0; k < p.latent; ++k) truth.shared(k, t) = means(k, c) + p.jitter * normal(shared_rng);
  }

  std::vector<Subject> subjects;
  for (Index i = 0; i < p.subjects; ++i) {
    Engine rng = make_engine(p.seed, "synth/subject", static_cast<std::uint64_t>(i));
    Matrix g(p.voxels, p.latent);
    for (Index k = 0; k < p.latent; ++k)
      for (Index v = 0; v < p.voxels; ++v) g(v, k) = normal(rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix mixing = qr.householderQ() * Matrix::Identity(p.voxels, p.latent);
    Matrix x = mixing * truth.shared;
    if (p.sigma > 0.0)
      for (Index t = 0; t < p.samples; ++t)
        for (Index v = 0; v < p.voxels; ++v) x(v, t) += p.sigma * normal(rng);
    subjects.push_back({"sub" + std::to_string(i + 1), std::move(x), labels});
    truth.mixings.push_back(std::move(mixing));
  }
  return {MultiSubjectDataset(std::move(subjects)), std::move(truth)};
}

// Local indices (sorted) that survive dropping floor(q/100 * T_i) samples
// per subject, chosen independently per subject.
inline std::vector<std::vector<Index>> retained_samples(const MultiSubjectDataset& data, double q_percent,
                                                        std::uint64_t seed) {
  require(q_percent >= 0.0 && q_percent < 100.0, ErrorKind::parameter, "q must lie in [0, 100)");
  std::vector<std::vector<Index>> keep;
  for (std::size_t s = 0; s < data.subject_count(); ++s) {
    const Subject& sub = data.subject(s);
    const Index t = sub.data.cols();
    const auto drop = static_cast<Index>(std::floor(q_percent / 100.0 * static_cast<double>(t)));
    std::vector<Index> order(static_cast<std::size_t>(t));
    for (Index j = 0; j < t; ++j) order[static_cast<std::size_t>(j)] = j;
    Engine rng = make_engine(seed, "remove_fraction", s);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Index> kept(order.begin() + drop, order.end());
    std::sort(kept.begin(), kept.end());
    require(static_cast<Index>(kept.size()) >= 2, ErrorKind::too_sparse,
            "subject '" + sub.id + "' would keep fewer than 2 samples");
    if (sub.labels) {
      std::map<int, Index> before, after;
      for (const int l : *sub.labels) ++before[l];
      for (const Index j : kept) ++after[(*sub.labels)[static_cast<std::size_t>(j)]];
      for (const auto& [label, count] : before)
        require(after.count(label) > 0, ErrorKind::too_sparse,
                "subject '" + sub.id + "' would lose every sample of category " + std::to_string(label));
    }
    keep.push_back(std::move(kept));
  }
  return keep;
}

// Retained samples keep their original order and labels.
inline MultiSubjectDataset remove_fraction(const MultiSubjectDataset& data, double q_percent, std::uint64_t seed) {
  return data.select(retained_samples(data, q_percent, seed));
}

}  // namespace gdm
