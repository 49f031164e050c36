#pragma once

// Between-subject classification (BSC). Each subject's samples are split in
// two category-balanced halves; one half aligns, the other is projected and
// classified. Roles of the halves are switched, and subjects are left out in
// contiguous groups of k, giving 2 * M / k folds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <json.hpp>

#include "gdm/dataset.hpp"
#include "gdm/error.hpp"
#include "gdm/graph.hpp"
#include "gdm/kernel.hpp"
#include "gdm/linalg.hpp"
#include "gdm/rng.hpp"
#include "gdm/solver.hpp"

namespace gdm {

struct Fold {
  std::vector<std::vector<Index>> align_part;     // per subject, sorted local indices
  std::vector<std::vector<Index>> classify_part;  // per subject, sorted local indices
  std::vector<std::size_t> train_subjects;
  std::vector<std::size_t> test_subjects;
};

struct FoldPlan {
  std::vector<Fold> folds;
  Index leave_out = 1;
};

inline Index expected_fold_count(Index subjects, Index leave_out) { return subjects / leave_out * 2; }

// Two category-balanced halves per subject. The shuffle inside a category is
// seeded by (seed, label) only, so subjects with identical label sequences get
// identical splits and temporal alignment survives the split.
inline std::pair<std::vector<std::vector<Index>>, std::vector<std::vector<Index>>> split_halves(
    const MultiSubjectDataset& data, std::uint64_t seed) {
  const auto labels = require_labels(data);
  std::vector<std::vector<Index>> first(labels.size()), second(labels.size());
  for (std::size_t s = 0; s < labels.size(); ++s) {
    std::map<int, std::vector<Index>> by_category;
    for (std::size_t j = 0; j < labels[s].size(); ++j) by_category[labels[s][j]].push_back(static_cast<Index>(j));
    std::size_t rank = 0;
    for (auto& [label, members] : by_category) {
      require(members.size() >= 2, ErrorKind::split,
              "subject '" + data.subject(s).id + "' has " + std::to_string(members.size()) + " sample(s) of category " +
                  std::to_string(label) + "; need at least 2");
      Engine rng = make_engine(seed, "folds/category", static_cast<std::uint64_t>(static_cast<std::int64_t>(label)));
      std::shuffle(members.begin(), members.end(), rng);
      // Odd counts alternate which half gets the extra sample.
      const std::size_t take = (members.size() + (rank % 2 == 0 ? 1 : 0)) / 2;
      first[s].insert(first[s].end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
      second[s].insert(second[s].end(), members.begin() + static_cast<std::ptrdiff_t>(take), members.end());
      ++rank;
    }
    std::sort(first[s].begin(), first[s].end());
    std::sort(second[s].begin(), second[s].end());
  }
  return {std::move(first), std::move(second)};
}

inline FoldPlan make_folds(const MultiSubjectDataset& data, Index leave_out, std::uint64_t seed = 0) {
  const auto m = static_cast<Index>(data.subject_count());
  require(leave_out >= 1, ErrorKind::protocol, "leave-out count must be >= 1");
  require(m % leave_out == 0, ErrorKind::protocol,
          std::to_string(m) + " subjects are not divisible into groups of " + std::to_string(leave_out));
  require(m / leave_out >= 2, ErrorKind::protocol, "leaving out every subject leaves nobody to train on");
  auto [first, second] = split_halves(data, seed);

  FoldPlan plan;
  plan.leave_out = leave_out;
  for (int role = 0; role < 2; ++role) {
    for (Index group = 0; group < m / leave_out; ++group) {
      Fold fold;
      fold.align_part = role == 0 ? first : second;
      fold.classify_part = role == 0 ? second : first;
      for (Index s = 0; s < m; ++s) {
        if (s / leave_out == group) fold.test_subjects.push_back(static_cast<std::size_t>(s));
        else fold.train_subjects.push_back(static_cast<std::size_t>(s));
      }
      plan.folds.push_back(std::move(fold));
    }
  }
  return plan;
}

// One-vs-rest regularized least squares on +-1 targets. The bias is not
// penalized, so prediction under heavy regularization falls back to the
// majority class.
struct RidgeOvrClassifier {
  Matrix weights;  // features x classes
  Vector bias;     // classes
  double lambda = 1e-3;
  std::vector<int> classes;  // ascending

  Matrix scores(const Matrix& features) const {
    require(features.rows() == weights.rows(), ErrorKind::dimension,
            "classifier expects " + std::to_string(weights.rows()) + " features, got " +
                std::to_string(features.rows()));
    Matrix out = weights.transpose() * features;
    out.colwise() += bias;
    return out;
  }

  // Ties go to the lowest class id.
  std::vector<int> predict(const Matrix& features) const {
    const Matrix s = scores(features);
    std::vector<int> out(static_cast<std::size_t>(s.cols()));
    for (Index j = 0; j < s.cols(); ++j) {
      Index best = 0;
      for (Index c = 1; c < s.rows(); ++c)
        if (s(c, j) > s(best, j)) best = c;
      out[static_cast<std::size_t>(j)] = classes[static_cast<std::size_t>(best)];
    }
    return out;
  }
};

inline RidgeOvrClassifier train_classifier(const Matrix& features, const LabelSequence& labels, double lambda) {
  require(std::isfinite(lambda) && lambda > 0.0, ErrorKind::parameter, "lambda must be positive");
  require(static_cast<Index>(labels.size()) == features.cols(), ErrorKind::dimension,
          "got " + std::to_string(labels.size()) + " labels for " + std::to_string(features.cols()) + " samples");
  require(all_finite(features), ErrorKind::invalid_data, "classifier features contain non-finite values");
  const std::set<int> distinct(labels.begin(), labels.end());
  require(distinct.size() >= 2, ErrorKind::degenerate_labels, "classifier needs at least two classes");
  require(labels.size() >= distinct.size(), ErrorKind::degenerate_labels, "fewer samples than classes");

  RidgeOvrClassifier clf;
  clf.lambda = lambda;
  clf.classes.assign(distinct.begin(), distinct.end());
  const Index n = features.cols();
  const auto c = static_cast<Index>(clf.classes.size());
  Matrix targets = Matrix::Constant(n, c, -1.0);
  for (Index j = 0; j < n; ++j) {
    const auto pos = std::lower_bound(clf.classes.begin(), clf.classes.end(), labels[static_cast<std::size_t>(j)]);
    targets(j, pos - clf.classes.begin()) = 1.0;
  }
  const Vector feature_mean = features.rowwise().mean();
  const Vector target_mean = targets.colwise().mean().transpose();
  const Matrix centered = features.colwise() - feature_mean;
  Matrix normal = centered * centered.transpose();
  normal.diagonal().array() += lambda;
  clf.weights = normal.ldlt().solve(centered * targets);
  clf.bias = target_mean - clf.weights.transpose() * feature_mean;
  return clf;
}

inline double accuracy(const std::vector<int>& predicted, const LabelSequence& truth) {
  require(predicted.size() == truth.size(), ErrorKind::dimension, "prediction count mismatch");
  if (truth.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

// Builds the fold's graph from the align-part dataset and the local indices
// it was cut from.
using GraphBuilder =
    std::function<CrossSubjectGraph(const MultiSubjectDataset& align, const std::vector<std::vector<Index>>& part)>;

inline GraphBuilder category_graph_builder() {
  return [](const MultiSubjectDataset& align, const std::vector<std::vector<Index>>&) {
    return build_category_graph(align.label_sequences());
  };
}

inline GraphBuilder temporal_graph_builder(std::optional<double> weight = std::nullopt) {
  return [weight](const MultiSubjectDataset& align, const std::vector<std::vector<Index>>&) {
    const Index t0 = align.samples(0);
    for (std::size_t s = 1; s < align.subject_count(); ++s)
      require(align.samples(s) == t0, ErrorKind::protocol, "temporal graph needs equal sample counts per subject");
    return build_temporal_graph(static_cast<Index>(align.subject_count()), t0, weight);
  };
}

// `base` spans the full dataset; each fold keeps its principal submatrix.
inline GraphBuilder subset_graph_builder(CrossSubjectGraph base) {
  return [base = std::move(base)](const MultiSubjectDataset&, const std::vector<std::vector<Index>>& part) {
    return build_subset_graph(base, part).graph;
  };
}

struct EvalConfig {
  GraphBuilder graph = category_graph_builder();
  std::string graph_name = "category";
  std::vector<KernelSpec> kernels{KernelSpec::linear()};
  double energy = 82.0;
  Index k = 10;
  Index leave_out = 1;
  double lambda = 1e-3;
  std::uint64_t seed = 0;
  double incomplete_q = 0.0;  // percent of samples dropped per subject before folding
  unsigned threads = 1;
  // Called with exactly the data handed to the solver for each fold.
  std::function<void(std::size_t fold, const MultiSubjectDataset& align)> on_fit;
};

struct EvalReport {
  std::vector<double> fold_accuracies;
  double mean = 0.0;
  double std = 0.0;  // population convention
  nlohmann::json config;
};

inline void summarize(EvalReport& report) {
  const auto n = static_cast<double>(report.fold_accuracies.size());
  if (report.fold_accuracies.empty()) return;
  report.mean = std::accumulate(report.fold_accuracies.begin(), report.fold_accuracies.end(), 0.0) / n;
  double ss = 0.0;
  for (const double a : report.fold_accuracies) ss += (a - report.mean) * (a - report.mean);
  report.std = std::sqrt(ss / n);
}

namespace detail {

inline std::pair<Matrix, LabelSequence> stack(const std::vector<Matrix>& features,
                                              const std::vector<LabelSequence>& labels,
                                              const std::vector<std::size_t>& subjects) {
  Index cols = 0;
  for (const auto s : subjects) cols += features[s].cols();
  Matrix out(features[subjects.front()].rows(), cols);
  LabelSequence out_labels;
  Index offset = 0;
  for (const auto s : subjects) {
    require(features[s].rows() == out.rows(), ErrorKind::dimension, "subjects disagree on feature count");
    out.middleCols(offset, features[s].cols()) = features[s];
    offset += features[s].cols();
    out_labels.insert(out_labels.end(), labels[s].begin(), labels[s].end());
  }
  return {std::move(out), std::move(out_labels)};
}

inline double classify_fold(const std::vector<Matrix>& features, const std::vector<LabelSequence>& labels,
                            const Fold& fold, double lambda) {
  const auto [train_x, train_y] = stack(features, labels, fold.train_subjects);
  const auto [test_x, test_y] = stack(features, labels, fold.test_subjects);
  const RidgeOvrClassifier clf = train_classifier(train_x, train_y, lambda);
  return accuracy(clf.predict(test_x), test_y);
}

template <typename FoldJob>
EvalReport run_folds(const FoldPlan& plan, unsigned threads, FoldJob&& job) {
  EvalReport report;
  report.fold_accuracies.assign(plan.folds.size(), 0.0);
  parallel_for(plan.folds.size(), threads, [&](std::size_t f) {
    try {
      report.fold_accuracies[f] = job(f, plan.folds[f]);
    } catch (const Error& e) {
      throw Error(ErrorKind::protocol, "fold " + std::to_string(f) + " failed: " + e.what());
    }
  });
  summarize(report);
  return report;
}

}  // namespace detail

inline nlohmann::json config_echo(const EvalConfig& config) {
  nlohmann::json kernels = nlohmann::json::array();
  for (const auto& k : config.kernels) kernels.push_back(to_string(k));
  return {{"k", config.k},           {"energy", config.energy},     {"kernel", kernels},
          {"graph", config.graph_name}, {"leave_out", config.leave_out}, {"lambda", config.lambda},
          {"seed", config.seed},     {"incomplete_q", config.incomplete_q}};
}

inline EvalReport bsc_evaluate(const MultiSubjectDataset& full, const EvalConfig& config) {
  const MultiSubjectDataset data =
      config.incomplete_q > 0.0 ? remove_fraction(full, config.incomplete_q, stream_seed(config.seed, "incomplete"))
                                : full;
  const FoldPlan plan = make_folds(data, config.leave_out, config.seed);
  FitOptions fit_options;
  fit_options.kernels = config.kernels;
  fit_options.energies = {config.energy};
  fit_options.k = config.k;

  EvalReport report = detail::run_folds(plan, config.threads, [&](std::size_t f, const Fold& fold) {
    const MultiSubjectDataset align = data.select(fold.align_part);
    const CrossSubjectGraph graph = config.graph(align, fold.align_part);
    if (config.on_fit) config.on_fit(f, align);
    const AlignmentModel model = fit(align, graph, fit_options);

    const MultiSubjectDataset classify = data.select(fold.classify_part);
    std::vector<Matrix> features;
    for (std::size_t s = 0; s < classify.subject_count(); ++s)
      features.push_back(project(model, s, classify.subject(s).data).matrix);
    return detail::classify_fold(features, require_labels(classify), fold, config.lambda);
  });
  report.config = config_echo(config);
  return report;
}

// Baseline without alignment: the classifier sees raw voxels of the classify
// parts, so every subject must have the same voxel count.
inline EvalReport no_alignment_evaluate(const MultiSubjectDataset& data, Index leave_out, double lambda,
                                        std::uint64_t seed, unsigned threads = 1) {
  const FoldPlan plan = make_folds(data, leave_out, seed);
  EvalReport report = detail::run_folds(plan, threads, [&](std::size_t, const Fold& fold) {
    const MultiSubjectDataset classify = data.select(fold.classify_part);
    std::vector<Matrix> features;
    for (const auto& s : classify.subjects()) features.push_back(s.data);
    return detail::classify_fold(features, require_labels(classify), fold, lambda);
  });
  report.config = {{"graph", "none"}, {"leave_out", leave_out}, {"lambda", lambda}, {"seed", seed}};
  return report;
}

inline nlohmann::json to_json(const EvalReport& report) {
  return {{"folds", report.fold_accuracies}, {"mean", report.mean}, {"std", report.std}, {"config", report.config}};
}

inline std::string tsv_header() { return "graph\tkernel\tk\tenergy\tleave_out\tlambda\tseed\tincomplete_q\tfolds\tmean\tstd"; }

inline std::string to_tsv(const EvalReport& report) {
  const auto& c = report.config;
  const auto field = [&](const char* key) -> std::string {
    if (!c.contains(key)) return "";
    const auto& v = c.at(key);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array()) {
      std::string joined;
      for (const auto& item : v) joined += (joined.empty() ? "" : ";") + item.get<std::string>();
      return joined;
    }
    return v.dump();
  };
  return field("graph") + "\t" + field("kernel") + "\t" + field("k") + "\t" + field("energy") + "\t" +
         field("leave_out") + "\t" + field("lambda") + "\t" + field("seed") + "\t" + field("incomplete_q") + "\t" +
         std::to_string(report.fold_accuracies.size()) + "\t" + nlohmann::json(report.mean).dump() + "\t" +
         nlohmann::json(report.std).dump();
}

}  // namespace gdm
