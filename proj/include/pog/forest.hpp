#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "pog/error.hpp"
#include "pog/grid.hpp"
#include "pog/parallel.hpp"
#include "pog/quantization.hpp"
#include "pog/rng.hpp"

namespace pog {

/// Row-major view over a feature matrix shared between many classifiers.
struct DatasetView {
  const double* data = nullptr;
  std::size_t n_rows = 0;
  std::size_t n_features = 0;

  double at(std::size_t row, std::size_t col) const { return data[row * n_features + col]; }
  std::span<const double> row(std::size_t r) const {
    return {data + r * n_features, n_features};
  }
};

/// Owning dataset, used for synthetic data and tests.
struct Dataset {
  std::vector<double> x;  // row-major
  std::size_t n_features = 0;
  std::vector<int> y;

  DatasetView view() const { return {x.data(), y.size(), n_features}; }
};

struct ForestConfig {
  int n_trees = 100;
  int m_try = 0;  // 0: ceil(sqrt(n_features))
  int min_leaf = 1;
  std::uint64_t seed = 0;
  int n_classes = 5;

  int resolved_m_try(std::size_t n_features) const {
    if (m_try > 0) return std::min<int>(m_try, int(n_features));
    return std::max(1, int(std::ceil(std::sqrt(double(n_features)))));
  }
};

struct TreeNode {
  std::int32_t feature = -1;  // -1: leaf
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::vector<std::uint32_t> counts;  // class counts, leaves only
};

namespace detail {

inline int majority_class(const std::vector<std::uint32_t>& counts) {
  int best = 0;
  for (int k = 1; k < int(counts.size()); ++k) {
    if (counts[std::size_t(k)] > counts[std::size_t(best)]) best = k;  // ties: lowest class
  }
  return best;
}

struct SplitChoice {
  bool valid = false;
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;  // weighted Gini after the split
};

/// Exhaustive best split of `rows` over the candidate features; candidates
/// must be sorted ascending so that equal-impurity ties resolve to the lowest
/// feature index and lowest threshold.
inline SplitChoice best_split(DatasetView X, const std::vector<int>& y,
                              std::span<const std::size_t> rows,
                              std::span<const std::size_t> candidates, int n_classes,
                              int min_leaf) {
  SplitChoice best;
  const double n = double(rows.size());
  std::vector<std::pair<double, int>> column(rows.size());
  std::vector<double> left(std::size_t(n_classes), 0.0);
  std::vector<double> right(std::size_t(n_classes), 0.0);

  for (const std::size_t feature : candidates) {
    for (std::size_t k = 0; k < rows.size(); ++k) {
      column[k] = {X.at(rows[k], feature), y[rows[k]]};
    }
    std::sort(column.begin(), column.end());

    std::fill(left.begin(), left.end(), 0.0);
    std::fill(right.begin(), right.end(), 0.0);
    for (const auto& [value, label] : column) right[std::size_t(label)] += 1.0;

    double n_left = 0.0;
    for (std::size_t k = 0; k + 1 < column.size(); ++k) {
      left[std::size_t(column[k].second)] += 1.0;
      right[std::size_t(column[k].second)] -= 1.0;
      n_left += 1.0;
      if (column[k].first == column[k + 1].first) continue;  // no boundary here
      const double n_right = n - n_left;
      if (n_left < min_leaf || n_right < min_leaf) continue;

      double gini_left = 1.0, gini_right = 1.0;
      for (int c = 0; c < n_classes; ++c) {
        gini_left -= (left[std::size_t(c)] / n_left) * (left[std::size_t(c)] / n_left);
        gini_right -= (right[std::size_t(c)] / n_right) * (right[std::size_t(c)] / n_right);
      }
      const double impurity = (n_left * gini_left + n_right * gini_right) / n;
      if (!best.valid || impurity < best.impurity - 1e-12) {
        best.valid = true;
        best.feature = int(feature);
        best.threshold = 0.5 * (column[k].first + column[k + 1].first);
        best.impurity = impurity;
      }
    }
  }
  return best;
}

}  // namespace detail

/// Binary CART tree with class-count leaves, grown greedily on Gini impurity
/// over random feature subsets.
class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  bool empty() const { return nodes_.empty(); }

  const TreeNode& leaf_for(std::span<const double> features) const {
    std::size_t k = 0;
    for (;;) {
      const TreeNode& node = nodes_[k];
      if (node.feature < 0) return node;
      k = features[std::size_t(node.feature)] < node.threshold ? std::size_t(node.left)
                                                               : std::size_t(node.right);
    }
  }

  int predict_index(std::span<const double> features) const {
    return detail::majority_class(leaf_for(features).counts);
  }

  static DecisionTree train(DatasetView X, const std::vector<int>& y,
                            std::vector<std::size_t> rows, int n_classes, int m_try,
                            int min_leaf, Rng& rng) {
    DecisionTree tree;
    tree.grow(X, y, rows, n_classes, m_try, min_leaf, rng);
    return tree;
  }

 private:
  // returns the index of the created node
  std::size_t grow(DatasetView X, const std::vector<int>& y, std::vector<std::size_t>& rows,
                   int n_classes, int m_try, int min_leaf, Rng& rng) {
    std::vector<std::uint32_t> counts(std::size_t(n_classes), 0);
    for (const std::size_t r : rows) counts[std::size_t(y[r])]++;
    const bool pure =
        std::count_if(counts.begin(), counts.end(), [](std::uint32_t c) { return c > 0; }) <= 1;

    const std::size_t me = nodes_.size();
    nodes_.emplace_back();
    if (pure || rows.size() < std::size_t(2 * min_leaf) || rows.size() < 2) {
      nodes_[me].counts = std::move(counts);
      return me;
    }

    // Draw m_try candidate features; if none admits a valid split (all
    // constant on this node), extend the draw until one does or every feature
    // has been inspected. Candidates are evaluated in ascending order so that
    // equal-impurity ties resolve to the lowest feature index.
    const std::vector<std::size_t> perm =
        rng.sample_without_replacement(X.n_features, X.n_features);
    std::size_t taken = std::min<std::size_t>(std::size_t(m_try), X.n_features);
    detail::SplitChoice split;
    for (;;) {
      std::vector<std::size_t> candidates(perm.begin(), perm.begin() + taken);
      std::sort(candidates.begin(), candidates.end());
      split = detail::best_split(X, y, rows, candidates, n_classes, min_leaf);
      if (split.valid || taken == X.n_features) break;
      taken = std::min(X.n_features, taken + std::size_t(m_try));
    }
    if (!split.valid) {
      nodes_[me].counts = std::move(counts);
      return me;
    }

    std::vector<std::size_t> left_rows, right_rows;
    for (const std::size_t r : rows) {
      (X.at(r, std::size_t(split.feature)) < split.threshold ? left_rows : right_rows)
          .push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    nodes_[me].feature = split.feature;
    nodes_[me].threshold = split.threshold;
    const std::size_t l = grow(X, y, left_rows, n_classes, m_try, min_leaf, rng);
    nodes_[me].left = std::int32_t(l);
    const std::size_t r = grow(X, y, right_rows, n_classes, m_try, min_leaf, rng);
    nodes_[me].right = std::int32_t(r);
    return me;
  }

  std::vector<TreeNode> nodes_;
};

/// Bagged ensemble of full-grown trees with per-tree bootstrap records.
class ForestClassifier {
 public:
  std::vector<DecisionTree> trees;
  std::vector<std::vector<std::uint32_t>> inbag;  // per tree: per sample draw count
  ForestConfig config;
  std::size_t n_features = 0;
  std::size_t n_samples = 0;

  struct Prediction {
    int class_index = 0;
    std::vector<double> votes;  // normalized histogram over the class set
  };

  static ForestClassifier train(DatasetView X, const std::vector<int>& y, ForestConfig cfg) {
    if (X.n_rows != y.size()) throw Error("train_forest: feature/label size mismatch");
    if (X.n_rows < 1) throw Error("train_forest: empty dataset");
    ForestClassifier forest;
    forest.config = cfg;
    forest.config.m_try = cfg.resolved_m_try(X.n_features);
    forest.n_features = X.n_features;
    forest.n_samples = X.n_rows;
    forest.trees.resize(std::size_t(cfg.n_trees));
    forest.inbag.resize(std::size_t(cfg.n_trees));
    for (int t = 0; t < cfg.n_trees; ++t) {
      Rng rng(derive_seed(cfg.seed, std::uint64_t(t), 0x74726565ULL));  // tree stream
      auto draws = rng.bootstrap(X.n_rows, X.n_rows);
      std::vector<std::uint32_t> counts(X.n_rows, 0);
      for (const auto d : draws) counts[d]++;
      forest.inbag[std::size_t(t)] = std::move(counts);
      forest.trees[std::size_t(t)] = DecisionTree::train(
          X, y, std::move(draws), cfg.n_classes, forest.config.m_try, cfg.min_leaf, rng);
    }
    return forest;
  }

  Prediction predict(std::span<const double> features) const {
    if (features.size() != n_features) {
      throw Error("predict: feature length does not match training data");
    }
    Prediction out;
    out.votes.assign(std::size_t(config.n_classes), 0.0);
    for (const auto& tree : trees) {
      out.votes[std::size_t(tree.predict_index(features))] += 1.0;
    }
    for (auto& v : out.votes) v /= double(trees.size());
    out.class_index = 0;
    for (int k = 1; k < config.n_classes; ++k) {
      if (out.votes[std::size_t(k)] > out.votes[std::size_t(out.class_index)]) {
        out.class_index = k;  // ties break toward the lower class value
      }
    }
    return out;
  }
};

struct OobResult {
  double error = 0.0;
  std::size_t n_evaluated = 0;
  std::size_t n_excluded = 0;  // samples in every bootstrap
};

/// Out-of-bag generalization estimate: every sample is voted on only by trees
/// whose bootstrap excluded it.
inline OobResult oob_error(const ForestClassifier& forest, DatasetView X,
                           const std::vector<int>& y) {
  if (X.n_rows != forest.n_samples) throw Error("oob_error: dataset size mismatch");
  OobResult result;
  std::size_t wrong = 0;
  std::vector<std::uint32_t> votes(std::size_t(forest.config.n_classes));
  for (std::size_t i = 0; i < X.n_rows; ++i) {
    std::fill(votes.begin(), votes.end(), 0);
    bool any = false;
    for (std::size_t t = 0; t < forest.trees.size(); ++t) {
      if (forest.inbag[t][i] != 0) continue;
      votes[std::size_t(forest.trees[t].predict_index(X.row(i)))]++;
      any = true;
    }
    if (!any) {
      result.n_excluded++;
      continue;
    }
    int best = 0;
    for (int k = 1; k < forest.config.n_classes; ++k) {
      if (votes[std::size_t(k)] > votes[std::size_t(best)]) best = k;
    }
    if (best != y[i]) wrong++;
    result.n_evaluated++;
  }
  result.error = result.n_evaluated > 0 ? double(wrong) / double(result.n_evaluated) : 0.0;
  return result;
}

// ---------------------------------------------------------------------------
// Per-cell POG estimation
// ---------------------------------------------------------------------------

/// One classifier slot of the estimator: either a constant class (cells whose
/// training labels never vary, the vast majority) or a trained forest.
struct CellModel {
  std::int16_t constant_class = -1;  // >= 0: constant stub
  ForestClassifier forest;

  bool is_stub() const { return constant_class >= 0; }
};

/// Ensemble mapping the flattened current-scene grid to one POG per
/// prediction instance: one classifier per (cell, instance).
class PogEstimator {
 public:
  GridSpec spec;
  std::vector<double> instants;
  QuantizationSet qset;
  ForestConfig forest_config;
  std::vector<CellModel> cells;  // instant-major: k * cell_count + cell

  std::size_t slot(std::size_t instant, std::size_t cell) const {
    return instant * spec.cell_count() + cell;
  }

  std::size_t instant_index(double t_pred) const {
    for (std::size_t k = 0; k < instants.size(); ++k) {
      if (std::abs(instants[k] - t_pred) < 1e-9) return k;
    }
    throw Error("estimator has no classifier for this prediction instance");
  }

  static PogEstimator train(const std::vector<AugmentedOccupancyGrid>& aogs,
                            const std::vector<std::vector<PredictedOccupancyGrid>>& targets,
                            const std::vector<double>& instants, ForestConfig cfg,
                            const QuantizationSet& qset = {}, unsigned jobs = 0) {
    if (aogs.empty()) throw Error("train_estimator: no training scenes");
    if (targets.size() != aogs.size()) {
      throw Error("train_estimator: AOG/POG scene counts differ");
    }
    const GridSpec spec = aogs[0].spec;
    for (const auto& aog : aogs) {
      if (!(aog.spec == spec)) throw Error("train_estimator: inconsistent grid specs");
    }
    for (const auto& per_scene : targets) {
      if (per_scene.size() != instants.size()) {
        throw Error("train_estimator: target instance count mismatch");
      }
      for (std::size_t k = 0; k < per_scene.size(); ++k) {
        if (!(per_scene[k].spec == spec)) throw Error("train_estimator: target grid mismatch");
        if (std::abs(per_scene[k].t_pred - instants[k]) > 1e-9) {
          throw Error("train_estimator: target instance times mismatch");
        }
      }
    }

    PogEstimator est;
    est.spec = spec;
    est.instants = instants;
    est.qset = qset;
    est.forest_config = cfg;
    est.forest_config.m_try = cfg.resolved_m_try(spec.cell_count() * kAogAttributes);

    // shared feature matrix: one row per scene
    const std::size_t n = aogs.size();
    const std::size_t f = spec.cell_count() * kAogAttributes;
    std::vector<double> features(n * f);
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(aogs[i].data.begin(), aogs[i].data.end(), features.begin() + i * f);
    }
    const DatasetView view{features.data(), n, f};

    // class-index labels per (instance, cell)
    std::vector<std::vector<int>> labels(instants.size() * spec.cell_count());
    for (std::size_t k = 0; k < instants.size(); ++k) {
      for (std::size_t c = 0; c < spec.cell_count(); ++c) {
        labels[k * spec.cell_count() + c].resize(n);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < instants.size(); ++k) {
        const auto idx = quantize_labels(targets[i][k], qset);
        for (std::size_t c = 0; c < spec.cell_count(); ++c) {
          labels[k * spec.cell_count() + c][i] = idx[c];
        }
      }
    }

    est.cells.resize(instants.size() * spec.cell_count());
    const unsigned n_jobs = jobs > 0 ? jobs : default_jobs();
    parallel_for(est.cells.size(), n_jobs, [&](std::size_t unit) {
      const std::vector<int>& y = labels[unit];
      const bool uniform = std::all_of(y.begin(), y.end(), [&](int l) { return l == y[0]; });
      CellModel& model = est.cells[unit];
      if (uniform) {
        model.constant_class = std::int16_t(y[0]);
        return;
      }
      ForestConfig unit_cfg = est.forest_config;
      const std::size_t k = unit / spec.cell_count();
      const std::size_t c = unit % spec.cell_count();
      unit_cfg.seed = derive_seed(cfg.seed, k, c, 0x636c617373ULL);
      model.forest = ForestClassifier::train(view, y, unit_cfg);
    });
    return est;
  }

  /// Estimated POG at one trained instance; all cells share the identical
  /// flattened feature vector.
  PredictedOccupancyGrid estimate(const AugmentedOccupancyGrid& aog, double t_pred) const {
    if (!(aog.spec == spec)) throw Error("estimate: grid spec mismatch");
    const std::size_t k = instant_index(t_pred);
    PredictedOccupancyGrid pog(spec, instants[k]);
    const auto& x = aog.features();
    for (std::size_t c = 0; c < spec.cell_count(); ++c) {
      const CellModel& model = cells[slot(k, c)];
      const int cls = model.is_stub() ? int(model.constant_class)
                                      : model.forest.predict(x).class_index;
      pog.p[c] = qset.value(cls);
    }
    return pog;
  }

  std::vector<PredictedOccupancyGrid> estimate_all(const AugmentedOccupancyGrid& aog) const {
    std::vector<PredictedOccupancyGrid> out;
    out.reserve(instants.size());
    for (const double t : instants) out.push_back(estimate(aog, t));
    return out;
  }
};

}  // namespace pog
