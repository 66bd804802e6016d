#ifndef URBANFORM_FOREST_HPP
#define URBANFORM_FOREST_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "urbanform/csv.hpp"
#include "urbanform/errors.hpp"
#include "urbanform/morpho.hpp"
#include "urbanform/parallel.hpp"
#include "urbanform/random.hpp"

namespace urbanform {

// Dense row-major sample matrix.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  void push_row(std::span<const double> values) {
    if (rows_ == 0 && cols_ == 0) cols_ = values.size();
    if (values.size() != cols_) throw InputError("row width does not match matrix");
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct ForestParams {
  std::size_t n_trees = 200;
  std::size_t features_per_split = 7;  // ceil(sqrt(40))
  std::size_t max_depth = 0;           // 0 = unlimited
  std::size_t min_samples_leaf = 1;
  std::uint64_t seed = 0;
  std::size_t workers = 0;             // 0 = hardware concurrency; never affects results
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // x[feature] <= threshold goes left
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::vector<std::uint32_t> counts;  // bootstrap class counts (leaves only)
  int majority = 0;                   // leaves only; ties to the lowest class

  bool is_leaf() const { return feature < 0; }
};

class DecisionTree {
 public:
  std::vector<TreeNode> nodes;
  std::vector<std::uint32_t> oob;  // ascending training-row indices left out of the bootstrap

  // Leaf reached by x, with feature values read through `value(j)`.
  template <typename Get>
  const TreeNode& leaf_for(Get&& value) const {
    std::uint32_t i = 0;
    while (!nodes[i].is_leaf()) {
      const auto& n = nodes[i];
      i = value(static_cast<std::size_t>(n.feature)) <= n.threshold ? n.left : n.right;
    }
    return nodes[i];
  }

  int predict(std::span<const double> x) const {
    return leaf_for([&](std::size_t j) { return x[j]; }).majority;
  }

  std::size_t depth() const {
    std::size_t best = 0;
    std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
      const auto [i, d] = stack.back();
      stack.pop_back();
      best = std::max(best, d);
      if (!nodes[i].is_leaf()) {
        stack.emplace_back(nodes[i].left, d + 1);
        stack.emplace_back(nodes[i].right, d + 1);
      }
    }
    return best;
  }
};

struct ForestModel {
  ForestParams params;
  std::size_t num_features = 0;
  int num_classes = 0;
  std::size_t n_train = 0;
  std::vector<std::string> feature_names;
  std::vector<DecisionTree> trees;
  std::vector<std::string> warnings;  // not serialized
};

struct Prediction {
  int category = 0;
  std::vector<std::uint32_t> votes;
};

namespace detail {

inline double sum_squares(std::span<const std::uint32_t> counts) {
  double s = 0.0;
  for (const auto c : counts) s += static_cast<double>(c) * static_cast<double>(c);
  return s;
}

inline int majority_class(std::span<const std::uint32_t> counts) {
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

struct SplitChoice {
  bool found = false;
  double decrease = 0.0;
  std::size_t feature = 0;
  double threshold = 0.0;
};

// CART growth with Gini impurity on one bootstrap sample.
class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const int> y, int num_classes, const ForestParams& params)
      : x_(x), y_(y), classes_(static_cast<std::size_t>(num_classes)), params_(params) {}

  DecisionTree build(Rng& rng) {
    const std::size_t n = x_.rows();
    std::vector<std::uint32_t> in_bag_count(n, 0);
    std::vector<std::uint32_t> samples(n);
    for (std::size_t i = 0; i < n; ++i) {
      samples[i] = static_cast<std::uint32_t>(rng.below(n));
      ++in_bag_count[samples[i]];
    }
    DecisionTree tree;
    for (std::size_t i = 0; i < n; ++i) {
      if (in_bag_count[i] == 0) tree.oob.push_back(static_cast<std::uint32_t>(i));
    }

    struct Pending {
      std::uint32_t node;
      std::size_t begin, end, depth;
    };
    tree.nodes.emplace_back();
    std::vector<Pending> stack{{0, 0, n, 0}};
    std::vector<std::size_t> order(x_.cols());
    std::iota(order.begin(), order.end(), std::size_t{0});

    while (!stack.empty()) {
      const Pending job = stack.back();
      stack.pop_back();
      const std::span<std::uint32_t> node_samples(samples.data() + job.begin, job.end - job.begin);

      std::vector<std::uint32_t> counts(classes_, 0);
      for (const auto s : node_samples) ++counts[static_cast<std::size_t>(y_[s])];
      const std::size_t size = node_samples.size();
      const bool pure = std::count(counts.begin(), counts.end(), 0u) >= static_cast<std::ptrdiff_t>(classes_) - 1;
      const bool depth_done = params_.max_depth > 0 && job.depth >= params_.max_depth;

      SplitChoice best;
      if (!pure && !depth_done && size >= 2 * params_.min_samples_leaf) {
        best = best_split(node_samples, counts, order, rng);
      }
      if (!best.found) {
        auto& leaf = tree.nodes[job.node];
        leaf.feature = -1;
        leaf.majority = majority_class(counts);
        leaf.counts = std::move(counts);
        continue;
      }

      const auto mid = std::partition(node_samples.begin(), node_samples.end(), [&](std::uint32_t s) {
        return x_.at(s, best.feature) <= best.threshold;
      });
      const std::size_t split_at = job.begin + static_cast<std::size_t>(mid - node_samples.begin());
      const auto left = static_cast<std::uint32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& node = tree.nodes[job.node];
      node.feature = static_cast<std::int32_t>(best.feature);
      node.threshold = best.threshold;
      node.left = left;
      node.right = left + 1;
      // Right first so the left subtree is expanded first (stable node order).
      stack.push_back({left + 1, split_at, job.end, job.depth + 1});
      stack.push_back({left, job.begin, split_at, job.depth + 1});
    }
    return tree;
  }

 private:
  // Features are visited in random order until features_per_split of them
  // have been non-constant in the node. Ties in impurity decrease go to the
  // lower feature index, then the lower threshold.
  SplitChoice best_split(std::span<const std::uint32_t> node_samples, const std::vector<std::uint32_t>& counts,
                         std::vector<std::size_t>& order, Rng& rng) {
    const std::size_t d = order.size();
    const double n = static_cast<double>(node_samples.size());
    const double parent_term = sum_squares(counts) / (n * n);
    std::vector<std::pair<double, int>> column(node_samples.size());
    std::vector<std::uint32_t> left(classes_), right(classes_);

    SplitChoice best;
    std::size_t informative = 0;
    for (std::size_t k = 0; k < d && informative < params_.features_per_split; ++k) {
      const std::size_t pick = k + static_cast<std::size_t>(rng.below(d - k));
      std::swap(order[k], order[pick]);
      const std::size_t f = order[k];

      for (std::size_t i = 0; i < node_samples.size(); ++i) {
        column[i] = {x_.at(node_samples[i], f), y_[node_samples[i]]};
      }
      std::sort(column.begin(), column.end());
      if (column.front().first == column.back().first) continue;
      ++informative;

      std::fill(left.begin(), left.end(), 0u);
      right = counts;
      double left_sq = 0.0, right_sq = sum_squares(counts);
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        const auto c = static_cast<std::size_t>(column[i].second);
        left_sq += 2.0 * left[c] + 1.0;
        right_sq -= 2.0 * right[c] - 1.0;
        ++left[c];
        --right[c];
        if (column[i].first == column[i + 1].first) continue;
        const std::size_t nl = i + 1, nr = column.size() - nl;
        if (nl < params_.min_samples_leaf || nr < params_.min_samples_leaf) continue;
        const double decrease =
            (left_sq / static_cast<double>(nl) + right_sq / static_cast<double>(nr)) / n - parent_term;
        if (!(decrease > 1e-12)) continue;
        double threshold = 0.5 * (column[i].first + column[i + 1].first);
        if (!(threshold < column[i + 1].first)) threshold = column[i].first;
        const bool better =
            !best.found || decrease > best.decrease ||
            (decrease == best.decrease &&
             (f < best.feature || (f == best.feature && threshold < best.threshold)));
        if (better) best = {true, decrease, f, threshold};
      }
    }
    return best;
  }

  const FeatureMatrix& x_;
  std::span<const int> y_;
  std::size_t classes_;
  const ForestParams& params_;
};

}  // namespace detail

// Bagged CART forest. Tree t draws its bootstrap and feature subsets from
// Rng(seed ^ t), so results are identical for any worker count.
inline ForestModel train(const FeatureMatrix& x, std::span<const int> y, const ForestParams& params,
                         int num_classes = 8, std::vector<std::string> feature_names = {}) {
  if (x.rows() == 0 || x.rows() != y.size()) throw InputError("training data must be non-empty with one label per row");
  if (params.n_trees < 1) throw InputError("n_trees must be at least 1");
  if (params.features_per_split < 1 || params.features_per_split > x.cols()) {
    throw InputError("features_per_split must be in [1, number of features]");
  }
  if (params.min_samples_leaf < 1) throw InputError("min_samples_leaf must be at least 1");
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (const double v : x.row(r)) {
      if (!std::isfinite(v)) throw InputError("training features must be finite");
    }
  }
  std::vector<std::uint32_t> class_count(static_cast<std::size_t>(num_classes), 0);
  for (const int label : y) {
    if (label < 0 || label >= num_classes) throw InputError("label outside [0, num_classes)");
    ++class_count[static_cast<std::size_t>(label)];
  }

  ForestModel model;
  model.params = params;
  model.num_features = x.cols();
  model.num_classes = num_classes;
  model.n_train = x.rows();
  if (feature_names.empty()) {
    for (std::size_t j = 0; j < x.cols(); ++j) feature_names.push_back("f" + std::to_string(j));
  }
  if (feature_names.size() != x.cols()) throw InputError("feature name count does not match matrix width");
  model.feature_names = std::move(feature_names);
  if (std::count_if(class_count.begin(), class_count.end(), [](auto c) { return c > 0; }) < 2) {
    model.warnings.push_back("only one class present; trees are single leaves");
  }

  model.trees.resize(params.n_trees);
  parallel_for(params.n_trees, params.workers, [&](std::size_t t) {
    Rng rng(params.seed ^ static_cast<std::uint64_t>(t));
    detail::TreeBuilder builder(x, y, num_classes, params);
    model.trees[t] = builder.build(rng);
  });
  return model;
}

// Majority vote; ties go to the lowest category.
inline Prediction predict(const ForestModel& model, std::span<const double> x) {
  if (x.size() != model.num_features) throw InputError("feature vector has the wrong dimensionality");
  Prediction p;
  p.votes.assign(static_cast<std::size_t>(model.num_classes), 0);
  for (const auto& tree : model.trees) ++p.votes[static_cast<std::size_t>(tree.predict(x))];
  p.category = detail::majority_class(p.votes);
  return p;
}

// Misclassified fraction among training rows that are out of bag for at least
// one tree, each judged by the majority of those trees only.
inline double oob_error(const ForestModel& model, const FeatureMatrix& x, std::span<const int> y) {
  if (x.rows() != model.n_train || y.size() != model.n_train || x.cols() != model.num_features) {
    throw InputError("OOB evaluation needs the exact training matrix");
  }
  const auto classes = static_cast<std::size_t>(model.num_classes);
  std::vector<std::uint32_t> votes(x.rows() * classes, 0);
  for (const auto& tree : model.trees) {
    for (const auto i : tree.oob) ++votes[i * classes + static_cast<std::size_t>(tree.predict(x.row(i)))];
  }
  std::size_t evaluated = 0, wrong = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const std::span<const std::uint32_t> v(votes.data() + i * classes, classes);
    if (std::accumulate(v.begin(), v.end(), 0u) == 0) continue;
    ++evaluated;
    if (detail::majority_class(v) != y[i]) ++wrong;
  }
  if (evaluated == 0) throw std::runtime_error("no training row is out of bag for any tree");
  return static_cast<double>(wrong) / static_cast<double>(evaluated);
}

struct ImportanceReport {
  std::vector<double> per_dimension;  // mean OOB error increase, clamped at 0
  std::array<double, 4> per_family{};  // indexed by Family; sums to 1 when any dimension is positive
  double baseline_oob_error = 0.0;

  double family(Family f) const { return per_family[static_cast<std::size_t>(f)]; }
};

// Sums per-dimension importance over the four ten-wide blocks and normalizes.
inline std::array<double, 4> group_by_family(std::span<const double> per_dimension) {
  std::array<double, 4> fam{};
  if (per_dimension.size() != kFeatureDim) return fam;
  for (std::size_t j = 0; j < kFeatureDim; ++j) fam[j / kBins] += per_dimension[j];
  const double total = fam[0] + fam[1] + fam[2] + fam[3];
  if (total > 0.0) {
    for (auto& v : fam) v /= total;
  }
  return fam;
}

// Breiman permutation importance: for every tree, feature j is shuffled among
// that tree's out-of-bag rows and the increase in the tree's OOB error is
// recorded. Importance is the mean increase over trees with OOB rows.
inline ImportanceReport permutation_importance(const ForestModel& model, const FeatureMatrix& x,
                                               std::span<const int> y, std::uint64_t seed) {
  if (x.rows() != model.n_train || y.size() != model.n_train || x.cols() != model.num_features) {
    throw InputError("permutation importance needs the exact training matrix");
  }
  const std::size_t d = model.num_features;
  const std::size_t t_count = model.trees.size();
  std::vector<double> increase(t_count * d, 0.0);
  std::vector<std::uint8_t> used(t_count, 0);

  parallel_for(t_count, model.params.workers, [&](std::size_t t) {
    const auto& tree = model.trees[t];
    const auto& oob = tree.oob;
    if (oob.empty()) return;
    used[t] = 1;
    const double m = static_cast<double>(oob.size());
    std::size_t base_wrong = 0;
    for (const auto i : oob) base_wrong += tree.predict(x.row(i)) != y[i];

    Rng rng(seed ^ static_cast<std::uint64_t>(t));
    std::vector<std::uint32_t> perm(oob.begin(), oob.end());
    for (std::size_t j = 0; j < d; ++j) {
      std::copy(oob.begin(), oob.end(), perm.begin());
      rng.shuffle(std::span<std::uint32_t>(perm));
      std::size_t wrong = 0;
      for (std::size_t k = 0; k < oob.size(); ++k) {
        const auto i = oob[k];
        const double swapped = x.at(perm[k], j);
        const auto& leaf = tree.leaf_for([&](std::size_t f) { return f == j ? swapped : x.at(i, f); });
        wrong += leaf.majority != y[i];
      }
      increase[t * d + j] = (static_cast<double>(wrong) - static_cast<double>(base_wrong)) / m;
    }
  });

  ImportanceReport report;
  report.per_dimension.assign(d, 0.0);
  std::size_t trees_used = 0;
  for (std::size_t t = 0; t < t_count; ++t) {
    if (!used[t]) continue;
    ++trees_used;
    for (std::size_t j = 0; j < d; ++j) report.per_dimension[j] += increase[t * d + j];
  }
  for (auto& v : report.per_dimension) v = trees_used ? std::max(0.0, v / static_cast<double>(trees_used)) : 0.0;
  report.per_family = group_by_family(report.per_dimension);
  report.baseline_oob_error = oob_error(model, x, y);
  return report;
}

// --- model files ---------------------------------------------------------------
//
//   urbanform-forest 1
//   features <d> classes <k> n_train <n>
//   params <n_trees> <features_per_split> <max_depth> <min_samples_leaf> <seed>
//   names <name_0> ... <name_d-1>
//   tree <index> <node_count> <oob_count>
//   N <feature> <threshold> <left> <right>       internal node
//   L <count_0> ... <count_k-1>                  leaf
//   O <row> ...                                  OOB rows (may be empty)
//   end
//
// Thresholds use the shortest round-trip decimal form, so a load reproduces
// every comparison exactly.

inline constexpr std::string_view kModelMagic = "urbanform-forest";
inline constexpr int kModelVersion = 1;

inline std::string save_model(const ForestModel& model) {
  if (model.trees.empty()) throw InputError("refusing to save an empty forest");
  std::ostringstream os;
  os << kModelMagic << ' ' << kModelVersion << '\n';
  os << "features " << model.num_features << " classes " << model.num_classes << " n_train " << model.n_train
     << '\n';
  const auto& p = model.params;
  os << "params " << p.n_trees << ' ' << p.features_per_split << ' ' << p.max_depth << ' ' << p.min_samples_leaf
     << ' ' << p.seed << '\n';
  os << "names";
  for (const auto& n : model.feature_names) os << ' ' << n;
  os << '\n';
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    const auto& tree = model.trees[t];
    os << "tree " << t << ' ' << tree.nodes.size() << ' ' << tree.oob.size() << '\n';
    for (const auto& n : tree.nodes) {
      if (n.is_leaf()) {
        os << 'L';
        for (const auto c : n.counts) os << ' ' << c;
      } else {
        os << "N " << n.feature << ' ' << csv::format_double(n.threshold) << ' ' << n.left << ' ' << n.right;
      }
      os << '\n';
    }
    os << 'O';
    for (const auto i : tree.oob) os << ' ' << i;
    os << '\n';
  }
  os << "end\n";
  return os.str();
}

inline ForestModel load_model(std::string_view text) {
  std::istringstream is{std::string(text)};
  auto fail = [&](const std::string& why) -> ParseError {
    const auto pos = is.tellg();
    return ParseError("model file: " + why, pos < 0 ? text.size() : static_cast<std::size_t>(pos));
  };
  auto expect = [&](std::string_view word) {
    std::string w;
    if (!(is >> w) || w != word) throw fail("expected '" + std::string(word) + "'");
  };
  auto read = [&](auto& value, const char* what) {
    if (!(is >> value)) throw fail(std::string("could not read ") + what);
  };

  std::string magic;
  int version = 0;
  if (!(is >> magic) || magic != kModelMagic) throw fail("not a forest model");
  read(version, "version");
  if (version != kModelVersion) {
    throw SchemaError("model file version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kModelVersion) + ")");
  }

  ForestModel model;
  expect("features");
  read(model.num_features, "feature count");
  expect("classes");
  read(model.num_classes, "class count");
  expect("n_train");
  read(model.n_train, "training size");
  if (model.num_classes < 1 || model.num_features < 1) throw fail("bad dimensions");
  expect("params");
  read(model.params.n_trees, "n_trees");
  read(model.params.features_per_split, "features_per_split");
  read(model.params.max_depth, "max_depth");
  read(model.params.min_samples_leaf, "min_samples_leaf");
  read(model.params.seed, "seed");
  expect("names");
  model.feature_names.resize(model.num_features);
  for (auto& n : model.feature_names) read(n, "feature name");
  if (model.params.n_trees < 1) throw fail("empty forest");

  const auto classes = static_cast<std::size_t>(model.num_classes);
  model.trees.resize(model.params.n_trees);
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    auto& tree = model.trees[t];
    std::size_t index = 0, node_count = 0, oob_count = 0;
    expect("tree");
    read(index, "tree index");
    read(node_count, "node count");
    read(oob_count, "oob count");
    if (index != t || node_count == 0) throw fail("tree header out of sequence");
    tree.nodes.resize(node_count);
    for (std::size_t k = 0; k < node_count; ++k) {
      auto& n = tree.nodes[k];
      std::string tag;
      read(tag, "node tag");
      if (tag == "N") {
        std::string threshold;
        read(n.feature, "split feature");
        read(threshold, "threshold");
        read(n.left, "left child");
        read(n.right, "right child");
        const auto v = csv::to_double(threshold);
        if (!v || n.feature < 0 || static_cast<std::size_t>(n.feature) >= model.num_features ||
            n.left <= k || n.right <= k || n.left >= node_count || n.right >= node_count) {
          throw fail("invalid internal node");
        }
        n.threshold = *v;
      } else if (tag == "L") {
        n.feature = -1;
        n.counts.resize(classes);
        for (auto& c : n.counts) read(c, "leaf count");
        n.majority = detail::majority_class(n.counts);
      } else {
        throw fail("unknown node tag '" + tag + "'");
      }
    }
    expect("O");
    tree.oob.resize(oob_count);
    for (auto& i : tree.oob) {
      read(i, "oob row");
      if (i >= model.n_train) throw fail("oob row out of range");
    }
  }
  expect("end");
  return model;
}

}  // namespace urbanform

#endif  // URBANFORM_FOREST_HPP
