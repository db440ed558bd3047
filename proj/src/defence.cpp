#include "cpsw/defence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace cpsw {

DefenceDataset build_defence_dataset(const Eigen::MatrixXd& genuine,
                                     const Eigen::MatrixXd& adversarial,
                                     double train_fraction, unsigned seed) {
  if (genuine.rows() == 0 || adversarial.rows() == 0)
    throw std::invalid_argument("build_defence_dataset: empty class");
  if (genuine.cols() != adversarial.cols())
    throw std::invalid_argument("build_defence_dataset: feature count mismatch");
  if (train_fraction <= 0.0 || train_fraction >= 1.0)
    throw std::invalid_argument("build_defence_dataset: train_fraction in (0,1)");

  std::mt19937 rng(seed);
  const Eigen::Index per_class = std::min(genuine.rows(), adversarial.rows());
  const Eigen::Index n_train = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::floor(train_fraction *
                                              static_cast<double>(per_class))));
  if (n_train >= per_class)
    throw std::invalid_argument("build_defence_dataset: too few rows to split");
  const Eigen::Index n_test = per_class - n_train;

  auto sample = [&](const Eigen::MatrixXd& src) {
    std::vector<Eigen::Index> idx(static_cast<size_t>(src.rows()));
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<size_t>(per_class));
    return idx;
  };
  const auto gi = sample(genuine);
  const auto ai = sample(adversarial);

  DefenceDataset ds;
  ds.train_x.resize(2 * n_train, genuine.cols());
  ds.test_x.resize(2 * n_test, genuine.cols());
  ds.train_y.resize(static_cast<size_t>(2 * n_train));
  ds.test_y.resize(static_cast<size_t>(2 * n_test));
  for (Eigen::Index i = 0; i < per_class; ++i) {
    if (i < n_train) {
      ds.train_x.row(2 * i) = genuine.row(gi[static_cast<size_t>(i)]);
      ds.train_x.row(2 * i + 1) = adversarial.row(ai[static_cast<size_t>(i)]);
      ds.train_y[static_cast<size_t>(2 * i)] = 0;
      ds.train_y[static_cast<size_t>(2 * i + 1)] = 1;
    } else {
      const Eigen::Index j = i - n_train;
      ds.test_x.row(2 * j) = genuine.row(gi[static_cast<size_t>(i)]);
      ds.test_x.row(2 * j + 1) = adversarial.row(ai[static_cast<size_t>(i)]);
      ds.test_y[static_cast<size_t>(2 * j)] = 0;
      ds.test_y[static_cast<size_t>(2 * j + 1)] = 1;
    }
  }
  return ds;
}

namespace {
double clamp_proba(double p) { return std::clamp(p, 1e-12, 1.0 - 1e-12); }
}  // namespace

void DefNn::train(const Eigen::MatrixXd& x, const std::vector<int>& y,
                  const DefNnParams& params) {
  if (x.rows() == 0) throw std::invalid_argument("DefNn::train: empty data");
  if (static_cast<size_t>(x.rows()) != y.size())
    throw std::invalid_argument("DefNn::train: label count mismatch");

  const int F = static_cast<int>(x.cols());
  const std::vector<int> widths{F, params.hidden, params.hidden, params.hidden, 1};
  std::mt19937 rng(params.seed);
  w_.clear();
  b_.clear();
  for (size_t l = 0; l + 1 < widths.size(); ++l) {
    const double bound = std::sqrt(6.0 / (widths[l] + widths[l + 1]));
    std::uniform_real_distribution<double> uni(-bound, bound);
    Eigen::MatrixXd w(widths[l + 1], widths[l]);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = uni(rng);
    w_.push_back(std::move(w));
    b_.push_back(Eigen::VectorXd::Zero(widths[l + 1]));
  }

  const size_t n = static_cast<size_t>(x.rows());
  const size_t batch =
      std::max<size_t>(1, std::min<size_t>(static_cast<size_t>(params.batch), n));
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t first = 0; first < n; first += batch) {
      const size_t count = std::min(batch, n - first);
      Eigen::MatrixXd a0(F, count);
      Eigen::RowVectorXd t(count);
      for (size_t i = 0; i < count; ++i) {
        a0.col(static_cast<Eigen::Index>(i)) =
            x.row(static_cast<Eigen::Index>(order[first + i])).transpose();
        t(static_cast<Eigen::Index>(i)) =
            static_cast<double>(y[order[first + i]]);
      }

      std::vector<Eigen::MatrixXd> act{a0};
      for (size_t l = 0; l < w_.size(); ++l) {
        Eigen::MatrixXd z = (w_[l] * act.back()).colwise() + b_[l];
        if (l + 1 == w_.size())
          act.push_back(((-z.array()).exp() + 1.0).inverse().matrix());
        else
          act.push_back(z.cwiseMax(0.0));
      }

      // dL/dz at the output under cross-entropy with a sigmoid: p - t.
      Eigen::MatrixXd dz =
          (act.back().row(0) - t).matrix() / static_cast<double>(count);
      for (size_t l = w_.size(); l-- > 0;) {
        Eigen::MatrixXd dw = dz * act[l].transpose();
        Eigen::VectorXd db = dz.rowwise().sum();
        if (l > 0) {
          Eigen::MatrixXd da = w_[l].transpose() * dz;
          dz = (da.array() * (act[l].array() > 0.0).cast<double>()).matrix();
        }
        w_[l] -= params.learning_rate * dw;
        b_[l] -= params.learning_rate * db;
      }
    }
  }
}

double DefNn::predict_proba(const Eigen::VectorXd& row) const {
  if (w_.empty()) throw std::logic_error("DefNn: not trained");
  if (row.size() != w_.front().cols())
    throw std::invalid_argument("DefNn: feature count mismatch");
  Eigen::VectorXd a = row;
  for (size_t l = 0; l < w_.size(); ++l) {
    Eigen::VectorXd z = w_[l] * a + b_[l];
    if (l + 1 == w_.size())
      a = ((-z.array()).exp() + 1.0).inverse().matrix();
    else
      a = z.cwiseMax(0.0);
  }
  return clamp_proba(a(0));
}

std::vector<int> DefNn::classify_rows(const Eigen::MatrixXd& x) const {
  std::vector<int> out(static_cast<size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    out[static_cast<size_t>(i)] = classify(x.row(i).transpose());
  return out;
}

namespace {

int majority(const std::vector<int>& y, const std::vector<int>& idx) {
  int ones = 0;
  for (int i : idx) ones += y[static_cast<size_t>(i)];
  return 2 * ones > static_cast<int>(idx.size()) ? 1 : 0;
}

double gini(int ones, int total) {
  if (total == 0) return 0.0;
  const double p = static_cast<double>(ones) / total;
  return 2.0 * p * (1.0 - p);
}

}  // namespace

void RandomForest::train(const Eigen::MatrixXd& x, const std::vector<int>& y,
                         const RandomForestParams& params) {
  if (x.rows() == 0) throw std::invalid_argument("RandomForest::train: empty data");
  if (static_cast<size_t>(x.rows()) != y.size())
    throw std::invalid_argument("RandomForest::train: label count mismatch");

  const int n = static_cast<int>(x.rows());
  const int F = static_cast<int>(x.cols());
  const int per_split =
      std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(F)))));
  std::mt19937 rng(params.seed);
  std::uniform_int_distribution<int> row_pick(0, n - 1);

  trees_.clear();
  for (int t = 0; t < params.trees; ++t) {
    std::vector<int> boot(static_cast<size_t>(n));
    for (int& i : boot) i = row_pick(rng);

    std::vector<Node> tree;
    // depth-first build with an explicit stack of (node index, rows, depth)
    struct Frame {
      int node;
      std::vector<int> rows;
      int depth;
    };
    tree.push_back(Node{});
    std::vector<Frame> stack{{0, boot, 0}};
    while (!stack.empty()) {
      Frame fr = std::move(stack.back());
      stack.pop_back();
      Node& node = tree[static_cast<size_t>(fr.node)];
      node.label = majority(y, fr.rows);

      int ones = 0;
      for (int i : fr.rows) ones += y[static_cast<size_t>(i)];
      const bool pure = ones == 0 || ones == static_cast<int>(fr.rows.size());
      if (pure || fr.depth >= params.max_depth ||
          static_cast<int>(fr.rows.size()) < 2 * params.min_leaf)
        continue;

      // sample candidate features without replacement
      std::vector<int> feats(static_cast<size_t>(F));
      std::iota(feats.begin(), feats.end(), 0);
      std::shuffle(feats.begin(), feats.end(), rng);
      feats.resize(static_cast<size_t>(per_split));

      double best_score = gini(ones, static_cast<int>(fr.rows.size()));
      int best_feat = -1;
      double best_thr = 0.0;
      for (int f : feats) {
        std::vector<int> sorted = fr.rows;
        std::sort(sorted.begin(), sorted.end(), [&](int a, int b) {
          return x(a, f) < x(b, f);
        });
        int left_ones = 0;
        for (size_t i = 0; i + 1 < sorted.size(); ++i) {
          left_ones += y[static_cast<size_t>(sorted[i])];
          const double a = x(sorted[i], f);
          const double b = x(sorted[i + 1], f);
          if (b <= a) continue;
          const int nl = static_cast<int>(i) + 1;
          const int nr = static_cast<int>(sorted.size()) - nl;
          if (nl < params.min_leaf || nr < params.min_leaf) continue;
          const double score =
              (nl * gini(left_ones, nl) + nr * gini(ones - left_ones, nr)) /
              static_cast<double>(sorted.size());
          if (score < best_score - 1e-12) {
            best_score = score;
            best_feat = f;
            best_thr = 0.5 * (a + b);
          }
        }
      }
      if (best_feat < 0) continue;

      std::vector<int> left, right;
      for (int i : fr.rows)
        (x(i, best_feat) <= best_thr ? left : right).push_back(i);
      if (left.empty() || right.empty()) continue;

      const int li = static_cast<int>(tree.size());
      tree.push_back(Node{});
      const int ri = static_cast<int>(tree.size());
      tree.push_back(Node{});
      Node& parent = tree[static_cast<size_t>(fr.node)];  // refresh after growth
      parent.feature = best_feat;
      parent.threshold = best_thr;
      parent.left = li;
      parent.right = ri;
      stack.push_back({li, std::move(left), fr.depth + 1});
      stack.push_back({ri, std::move(right), fr.depth + 1});
    }
    trees_.push_back(std::move(tree));
  }
}

int RandomForest::tree_classify(const std::vector<Node>& tree,
                                const Eigen::VectorXd& row) const {
  int i = 0;
  while (tree[static_cast<size_t>(i)].feature >= 0) {
    const Node& n = tree[static_cast<size_t>(i)];
    i = row(n.feature) <= n.threshold ? n.left : n.right;
  }
  return tree[static_cast<size_t>(i)].label;
}

int RandomForest::classify(const Eigen::VectorXd& row) const {
  if (trees_.empty()) throw std::logic_error("RandomForest: not trained");
  int ones = 0;
  for (const auto& t : trees_) ones += tree_classify(t, row);
  return 2 * ones > static_cast<int>(trees_.size()) ? 1 : 0;
}

std::vector<int> RandomForest::classify_rows(const Eigen::MatrixXd& x) const {
  std::vector<int> out(static_cast<size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    out[static_cast<size_t>(i)] = classify(x.row(i).transpose());
  return out;
}

}  // namespace cpsw
