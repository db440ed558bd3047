#pragma once

#include <vector>

#include "cpsw/core.hpp"

namespace cpsw {

// Balanced genuine-vs-adversarial record classification. Rows are normalized
// state vectors; class 0 is genuine traffic, class 1 is crafted traffic.
struct DefenceDataset {
  Eigen::MatrixXd train_x, test_x;
  std::vector<int> train_y, test_y;
};

// Downsamples the larger class so both are equally represented, then splits
// each class train:test by `train_fraction` after a seeded shuffle.
DefenceDataset build_defence_dataset(const Eigen::MatrixXd& genuine,
                                     const Eigen::MatrixXd& adversarial,
                                     double train_fraction, unsigned seed);

struct DefNnParams {
  int hidden = 100;     // three hidden layers of this width
  double learning_rate = 0.05;
  int epochs = 20;
  int batch = 32;
  unsigned seed = 42;
};

// Binary classifier: 3 ReLU layers, sigmoid output, cross-entropy loss,
// mini-batch gradient descent.
class DefNn {
 public:
  DefNn() = default;
  void train(const Eigen::MatrixXd& x, const std::vector<int>& y,
             const DefNnParams& params);
  double predict_proba(const Eigen::VectorXd& row) const;
  int classify(const Eigen::VectorXd& row) const {
    return predict_proba(row) > 0.5 ? 1 : 0;
  }
  std::vector<int> classify_rows(const Eigen::MatrixXd& x) const;

 private:
  std::vector<Eigen::MatrixXd> w_;
  std::vector<Eigen::VectorXd> b_;
};

struct RandomForestParams {
  int trees = 10;
  int max_depth = 12;
  int min_leaf = 2;
  unsigned seed = 42;
};

// Gini-split decision forest with bootstrap sampling and sqrt(F) feature
// subsampling per split; majority vote over trees.
class RandomForest {
 public:
  void train(const Eigen::MatrixXd& x, const std::vector<int>& y,
             const RandomForestParams& params);
  int classify(const Eigen::VectorXd& row) const;
  std::vector<int> classify_rows(const Eigen::MatrixXd& x) const;

 private:
  struct Node {
    int feature = -1;       // -1: leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    int label = 0;
  };
  std::vector<std::vector<Node>> trees_;
  int tree_classify(const std::vector<Node>& tree,
                    const Eigen::VectorXd& row) const;
};

}  // namespace cpsw
