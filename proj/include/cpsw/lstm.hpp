#pragma once

#include <string>
#include <vector>

#include "cpsw/core.hpp"

namespace cpsw {

struct Hyperparams {
  int window = 12;
  int hidden = 100;
  int layers = 1;
  double learning_rate = 1e-3;
  int epochs = 30;
  int batch = 64;
  unsigned seed = 42;
};

double mse_loss(const Eigen::VectorXd& prediction, const Eigen::VectorXd& target);

// Many-to-one predictor: a single LSTM layer over a w-step window of states,
// followed by a dense readout of the next state.
class LstmModel {
 public:
  LstmModel() = default;
  LstmModel(int input_dim, const Hyperparams& hp);  // seeded uniform init

  Eigen::VectorXd predict(const Eigen::MatrixXd& window) const;  // w x F -> F

  // Exact d mse_loss(predict(window), target) / d window via BPTT, w x F.
  Eigen::MatrixXd input_gradient(const Eigen::MatrixXd& window,
                                 const Eigen::VectorXd& target) const;

  const Hyperparams& hp() const { return hp_; }
  int input_dim() const { return input_dim_; }

  std::uint64_t schema_hash = 0;
  NormParams norm;

 private:
  friend struct LstmTrainer;
  friend void save_model(const LstmModel&, const std::string&);
  friend LstmModel load_model(const std::string&, std::uint64_t);

  Hyperparams hp_;
  int input_dim_ = 0;
  // Gate order everywhere: input, forget, output, candidate.
  Eigen::MatrixXd Wx_[4];  // hidden x input
  Eigen::MatrixXd Wh_[4];  // hidden x hidden
  Eigen::VectorXd b_[4];   // hidden
  Eigen::MatrixXd Wy_;     // F x hidden
  Eigen::VectorXd by_;     // F
};

struct TrainResult {
  LstmModel model;
  std::vector<double> epoch_loss;  // mean MSE per epoch
  double final_loss = 0.0;
};

TrainResult train(const std::vector<Window>& normal_windows, const Hyperparams& hp);

// Versioned JSON container embedding hyperparameters, the schema hash and the
// normalization parameters used at training time.
void save_model(const LstmModel& model, const std::string& path);
LstmModel load_model(const std::string& path, std::uint64_t expected_schema_hash);

}  // namespace cpsw
