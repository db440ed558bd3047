#include "cpsw/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace cpsw {

namespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

Matrix sigmoid(const Matrix& x) {
  return ((-x.array()).exp() + 1.0).inverse().matrix();
}

// Per-step forward caches for one batch, gate order i, f, o, g.
struct Caches {
  std::vector<Matrix> gate[4];
  std::vector<Matrix> c, tc, h;  // cell, tanh(cell), hidden
};

struct Grads {
  Matrix dWx[4], dWh[4];
  Vector db[4];
  Matrix dWy;
  Vector dby;
  std::vector<Matrix> dX;  // per step, F x B (filled when requested)
};

}  // namespace

double mse_loss(const Vector& prediction, const Vector& target) {
  if (prediction.size() != target.size())
    throw std::invalid_argument("mse_loss: length mismatch");
  return (prediction - target).squaredNorm() / static_cast<double>(prediction.size());
}

LstmModel::LstmModel(int input_dim, const Hyperparams& hp)
    : hp_(hp), input_dim_(input_dim) {
  if (hp.window < 1 || hp.hidden < 1)
    throw std::invalid_argument("hyperparams: window and hidden must be >= 1");
  if (hp.layers != 1)
    throw std::invalid_argument("only a single LSTM layer is supported");
  const int H = hp.hidden;
  std::mt19937 rng(hp.seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(H));
  std::uniform_real_distribution<double> uni(-bound, bound);
  auto fill = [&](Matrix& m, int rows, int cols) {
    m.resize(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = uni(rng);
  };
  for (int g = 0; g < 4; ++g) fill(Wx_[g], H, input_dim);
  for (int g = 0; g < 4; ++g) fill(Wh_[g], H, H);
  for (int g = 0; g < 4; ++g) {
    b_[g].setZero(H);
  }
  fill(Wy_, input_dim, H);
  by_.setZero(input_dim);
}

struct LstmTrainer {
  static Matrix forward(const LstmModel& m, const std::vector<Matrix>& X,
                        Caches* cache) {
    const int H = m.hp_.hidden;
    const Eigen::Index B = X[0].cols();
    Matrix h = Matrix::Zero(H, B);
    Matrix c = Matrix::Zero(H, B);
    for (size_t t = 0; t < X.size(); ++t) {
      Matrix pre[4];
      for (int g = 0; g < 4; ++g)
        pre[g] = (m.Wx_[g] * X[t] + m.Wh_[g] * h).colwise() + m.b_[g];
      Matrix i = sigmoid(pre[0]);
      Matrix f = sigmoid(pre[1]);
      Matrix o = sigmoid(pre[2]);
      Matrix g = pre[3].array().tanh().matrix();
      c = (f.array() * c.array() + i.array() * g.array()).matrix();
      Matrix tc = c.array().tanh().matrix();
      h = (o.array() * tc.array()).matrix();
      if (cache) {
        cache->gate[0].push_back(i);
        cache->gate[1].push_back(f);
        cache->gate[2].push_back(o);
        cache->gate[3].push_back(g);
        cache->c.push_back(c);
        cache->tc.push_back(tc);
        cache->h.push_back(h);
      }
    }
    return (m.Wy_ * h).colwise() + m.by_;
  }

  // dY is F x B; returns all parameter gradients and, when want_dx, the
  // gradient with respect to every input entry.
  static Grads backward(const LstmModel& m, const std::vector<Matrix>& X,
                        const Caches& cache, const Matrix& dY, bool want_dx) {
    const int H = m.hp_.hidden;
    const Eigen::Index B = X[0].cols();
    const size_t W = X.size();

    Grads g;
    for (int k = 0; k < 4; ++k) {
      g.dWx[k] = Matrix::Zero(H, m.input_dim_);
      g.dWh[k] = Matrix::Zero(H, H);
      g.db[k] = Vector::Zero(H);
    }
    g.dWy = dY * cache.h.back().transpose();
    g.dby = dY.rowwise().sum();
    if (want_dx) g.dX.assign(W, Matrix::Zero(m.input_dim_, B));

    Matrix dh = m.Wy_.transpose() * dY;
    Matrix dc = Matrix::Zero(H, B);
    for (size_t t = W; t-- > 0;) {
      const Matrix& i = cache.gate[0][t];
      const Matrix& f = cache.gate[1][t];
      const Matrix& o = cache.gate[2][t];
      const Matrix& gg = cache.gate[3][t];
      const Matrix& tc = cache.tc[t];
      const Matrix c_prev =
          t > 0 ? cache.c[t - 1] : Matrix::Zero(H, B);
      const Matrix h_prev =
          t > 0 ? cache.h[t - 1] : Matrix::Zero(H, B);

      Matrix do_ = (dh.array() * tc.array()).matrix();
      dc = (dc.array() + dh.array() * o.array() * (1.0 - tc.array().square()))
               .matrix();
      Matrix di = (dc.array() * gg.array()).matrix();
      Matrix df = (dc.array() * c_prev.array()).matrix();
      Matrix dg = (dc.array() * i.array()).matrix();

      Matrix da[4];
      da[0] = (di.array() * i.array() * (1.0 - i.array())).matrix();
      da[1] = (df.array() * f.array() * (1.0 - f.array())).matrix();
      da[2] = (do_.array() * o.array() * (1.0 - o.array())).matrix();
      da[3] = (dg.array() * (1.0 - gg.array().square())).matrix();

      Matrix dh_prev = Matrix::Zero(H, B);
      for (int k = 0; k < 4; ++k) {
        g.dWx[k] += da[k] * X[t].transpose();
        g.dWh[k] += da[k] * h_prev.transpose();
        g.db[k] += da[k].rowwise().sum();
        if (want_dx) g.dX[t] += m.Wx_[k].transpose() * da[k];
        dh_prev += m.Wh_[k].transpose() * da[k];
      }
      dh = dh_prev;
      dc = (dc.array() * f.array()).matrix();
    }
    return g;
  }

  static void apply(LstmModel& m, const Grads& g, double lr) {
    for (int k = 0; k < 4; ++k) {
      m.Wx_[k] -= lr * g.dWx[k];
      m.Wh_[k] -= lr * g.dWh[k];
      m.b_[k] -= lr * g.db[k];
    }
    m.Wy_ -= lr * g.dWy;
    m.by_ -= lr * g.dby;
  }

  static bool finite(const LstmModel& m) {
    auto ok = [](const Matrix& x) { return x.allFinite(); };
    for (int k = 0; k < 4; ++k)
      if (!ok(m.Wx_[k]) || !ok(m.Wh_[k]) || !m.b_[k].allFinite()) return false;
    return ok(m.Wy_) && m.by_.allFinite();
  }
};

Eigen::VectorXd LstmModel::predict(const Matrix& win) const {
  if (win.rows() != hp_.window || win.cols() != input_dim_)
    throw std::invalid_argument("predict: window must be " +
                                std::to_string(hp_.window) + " x " +
                                std::to_string(input_dim_));
  std::vector<Matrix> X;
  X.reserve(static_cast<size_t>(win.rows()));
  for (Eigen::Index t = 0; t < win.rows(); ++t)
    X.push_back(win.row(t).transpose());
  return LstmTrainer::forward(*this, X, nullptr).col(0);
}

Eigen::MatrixXd LstmModel::input_gradient(const Matrix& win,
                                          const Vector& target) const {
  if (win.rows() != hp_.window || win.cols() != input_dim_)
    throw std::invalid_argument("input_gradient: bad window shape");
  if (target.size() != input_dim_)
    throw std::invalid_argument("input_gradient: bad target size");
  std::vector<Matrix> X;
  for (Eigen::Index t = 0; t < win.rows(); ++t)
    X.push_back(win.row(t).transpose());
  Caches cache;
  Matrix y = LstmTrainer::forward(*this, X, &cache);
  Matrix dY = 2.0 * (y - target) / static_cast<double>(input_dim_);
  Grads g = LstmTrainer::backward(*this, X, cache, dY, true);
  Matrix out(win.rows(), win.cols());
  for (Eigen::Index t = 0; t < win.rows(); ++t)
    out.row(t) = g.dX[static_cast<size_t>(t)].col(0).transpose();
  return out;
}

TrainResult train(const std::vector<Window>& windows, const Hyperparams& hp) {
  if (windows.empty()) throw std::invalid_argument("train: no windows");
  const int F = static_cast<int>(windows[0].input.cols());
  for (const auto& w : windows) {
    if (w.input.rows() != hp.window || w.input.cols() != F)
      throw std::invalid_argument("train: window shape mismatch");
    if (w.target.size() != F)
      throw std::invalid_argument("train: target size mismatch");
  }

  TrainResult result;
  result.model = LstmModel(F, hp);
  LstmModel& m = result.model;

  const size_t n = windows.size();
  const size_t batch = std::max<size_t>(
      1, std::min<size_t>(static_cast<size_t>(hp.batch), n));
  std::mt19937 rng(hp.seed + 1);
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  auto assemble = [&](size_t first, size_t count, std::vector<Matrix>& X,
                      Matrix& T) {
    X.assign(static_cast<size_t>(hp.window), Matrix(F, count));
    T.resize(F, count);
    for (size_t b = 0; b < count; ++b) {
      const Window& w = windows[order[first + b]];
      for (int t = 0; t < hp.window; ++t)
        X[static_cast<size_t>(t)].col(static_cast<Eigen::Index>(b)) =
            w.input.row(t).transpose();
      T.col(static_cast<Eigen::Index>(b)) = w.target;
    }
  };

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    size_t seen = 0;
    for (size_t first = 0; first < n; first += batch) {
      const size_t count = std::min(batch, n - first);
      std::vector<Matrix> X;
      Matrix T;
      assemble(first, count, X, T);
      Caches cache;
      Matrix Y = LstmTrainer::forward(m, X, &cache);
      double batch_loss =
          (Y - T).squaredNorm() / static_cast<double>(F * count);
      if (!std::isfinite(batch_loss))
        throw std::runtime_error(
            "train: loss became non-finite at epoch " + std::to_string(epoch) +
            " (learning rate " + std::to_string(hp.learning_rate) + ")");
      loss_sum += batch_loss * static_cast<double>(count);
      seen += count;
      Matrix dY = 2.0 * (Y - T) / static_cast<double>(F * count);
      Grads g = LstmTrainer::backward(m, X, cache, dY, false);
      LstmTrainer::apply(m, g, hp.learning_rate);
      if (!LstmTrainer::finite(m))
        throw std::runtime_error("train: weights became non-finite at epoch " +
                                 std::to_string(epoch));
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(seen));
  }

  // evaluation pass (also covers epochs == 0)
  double loss = 0.0;
  for (const auto& w : windows) loss += mse_loss(m.predict(w.input), w.target);
  result.final_loss = loss / static_cast<double>(n);
  return result;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols =
      rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = j[static_cast<size_t>(r)][static_cast<size_t>(c)].get<double>();
  return m;
}

nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const nlohmann::json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v(i) = j[static_cast<size_t>(i)].get<double>();
  return v;
}

}  // namespace

void save_model(const LstmModel& m, const std::string& path) {
  nlohmann::json j;
  j["format"] = "cpsw-lstm";
  j["version"] = 1;
  j["schema_hash"] = m.schema_hash;
  j["hyperparams"] = {{"window", m.hp_.window},
                      {"hidden", m.hp_.hidden},
                      {"layers", m.hp_.layers},
                      {"learning_rate", m.hp_.learning_rate},
                      {"epochs", m.hp_.epochs},
                      {"batch", m.hp_.batch},
                      {"seed", m.hp_.seed}};
  j["input_dim"] = m.input_dim_;
  nlohmann::json norm = nlohmann::json::array();
  for (const auto& s : m.norm.sensors)
    norm.push_back({{"min", s.min}, {"max", s.max}, {"constant", s.constant}});
  j["norm"] = std::move(norm);
  static const char* gate_names[4] = {"i", "f", "o", "g"};
  for (int k = 0; k < 4; ++k) {
    j["weights"]["Wx"][gate_names[k]] = matrix_to_json(m.Wx_[k]);
    j["weights"]["Wh"][gate_names[k]] = matrix_to_json(m.Wh_[k]);
    j["weights"]["b"][gate_names[k]] = vector_to_json(m.b_[k]);
  }
  j["weights"]["Wy"] = matrix_to_json(m.Wy_);
  j["weights"]["by"] = vector_to_json(m.by_);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  out << j.dump();
  if (!out) throw std::runtime_error("write failed: " + path);
}

LstmModel load_model(const std::string& path, std::uint64_t expected_schema_hash) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("model file is not valid JSON: " + path + ": " +
                             e.what());
  }
  if (j.value("format", "") != "cpsw-lstm" || j.value("version", 0) != 1)
    throw std::runtime_error("unsupported model container: " + path);

  LstmModel m;
  m.schema_hash = j.at("schema_hash").get<std::uint64_t>();
  if (expected_schema_hash != 0 && m.schema_hash != expected_schema_hash)
    throw std::runtime_error("model schema hash mismatch for " + path);
  const auto& h = j.at("hyperparams");
  m.hp_.window = h.at("window").get<int>();
  m.hp_.hidden = h.at("hidden").get<int>();
  m.hp_.layers = h.at("layers").get<int>();
  m.hp_.learning_rate = h.at("learning_rate").get<double>();
  m.hp_.epochs = h.at("epochs").get<int>();
  m.hp_.batch = h.at("batch").get<int>();
  m.hp_.seed = h.at("seed").get<unsigned>();
  m.input_dim_ = j.at("input_dim").get<int>();
  for (const auto& s : j.at("norm")) {
    NormParams::SensorRange r;
    r.min = s.at("min").get<double>();
    r.max = s.at("max").get<double>();
    r.constant = s.at("constant").get<bool>();
    m.norm.sensors.push_back(r);
  }
  static const char* gate_names[4] = {"i", "f", "o", "g"};
  for (int k = 0; k < 4; ++k) {
    m.Wx_[k] = matrix_from_json(j.at("weights").at("Wx").at(gate_names[k]));
    m.Wh_[k] = matrix_from_json(j.at("weights").at("Wh").at(gate_names[k]));
    m.b_[k] = vector_from_json(j.at("weights").at("b").at(gate_names[k]));
  }
  m.Wy_ = matrix_from_json(j.at("weights").at("Wy"));
  m.by_ = vector_from_json(j.at("weights").at("by"));
  return m;
}

}  // namespace cpsw
