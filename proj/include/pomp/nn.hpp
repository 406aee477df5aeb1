#ifndef POMP_NN_HPP_
#define POMP_NN_HPP_

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pomp/rng.hpp"
#include "pomp/world.hpp"

namespace pomp {

// Observation channels: wall, markers / 8, agent facing N, E, S, W.
inline constexpr int kObsChannels = 6;

// Column-major observation for one world: index c * H * W + row * W + col.
Eigen::VectorXd EncodeObservation(const GridWorld& world);

struct NetConfig {
  int height = 8;
  int width = 8;
  int conv1_filters = 32;
  int conv1_kernel = 4;
  int conv2_filters = 32;
  int conv2_kernel = 2;
  int feature_dim = 32;
  int hidden_dim = 64;
  int mode_inputs = 4;  // one-hot size: init + modes
  int outputs = 4;      // modes + term

  int Conv1Height() const { return height - conv1_kernel + 1; }
  int Conv1Width() const { return width - conv1_kernel + 1; }
  int Conv2Height() const { return Conv1Height() - conv2_kernel + 1; }
  int Conv2Width() const { return Conv1Width() - conv2_kernel + 1; }
  void Validate() const;  // throws ConfigError
  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

struct LayerInfo {
  std::string name;
  int rows;
  int cols;
  long offset;  // weights at offset, then `rows` biases
};

// Intermediate values kept for the backward pass.
struct ForwardCache {
  int batch = 0;
  Eigen::MatrixXd cols1;     // im2col of the observation
  Eigen::MatrixXd act1;      // ReLU(conv1), (F1, B * H1 * W1)
  Eigen::MatrixXd cols2;
  Eigen::MatrixXd act2;      // ReLU(conv2), (F2, B * H2 * W2)
  Eigen::MatrixXd flat;      // (F2 * H2 * W2, B)
  Eigen::MatrixXd features;  // ReLU(fc), (feature_dim, B)
  Eigen::MatrixXd joint;     // [features; mode one-hot]
  Eigen::MatrixXd hidden;    // ReLU, (hidden_dim, B)
  Eigen::MatrixXd logits;    // (outputs, B)
  Eigen::MatrixXd probs;
  Eigen::RowVectorXd value;
};

// Convolutional transition network: two valid convolutions, a feature
// layer, then the mode one-hot joins a hidden layer feeding a policy head
// and a value head. All parameters live in one flat vector.
class TransitionNet {
 public:
  TransitionNet() = default;
  explicit TransitionNet(const NetConfig& config);

  const NetConfig& config() const { return config_; }
  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }
  long ParamCount() const { return params_.size(); }
  const std::vector<LayerInfo>& manifest() const { return manifest_; }

  // Orthogonal weights, zero biases.
  void Initialize(Rng& rng);

  // obs: (C * H * W, B). modes: one-hot index per column.
  ForwardCache Forward(const Eigen::MatrixXd& obs, const std::vector<int>& modes) const;

  // Accumulates dLoss/dParams into grad given dLoss/dLogits and
  // dLoss/dValue.
  void Backward(const ForwardCache& cache, const Eigen::MatrixXd& dlogits,
                const Eigen::RowVectorXd& dvalue, Eigen::VectorXd& grad) const;

  // Single-sample helpers.
  Eigen::VectorXd Probabilities(const Eigen::VectorXd& obs, int mode) const;
  Eigen::VectorXd Features(const Eigen::VectorXd& obs) const;

 private:
  using MapMat = Eigen::Map<Eigen::MatrixXd>;
  using ConstMapMat = Eigen::Map<const Eigen::MatrixXd>;
  using ConstMapVec = Eigen::Map<const Eigen::VectorXd>;

  ConstMapMat W(int layer) const;
  ConstMapVec B(int layer) const;

  NetConfig config_;
  Eigen::VectorXd params_;
  std::vector<LayerInfo> manifest_;
};

// Numerically stable softmax over each column.
Eigen::MatrixXd SoftmaxColumns(const Eigen::MatrixXd& logits);

// Gathers conv patches. in: (C, B * H * W) -> (C * k * k, B * oH * oW).
Eigen::MatrixXd Im2Col(const Eigen::MatrixXd& in, int batch, int h, int w, int k);
// Adjoint of Im2Col.
Eigen::MatrixXd Col2Im(const Eigen::MatrixXd& cols, int channels, int batch, int h, int w,
                       int k);

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(long size, AdamConfig config);
  void Step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  long t_ = 0;
};

}  // namespace pomp

#endif  // POMP_NN_HPP_
