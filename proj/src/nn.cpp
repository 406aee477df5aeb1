#include "pomp/nn.hpp"

#include <algorithm>
#include <cmath>

#include "pomp/errors.hpp"

namespace pomp {

namespace {

enum Layer { kConv1, kConv2, kFc, kHidden, kPolicy, kValue, kLayerCount };

Eigen::MatrixXd Relu(const Eigen::MatrixXd& x) { return x.cwiseMax(0.0); }

void MaskRelu(Eigen::MatrixXd& grad, const Eigen::MatrixXd& activation) {
  grad = (activation.array() > 0.0).select(grad, 0.0);
}

Eigen::MatrixXd Orthogonal(int rows, int cols, double gain, Rng& rng) {
  const int big = std::max(rows, cols);
  const int small = std::min(rows, cols);
  Eigen::MatrixXd g(big, small);
  for (int j = 0; j < small; ++j)
    for (int i = 0; i < big; ++i) g(i, j) = rng.Normal(1.0);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
  for (int j = 0; j < small; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  if (rows < cols) q.transposeInPlace();
  return gain * q;
}

}  // namespace

Eigen::VectorXd EncodeObservation(const GridWorld& world) {
  const int h = world.height();
  const int w = world.width();
  const int plane = h * w;
  Eigen::VectorXd obs = Eigen::VectorXd::Zero(kObsChannels * plane);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int p = r * w + c;
      if (world.IsWall({r, c})) obs(p) = 1.0;
      obs(plane + p) = world.Markers({r, c}) / static_cast<double>(kMaxMarkers);
    }
  }
  const Cell a = world.agent();
  obs((2 + static_cast<int>(world.heading())) * plane + a.row * w + a.col) = 1.0;
  return obs;
}

void NetConfig::Validate() const {
  if (height <= 0 || width <= 0) throw ConfigError("net: grid size must be positive");
  if (conv1_kernel <= 0 || conv2_kernel <= 0) throw ConfigError("net: kernel must be positive");
  if (Conv2Height() <= 0 || Conv2Width() <= 0)
    throw ConfigError("net: grid too small for the convolution stack");
  if (conv1_filters <= 0 || conv2_filters <= 0 || feature_dim <= 0 || hidden_dim <= 0)
    throw ConfigError("net: layer widths must be positive");
  if (mode_inputs <= 0 || outputs <= 1) throw ConfigError("net: bad mode/output size");
}

TransitionNet::TransitionNet(const NetConfig& config) : config_(config) {
  config_.Validate();
  const int k1 = config_.conv1_kernel;
  const int k2 = config_.conv2_kernel;
  const int flat = config_.conv2_filters * config_.Conv2Height() * config_.Conv2Width();
  const std::pair<int, int> shapes[kLayerCount] = {
      {config_.conv1_filters, kObsChannels * k1 * k1},
      {config_.conv2_filters, config_.conv1_filters * k2 * k2},
      {config_.feature_dim, flat},
      {config_.hidden_dim, config_.feature_dim + config_.mode_inputs},
      {config_.outputs, config_.hidden_dim},
      {1, config_.hidden_dim},
  };
  const char* names[kLayerCount] = {"conv1", "conv2", "feature", "hidden", "policy", "value"};
  long offset = 0;
  for (int l = 0; l < kLayerCount; ++l) {
    manifest_.push_back({names[l], shapes[l].first, shapes[l].second, offset});
    offset += static_cast<long>(shapes[l].first) * (shapes[l].second + 1);
  }
  params_ = Eigen::VectorXd::Zero(offset);
}

void TransitionNet::Initialize(Rng& rng) {
  params_.setZero();
  for (int l = 0; l < kLayerCount; ++l) {
    const LayerInfo& info = manifest_[static_cast<std::size_t>(l)];
    double gain = std::sqrt(2.0);
    if (l == kPolicy) gain = 0.01;
    if (l == kValue) gain = 1.0;
    MapMat(params_.data() + info.offset, info.rows, info.cols) =
        Orthogonal(info.rows, info.cols, gain, rng);
  }
}

TransitionNet::ConstMapMat TransitionNet::W(int layer) const {
  const LayerInfo& info = manifest_[static_cast<std::size_t>(layer)];
  return ConstMapMat(params_.data() + info.offset, info.rows, info.cols);
}

TransitionNet::ConstMapVec TransitionNet::B(int layer) const {
  const LayerInfo& info = manifest_[static_cast<std::size_t>(layer)];
  return ConstMapVec(params_.data() + info.offset + static_cast<long>(info.rows) * info.cols,
                     info.rows);
}

Eigen::MatrixXd Im2Col(const Eigen::MatrixXd& in, int batch, int h, int w, int k) {
  const int channels = static_cast<int>(in.rows());
  const int oh = h - k + 1;
  const int ow = w - k + 1;
  Eigen::MatrixXd cols(channels * k * k, batch * oh * ow);
  for (int b = 0; b < batch; ++b) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const int col = b * oh * ow + oy * ow + ox;
        for (int c = 0; c < channels; ++c)
          for (int dy = 0; dy < k; ++dy)
            for (int dx = 0; dx < k; ++dx)
              cols(c * k * k + dy * k + dx, col) = in(c, b * h * w + (oy + dy) * w + ox + dx);
      }
    }
  }
  return cols;
}

Eigen::MatrixXd Col2Im(const Eigen::MatrixXd& cols, int channels, int batch, int h, int w,
                       int k) {
  const int oh = h - k + 1;
  const int ow = w - k + 1;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(channels, batch * h * w);
  for (int b = 0; b < batch; ++b) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const int col = b * oh * ow + oy * ow + ox;
        for (int c = 0; c < channels; ++c)
          for (int dy = 0; dy < k; ++dy)
            for (int dx = 0; dx < k; ++dx)
              out(c, b * h * w + (oy + dy) * w + ox + dx) += cols(c * k * k + dy * k + dx, col);
      }
    }
  }
  return out;
}

Eigen::MatrixXd SoftmaxColumns(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double m = logits.col(j).maxCoeff();
    out.col(j) = (logits.col(j).array() - m).exp();
    out.col(j) /= out.col(j).sum();
  }
  return out;
}

ForwardCache TransitionNet::Forward(const Eigen::MatrixXd& obs,
                                    const std::vector<int>& modes) const {
  const NetConfig& n = config_;
  const int batch = static_cast<int>(obs.cols());
  const int plane = n.height * n.width;
  if (obs.rows() != kObsChannels * plane || static_cast<int>(modes.size()) != batch)
    throw ConfigError("net: input shape mismatch");
  ForwardCache f;
  f.batch = batch;

  // (C*H*W, B) -> (C, B*H*W)
  Eigen::MatrixXd in(kObsChannels, static_cast<Eigen::Index>(batch) * plane);
  for (int b = 0; b < batch; ++b)
    for (int c = 0; c < kObsChannels; ++c)
      for (int p = 0; p < plane; ++p) in(c, b * plane + p) = obs(c * plane + p, b);

  f.cols1 = Im2Col(in, batch, n.height, n.width, n.conv1_kernel);
  f.act1 = Relu((W(kConv1) * f.cols1).colwise() + B(kConv1));
  f.cols2 = Im2Col(f.act1, batch, n.Conv1Height(), n.Conv1Width(), n.conv2_kernel);
  f.act2 = Relu((W(kConv2) * f.cols2).colwise() + B(kConv2));

  const int plane2 = n.Conv2Height() * n.Conv2Width();
  f.flat.resize(static_cast<Eigen::Index>(n.conv2_filters) * plane2, batch);
  for (int b = 0; b < batch; ++b)
    for (int c = 0; c < n.conv2_filters; ++c)
      for (int p = 0; p < plane2; ++p) f.flat(c * plane2 + p, b) = f.act2(c, b * plane2 + p);

  f.features = Relu((W(kFc) * f.flat).colwise() + B(kFc));
  f.joint = Eigen::MatrixXd::Zero(n.feature_dim + n.mode_inputs, batch);
  f.joint.topRows(n.feature_dim) = f.features;
  for (int b = 0; b < batch; ++b) {
    const int m = modes[static_cast<std::size_t>(b)];
    if (m < 0 || m >= n.mode_inputs) throw ConfigError("net: mode index out of range");
    f.joint(n.feature_dim + m, b) = 1.0;
  }
  f.hidden = Relu((W(kHidden) * f.joint).colwise() + B(kHidden));
  f.logits = (W(kPolicy) * f.hidden).colwise() + B(kPolicy);
  f.probs = SoftmaxColumns(f.logits);
  f.value = ((W(kValue) * f.hidden).colwise() + B(kValue)).row(0);
  return f;
}

void TransitionNet::Backward(const ForwardCache& f, const Eigen::MatrixXd& dlogits,
                             const Eigen::RowVectorXd& dvalue, Eigen::VectorXd& grad) const {
  const NetConfig& n = config_;
  if (grad.size() != params_.size()) grad = Eigen::VectorXd::Zero(params_.size());
  auto gw = [&](int l) {
    const LayerInfo& info = manifest_[static_cast<std::size_t>(l)];
    return MapMat(grad.data() + info.offset, info.rows, info.cols);
  };
  auto gb = [&](int l) {
    const LayerInfo& info = manifest_[static_cast<std::size_t>(l)];
    return Eigen::Map<Eigen::VectorXd>(
        grad.data() + info.offset + static_cast<long>(info.rows) * info.cols, info.rows);
  };

  gw(kPolicy) += dlogits * f.hidden.transpose();
  gb(kPolicy) += dlogits.rowwise().sum();
  gw(kValue) += dvalue * f.hidden.transpose();
  gb(kValue)(0) += dvalue.sum();

  Eigen::MatrixXd dh = W(kPolicy).transpose() * dlogits + W(kValue).transpose() * dvalue;
  MaskRelu(dh, f.hidden);
  gw(kHidden) += dh * f.joint.transpose();
  gb(kHidden) += dh.rowwise().sum();

  Eigen::MatrixXd dfeat = (W(kHidden).transpose() * dh).topRows(n.feature_dim);
  MaskRelu(dfeat, f.features);
  gw(kFc) += dfeat * f.flat.transpose();
  gb(kFc) += dfeat.rowwise().sum();

  const Eigen::MatrixXd dflat = W(kFc).transpose() * dfeat;
  const int plane2 = n.Conv2Height() * n.Conv2Width();
  Eigen::MatrixXd dact2(n.conv2_filters, static_cast<Eigen::Index>(f.batch) * plane2);
  for (int b = 0; b < f.batch; ++b)
    for (int c = 0; c < n.conv2_filters; ++c)
      for (int p = 0; p < plane2; ++p) dact2(c, b * plane2 + p) = dflat(c * plane2 + p, b);
  MaskRelu(dact2, f.act2);
  gw(kConv2) += dact2 * f.cols2.transpose();
  gb(kConv2) += dact2.rowwise().sum();

  const Eigen::MatrixXd dcols2 = W(kConv2).transpose() * dact2;
  Eigen::MatrixXd dact1 = Col2Im(dcols2, n.conv1_filters, f.batch, n.Conv1Height(),
                                 n.Conv1Width(), n.conv2_kernel);
  MaskRelu(dact1, f.act1);
  gw(kConv1) += dact1 * f.cols1.transpose();
  gb(kConv1) += dact1.rowwise().sum();
}

Eigen::VectorXd TransitionNet::Probabilities(const Eigen::VectorXd& obs, int mode) const {
  return Forward(obs, {mode}).probs.col(0);
}

Eigen::VectorXd TransitionNet::Features(const Eigen::VectorXd& obs) const {
  return Forward(obs, {0}).features.col(0);
}

Adam::Adam(long size, AdamConfig config)
    : config_(config), m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)) {}

void Adam::Step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  ++t_;
  m_ = config_.beta1 * m_ + (1.0 - config_.beta1) * grad;
  v_ = config_.beta2 * v_ + (1.0 - config_.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  params.array() -=
      config_.learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + config_.epsilon);
}

}  // namespace pomp
