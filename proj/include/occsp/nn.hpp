#pragma once

// Small dense/convolutional network stack with manual backpropagation.
// Tensors are NCHW (or NC) in double precision; layers cache what their
// backward pass needs from the most recent forward call.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "occsp/rng.hpp"

namespace occsp::nn {

struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(count(shape), 0.0) {}
  Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {}

  static std::size_t count(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int v : s) n *= static_cast<std::size_t>(v);
    return n;
  }
  int batch() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t per_sample() const { return shape.empty() ? 0 : data.size() / static_cast<std::size_t>(shape[0]); }
};

enum class Mode { Train, Eval };

struct Param {
  std::vector<double> value;
  std::vector<double> grad;
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string type() const = 0;
  virtual Tensor forward(const Tensor& x, Mode mode) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;
  virtual std::vector<Param*> params() { return {}; }
  virtual std::unique_ptr<Layer> clone() const = 0;
  virtual nlohmann::json to_json() const = 0;
};

class Conv2d : public Layer {
 public:
  /// 3x3-style square kernel with zero padding that preserves H and W.
  Conv2d(int in_channels, int out_channels, int kernel, CounterRng& rng);
  std::string type() const override { return "conv2d"; }
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override { return {&weight_, &bias_}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv2d>(*this); }
  nlohmann::json to_json() const override;
  static std::unique_ptr<Conv2d> from_json(const nlohmann::json& j);

 private:
  Conv2d() = default;
  int in_ = 0, out_ = 0, k_ = 3;
  Param weight_, bias_;
  Tensor input_;
};

/// Per-channel normalisation over batch (and spatial) axes. Train mode uses
/// batch statistics and updates running averages; eval mode uses the
/// running averages.
class BatchNorm : public Layer {
 public:
  explicit BatchNorm(int channels, double momentum = 0.1, double eps = 1e-5);
  std::string type() const override { return "batchnorm"; }
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override { return {&gamma_, &beta_}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<BatchNorm>(*this); }
  nlohmann::json to_json() const override;
  static std::unique_ptr<BatchNorm> from_json(const nlohmann::json& j);

 private:
  int c_;
  double momentum_, eps_;
  Param gamma_, beta_;
  std::vector<double> running_mean_, running_var_;
  // cache
  Mode mode_ = Mode::Eval;
  Tensor xhat_;
  std::vector<double> inv_std_;
};

class ReLU : public Layer {
 public:
  std::string type() const override { return "relu"; }
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<ReLU>(*this); }
  nlohmann::json to_json() const override { return {{"type", type()}}; }

 private:
  Tensor input_;
};

/// 2x2 max pooling with stride 2; odd trailing rows/columns are dropped.
class MaxPool2d : public Layer {
 public:
  std::string type() const override { return "maxpool2d"; }
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<MaxPool2d>(*this); }
  nlohmann::json to_json() const override { return {{"type", type()}}; }

 private:
  std::vector<int> in_shape_;
  std::vector<std::size_t> argmax_;
};

class Flatten : public Layer {
 public:
  std::string type() const override { return "flatten"; }
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Flatten>(*this); }
  nlohmann::json to_json() const override { return {{"type", type()}}; }

 private:
  std::vector<int> in_shape_;
};

class Dense : public Layer {
 public:
  Dense(int in, int out, CounterRng& rng);
  std::string type() const override { return "dense"; }
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override { return {&weight_, &bias_}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }
  nlohmann::json to_json() const override;
  static std::unique_ptr<Dense> from_json(const nlohmann::json& j);
  int in() const { return in_; }
  int out() const { return out_; }

 private:
  Dense() = default;
  int in_ = 0, out_ = 0;
  Param weight_, bias_;
  Tensor input_;
};

/// Inverted dropout; identity in eval mode.
class Dropout : public Layer {
 public:
  Dropout(double p, std::uint64_t seed) : p_(p), rng_(seed, 0xd80) {}
  std::string type() const override { return "dropout"; }
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dropout>(*this); }
  nlohmann::json to_json() const override { return {{"type", type()}, {"p", p_}}; }
  void reseed(std::uint64_t seed) { rng_ = CounterRng(seed, 0xd80); }

 private:
  double p_;
  CounterRng rng_;
  std::vector<double> mask_;
};

class Network {
 public:
  Network() = default;
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }
  Tensor forward(const Tensor& x, Mode mode);
  /// Backpropagates d(loss)/d(output), accumulating parameter gradients.
  void backward(const Tensor& grad_out);
  void zero_grad();
  std::vector<Param*> params();
  long parameter_count() const;
  std::size_t size() const { return layers_.size(); }
  const Layer& layer(std::size_t i) const { return *layers_[i]; }
  /// Re-keys every dropout layer's mask stream.
  void reseed_dropout(std::uint64_t seed);

  nlohmann::json to_json() const;
  static Network from_json(const nlohmann::json& j);

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// Row-wise softmax of [N, K] logits.
Tensor softmax(const Tensor& logits);

struct LossResult {
  double loss = 0.0;
  Tensor grad;  // d(loss)/d(logits)
};

/// Class-weighted cross-entropy averaged by total sample weight:
/// sum_n w[y_n] * -log p_n[y_n] / sum_n w[y_n].
LossResult weighted_cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                                  const std::vector<double>& class_weights);

class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}
  void step(const std::vector<Param*>& params);

 private:
  double lr_, b1_, b2_, eps_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace occsp::nn
