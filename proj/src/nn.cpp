#include "occsp/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace occsp::nn {

namespace {

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
void init_uniform(Param& p, std::size_t n, int fan_in, CounterRng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  p.value.resize(n);
  p.grad.assign(n, 0.0);
  for (auto& v : p.value) v = rng.uniform(-bound, bound);
}

Param param_from(const nlohmann::json& j) {
  Param p;
  p.value = j.get<std::vector<double>>();
  p.grad.assign(p.value.size(), 0.0);
  return p;
}

}  // namespace

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, CounterRng& rng)
    : in_(in_channels), out_(out_channels), k_(kernel) {
  if (kernel % 2 == 0) throw std::invalid_argument("Conv2d: kernel size must be odd");
  const int fan_in = in_ * k_ * k_;
  init_uniform(weight_, static_cast<std::size_t>(out_) * in_ * k_ * k_, fan_in, rng);
  init_uniform(bias_, static_cast<std::size_t>(out_), fan_in, rng);
}

Tensor Conv2d::forward(const Tensor& x, Mode) {
  if (x.shape.size() != 4 || x.shape[1] != in_) throw std::invalid_argument("Conv2d: bad input shape");
  input_ = x;
  const int N = x.shape[0], H = x.shape[2], W = x.shape[3], pad = k_ / 2;
  Tensor y({N, out_, H, W});
  for (int n = 0; n < N; ++n)
    for (int oc = 0; oc < out_; ++oc) {
      double* yp = &y.data[(static_cast<std::size_t>(n) * out_ + oc) * H * W];
      std::fill(yp, yp + H * W, bias_.value[static_cast<std::size_t>(oc)]);
      for (int ic = 0; ic < in_; ++ic) {
        const double* xp = &x.data[(static_cast<std::size_t>(n) * in_ + ic) * H * W];
        const double* wp = &weight_.value[(static_cast<std::size_t>(oc) * in_ + ic) * k_ * k_];
        for (int ky = 0; ky < k_; ++ky)
          for (int kx = 0; kx < k_; ++kx) {
            const double w = wp[ky * k_ + kx];
            const int dy = ky - pad, dx = kx - pad;
            const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
            for (int r = std::max(0, -dy); r < std::min(H, H - dy); ++r) {
              double* yr = yp + r * W;
              const double* xr = xp + (r + dy) * W + dx;
              for (int c = x0; c < x1; ++c) yr[c] += w * xr[c];
            }
          }
      }
    }
  return y;
}

Tensor Conv2d::backward(const Tensor& g) {
  const Tensor& x = input_;
  const int N = x.shape[0], H = x.shape[2], W = x.shape[3], pad = k_ / 2;
  Tensor dx(x.shape);
  for (int n = 0; n < N; ++n)
    for (int oc = 0; oc < out_; ++oc) {
      const double* gp = &g.data[(static_cast<std::size_t>(n) * out_ + oc) * H * W];
      double bsum = 0.0;
      for (int i = 0; i < H * W; ++i) bsum += gp[i];
      bias_.grad[static_cast<std::size_t>(oc)] += bsum;
      for (int ic = 0; ic < in_; ++ic) {
        const double* xp = &x.data[(static_cast<std::size_t>(n) * in_ + ic) * H * W];
        double* dxp = &dx.data[(static_cast<std::size_t>(n) * in_ + ic) * H * W];
        const std::size_t woff = (static_cast<std::size_t>(oc) * in_ + ic) * k_ * k_;
        for (int ky = 0; ky < k_; ++ky)
          for (int kx = 0; kx < k_; ++kx) {
            const double w = weight_.value[woff + ky * k_ + kx];
            const int dy = ky - pad, ddx = kx - pad;
            const int x0 = std::max(0, -ddx), x1 = std::min(W, W - ddx);
            double wg = 0.0;
            for (int r = std::max(0, -dy); r < std::min(H, H - dy); ++r) {
              const double* gr = gp + r * W;
              const double* xr = xp + (r + dy) * W + ddx;
              double* dxr = dxp + (r + dy) * W + ddx;
              for (int c = x0; c < x1; ++c) {
                wg += gr[c] * xr[c];
                dxr[c] += w * gr[c];
              }
            }
            weight_.grad[woff + ky * k_ + kx] += wg;
          }
      }
    }
  return dx;
}

nlohmann::json Conv2d::to_json() const {
  return {{"type", type()}, {"in", in_}, {"out", out_}, {"kernel", k_}, {"weight", weight_.value}, {"bias", bias_.value}};
}

std::unique_ptr<Conv2d> Conv2d::from_json(const nlohmann::json& j) {
  std::unique_ptr<Conv2d> c(new Conv2d());
  c->in_ = j.at("in");
  c->out_ = j.at("out");
  c->k_ = j.at("kernel");
  c->weight_ = param_from(j.at("weight"));
  c->bias_ = param_from(j.at("bias"));
  return c;
}

// ------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(int channels, double momentum, double eps)
    : c_(channels), momentum_(momentum), eps_(eps) {
  gamma_.value.assign(static_cast<std::size_t>(c_), 1.0);
  gamma_.grad.assign(static_cast<std::size_t>(c_), 0.0);
  beta_.value.assign(static_cast<std::size_t>(c_), 0.0);
  beta_.grad.assign(static_cast<std::size_t>(c_), 0.0);
  running_mean_.assign(static_cast<std::size_t>(c_), 0.0);
  running_var_.assign(static_cast<std::size_t>(c_), 1.0);
}

namespace {
// Shape helper: [N, C] or [N, C, H, W] -> (N, C, spatial)
void bn_dims(const Tensor& x, int c, int& N, int& S) {
  if (x.shape.size() < 2 || x.shape[1] != c) throw std::invalid_argument("BatchNorm: bad input shape");
  N = x.shape[0];
  S = 1;
  for (std::size_t i = 2; i < x.shape.size(); ++i) S *= x.shape[i];
}
}  // namespace

Tensor BatchNorm::forward(const Tensor& x, Mode mode) {
  int N, S;
  bn_dims(x, c_, N, S);
  mode_ = mode;
  Tensor y(x.shape);
  xhat_ = Tensor(x.shape);
  inv_std_.assign(static_cast<std::size_t>(c_), 0.0);
  const double m = static_cast<double>(N) * S;
  for (int ch = 0; ch < c_; ++ch) {
    double mean, var;
    if (mode == Mode::Train) {
      double s = 0.0;
      for (int n = 0; n < N; ++n)
        for (int i = 0; i < S; ++i) s += x.data[(static_cast<std::size_t>(n) * c_ + ch) * S + i];
      mean = s / m;
      double v = 0.0;
      for (int n = 0; n < N; ++n)
        for (int i = 0; i < S; ++i) {
          const double d = x.data[(static_cast<std::size_t>(n) * c_ + ch) * S + i] - mean;
          v += d * d;
        }
      var = v / m;
      const double unbiased = m > 1 ? v / (m - 1) : var;
      running_mean_[ch] = (1 - momentum_) * running_mean_[ch] + momentum_ * mean;
      running_var_[ch] = (1 - momentum_) * running_var_[ch] + momentum_ * unbiased;
    } else {
      mean = running_mean_[ch];
      var = running_var_[ch];
    }
    const double inv = 1.0 / std::sqrt(var + eps_);
    inv_std_[ch] = inv;
    for (int n = 0; n < N; ++n)
      for (int i = 0; i < S; ++i) {
        const std::size_t idx = (static_cast<std::size_t>(n) * c_ + ch) * S + i;
        xhat_.data[idx] = (x.data[idx] - mean) * inv;
        y.data[idx] = gamma_.value[ch] * xhat_.data[idx] + beta_.value[ch];
      }
  }
  return y;
}

Tensor BatchNorm::backward(const Tensor& g) {
  int N, S;
  bn_dims(g, c_, N, S);
  Tensor dx(g.shape);
  const double m = static_cast<double>(N) * S;
  for (int ch = 0; ch < c_; ++ch) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (int n = 0; n < N; ++n)
      for (int i = 0; i < S; ++i) {
        const std::size_t idx = (static_cast<std::size_t>(n) * c_ + ch) * S + i;
        sum_g += g.data[idx];
        sum_gx += g.data[idx] * xhat_.data[idx];
      }
    gamma_.grad[ch] += sum_gx;
    beta_.grad[ch] += sum_g;
    const double k = gamma_.value[ch] * inv_std_[ch];
    for (int n = 0; n < N; ++n)
      for (int i = 0; i < S; ++i) {
        const std::size_t idx = (static_cast<std::size_t>(n) * c_ + ch) * S + i;
        if (mode_ == Mode::Train)
          dx.data[idx] = k * (g.data[idx] - sum_g / m - xhat_.data[idx] * sum_gx / m);
        else
          dx.data[idx] = k * g.data[idx];
      }
  }
  return dx;
}

nlohmann::json BatchNorm::to_json() const {
  return {{"type", type()},         {"channels", c_},        {"momentum", momentum_},
          {"eps", eps_},            {"gamma", gamma_.value}, {"beta", beta_.value},
          {"running_mean", running_mean_}, {"running_var", running_var_}};
}

std::unique_ptr<BatchNorm> BatchNorm::from_json(const nlohmann::json& j) {
  auto b = std::make_unique<BatchNorm>(j.at("channels").get<int>(), j.at("momentum").get<double>(),
                                       j.at("eps").get<double>());
  b->gamma_ = param_from(j.at("gamma"));
  b->beta_ = param_from(j.at("beta"));
  b->running_mean_ = j.at("running_mean").get<std::vector<double>>();
  b->running_var_ = j.at("running_var").get<std::vector<double>>();
  return b;
}

// ---------------------------------------------------------- ReLU / pool

Tensor ReLU::forward(const Tensor& x, Mode) {
  input_ = x;
  Tensor y = x;
  for (auto& v : y.data) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor ReLU::backward(const Tensor& g) {
  Tensor dx = g;
  for (std::size_t i = 0; i < dx.data.size(); ++i)
    if (input_.data[i] <= 0.0) dx.data[i] = 0.0;
  return dx;
}

Tensor MaxPool2d::forward(const Tensor& x, Mode) {
  if (x.shape.size() != 4) throw std::invalid_argument("MaxPool2d: expected NCHW input");
  in_shape_ = x.shape;
  const int N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
  const int Ho = H / 2, Wo = W / 2;
  if (Ho < 1 || Wo < 1) throw std::invalid_argument("MaxPool2d: input smaller than the 2x2 window");
  Tensor y({N, C, Ho, Wo});
  argmax_.assign(y.data.size(), 0);
  std::size_t o = 0;
  for (int nc = 0; nc < N * C; ++nc) {
    const std::size_t base = static_cast<std::size_t>(nc) * H * W;
    for (int r = 0; r < Ho; ++r)
      for (int c = 0; c < Wo; ++c, ++o) {
        std::size_t best = base + static_cast<std::size_t>(2 * r) * W + 2 * c;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const std::size_t idx = base + static_cast<std::size_t>(2 * r + dy) * W + 2 * c + dx;
            if (x.data[idx] > x.data[best]) best = idx;
          }
        argmax_[o] = best;
        y.data[o] = x.data[best];
      }
  }
  return y;
}

Tensor MaxPool2d::backward(const Tensor& g) {
  Tensor dx(in_shape_);
  for (std::size_t o = 0; o < g.data.size(); ++o) dx.data[argmax_[o]] += g.data[o];
  return dx;
}

Tensor Flatten::forward(const Tensor& x, Mode) {
  in_shape_ = x.shape;
  return Tensor({x.shape[0], static_cast<int>(x.per_sample())}, x.data);
}

Tensor Flatten::backward(const Tensor& g) { return Tensor(in_shape_, g.data); }

// ----------------------------------------------------------------- Dense

Dense::Dense(int in, int out, CounterRng& rng) : in_(in), out_(out) {
  init_uniform(weight_, static_cast<std::size_t>(in) * out, in, rng);
  init_uniform(bias_, static_cast<std::size_t>(out), in, rng);
}

Tensor Dense::forward(const Tensor& x, Mode) {
  if (x.shape.size() != 2 || x.shape[1] != in_) throw std::invalid_argument("Dense: bad input shape");
  input_ = x;
  const int N = x.shape[0];
  Tensor y({N, out_});
  for (int n = 0; n < N; ++n) {
    const double* xr = &x.data[static_cast<std::size_t>(n) * in_];
    for (int o = 0; o < out_; ++o) {
      const double* wr = &weight_.value[static_cast<std::size_t>(o) * in_];
      double s = bias_.value[o];
      for (int i = 0; i < in_; ++i) s += wr[i] * xr[i];
      y.data[static_cast<std::size_t>(n) * out_ + o] = s;
    }
  }
  return y;
}

Tensor Dense::backward(const Tensor& g) {
  const int N = input_.shape[0];
  Tensor dx(input_.shape);
  for (int n = 0; n < N; ++n) {
    const double* xr = &input_.data[static_cast<std::size_t>(n) * in_];
    double* dxr = &dx.data[static_cast<std::size_t>(n) * in_];
    for (int o = 0; o < out_; ++o) {
      const double go = g.data[static_cast<std::size_t>(n) * out_ + o];
      if (go == 0.0) continue;
      bias_.grad[o] += go;
      const double* wr = &weight_.value[static_cast<std::size_t>(o) * in_];
      double* gw = &weight_.grad[static_cast<std::size_t>(o) * in_];
      for (int i = 0; i < in_; ++i) {
        gw[i] += go * xr[i];
        dxr[i] += go * wr[i];
      }
    }
  }
  return dx;
}

nlohmann::json Dense::to_json() const {
  return {{"type", type()}, {"in", in_}, {"out", out_}, {"weight", weight_.value}, {"bias", bias_.value}};
}

std::unique_ptr<Dense> Dense::from_json(const nlohmann::json& j) {
  std::unique_ptr<Dense> d(new Dense());
  d->in_ = j.at("in");
  d->out_ = j.at("out");
  d->weight_ = param_from(j.at("weight"));
  d->bias_ = param_from(j.at("bias"));
  return d;
}

// --------------------------------------------------------------- Dropout

Tensor Dropout::forward(const Tensor& x, Mode mode) {
  if (mode == Mode::Eval || p_ <= 0.0) {
    mask_.assign(x.data.size(), 1.0);
    return x;
  }
  const double keep = 1.0 - p_;
  mask_.resize(x.data.size());
  Tensor y = x;
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    mask_[i] = rng_.uniform() < keep ? 1.0 / keep : 0.0;
    y.data[i] *= mask_[i];
  }
  return y;
}

Tensor Dropout::backward(const Tensor& g) {
  Tensor dx = g;
  for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] *= mask_[i];
  return dx;
}

// --------------------------------------------------------------- Network

Network::Network(const Network& other) {
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Network& Network::operator=(const Network& other) {
  if (this != &other) {
    layers_.clear();
    for (const auto& l : other.layers_) layers_.push_back(l->clone());
  }
  return *this;
}

Tensor Network::forward(const Tensor& x, Mode mode) {
  Tensor h = x;
  for (auto& l : layers_) h = l->forward(h, mode);
  return h;
}

void Network::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
}

void Network::zero_grad() {
  for (Param* p : params()) std::fill(p->grad.begin(), p->grad.end(), 0.0);
}

std::vector<Param*> Network::params() {
  std::vector<Param*> out;
  for (auto& l : layers_)
    for (Param* p : l->params()) out.push_back(p);
  return out;
}

long Network::parameter_count() const {
  long n = 0;
  for (const auto& l : layers_)
    for (Param* p : const_cast<Layer&>(*l).params()) n += static_cast<long>(p->value.size());
  return n;
}

void Network::reseed_dropout(std::uint64_t seed) {
  std::uint64_t k = 0;
  for (auto& l : layers_)
    if (auto* d = dynamic_cast<Dropout*>(l.get())) d->reseed(hash_combine(seed, k++));
}

nlohmann::json Network::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : layers_) layers.push_back(l->to_json());
  return layers;
}

Network Network::from_json(const nlohmann::json& j) {
  Network net;
  std::uint64_t k = 0;
  for (const auto& lj : j) {
    const std::string t = lj.at("type");
    if (t == "conv2d") net.add(Conv2d::from_json(lj));
    else if (t == "batchnorm") net.add(BatchNorm::from_json(lj));
    else if (t == "relu") net.add(std::make_unique<ReLU>());
    else if (t == "maxpool2d") net.add(std::make_unique<MaxPool2d>());
    else if (t == "flatten") net.add(std::make_unique<Flatten>());
    else if (t == "dense") net.add(Dense::from_json(lj));
    else if (t == "dropout") net.add(std::make_unique<Dropout>(lj.at("p").get<double>(), k++));
    else throw std::invalid_argument("unknown layer type '" + t + "'");
  }
  return net;
}

// ------------------------------------------------------------ loss / opt

Tensor softmax(const Tensor& logits) {
  const int N = logits.shape[0], K = logits.shape[1];
  Tensor p(logits.shape);
  for (int n = 0; n < N; ++n) {
    const double* z = &logits.data[static_cast<std::size_t>(n) * K];
    double* pr = &p.data[static_cast<std::size_t>(n) * K];
    const double mx = *std::max_element(z, z + K);
    double s = 0.0;
    for (int k = 0; k < K; ++k) s += (pr[k] = std::exp(z[k] - mx));
    for (int k = 0; k < K; ++k) pr[k] /= s;
  }
  return p;
}

LossResult weighted_cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                                  const std::vector<double>& class_weights) {
  const int N = logits.shape[0], K = logits.shape[1];
  if (static_cast<int>(labels.size()) != N) throw std::invalid_argument("cross_entropy: label count mismatch");
  LossResult r;
  r.grad = softmax(logits);
  double wsum = 0.0;
  for (int n = 0; n < N; ++n) wsum += class_weights.empty() ? 1.0 : class_weights[labels[n]];
  if (wsum <= 0.0) {
    std::fill(r.grad.data.begin(), r.grad.data.end(), 0.0);
    return r;
  }
  for (int n = 0; n < N; ++n) {
    const int y = labels[n];
    if (y < 0 || y >= K) throw std::invalid_argument("cross_entropy: label out of range");
    const double w = (class_weights.empty() ? 1.0 : class_weights[y]) / wsum;
    double* g = &r.grad.data[static_cast<std::size_t>(n) * K];
    r.loss -= w * std::log(std::max(g[y], std::numeric_limits<double>::min()));
    for (int k = 0; k < K; ++k) g[k] *= w;
    g[y] -= w;
  }
  return r;
}

void Adam::step(const std::vector<Param*>& params) {
  if (m_.size() != params.size()) {
    m_.clear();
    v_.clear();
    for (Param* p : params) {
      m_.emplace_back(p->value.size(), 0.0);
      v_.emplace_back(p->value.size(), 0.0);
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Param& p = *params[k];
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      m[i] = b1_ * m[i] + (1 - b1_) * p.grad[i];
      v[i] = b2_ * v[i] + (1 - b2_) * p.grad[i] * p.grad[i];
      p.value[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

}  // namespace occsp::nn
