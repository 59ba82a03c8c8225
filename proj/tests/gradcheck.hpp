#pragma once

// Central finite-difference check of the manual backward passes.

#include <algorithm>
#include <cmath>
#include <memory>

#include "occsp/nn.hpp"

namespace gradcheck {

struct Outcome {
  double max_rel_error = 0.0;
  long checked = 0;
  std::vector<std::string> layer_types;
};

/// Random small network k: two conv/batchnorm/relu/pool stages, flatten, a
/// dense/relu/dropout(p=0) block and a dense head, on a random batch.
inline Outcome check_network(int k) {
  using namespace occsp;
  using namespace occsp::nn;
  CounterRng rng(1000 + static_cast<std::uint64_t>(k), 7);
  const int c0 = 1 + k % 3, c1 = 2 + k % 2, c2 = 2 + (k / 2) % 3;
  const int H = 4 + 4 * (k % 2), W = 4 + 4 * ((k / 3) % 2);
  const int kernel = k % 4 == 3 ? 1 : 3;
  const int hidden = 3 + k % 5, classes = 2 + k % 3, N = 3 + k % 3;

  Network net;
  net.add(std::make_unique<Conv2d>(c0, c1, kernel, rng));
  net.add(std::make_unique<BatchNorm>(c1));
  net.add(std::make_unique<ReLU>());
  net.add(std::make_unique<MaxPool2d>());
  net.add(std::make_unique<Conv2d>(c1, c2, 3, rng));
  net.add(std::make_unique<BatchNorm>(c2));
  net.add(std::make_unique<ReLU>());
  net.add(std::make_unique<MaxPool2d>());
  net.add(std::make_unique<Flatten>());
  net.add(std::make_unique<Dense>(c2 * (H / 4) * (W / 4), hidden, rng));
  net.add(std::make_unique<ReLU>());
  net.add(std::make_unique<Dropout>(0.0, 3));
  net.add(std::make_unique<Dense>(hidden, classes, rng));

  // perturb batchnorm affine parameters away from (1, 0)
  for (auto* p : net.params())
    for (auto& v : p->value) v += rng.uniform(-0.3, 0.3);

  Tensor x({N, c0, H, W});
  for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);
  std::vector<int> labels;
  for (int n = 0; n < N; ++n) labels.push_back(rng.uniform_int(0, classes - 1));
  std::vector<double> weights;
  for (int c = 0; c < classes; ++c) weights.push_back(rng.uniform(0.5, 2.0));

  auto loss_at = [&]() { return weighted_cross_entropy(net.forward(x, Mode::Train), labels, weights).loss; };

  net.zero_grad();
  const auto lr = weighted_cross_entropy(net.forward(x, Mode::Train), labels, weights);
  net.backward(lr.grad);

  Outcome out;
  for (std::size_t i = 0; i < net.size(); ++i) out.layer_types.push_back(net.layer(i).type());
  // conv biases feeding batchnorm have exactly zero gradient; the floor keeps
  // their finite-difference round-off from reading as relative error
  const double h = 1e-5;
  for (auto* p : net.params()) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double keep = p->value[i];
      p->value[i] = keep + h;
      const double up = loss_at();
      p->value[i] = keep - h;
      const double down = loss_at();
      p->value[i] = keep;
      const double numeric = (up - down) / (2 * h);
      const double analytic = p->grad[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      out.max_rel_error = std::max(out.max_rel_error, std::abs(analytic - numeric) / denom);
      ++out.checked;
    }
  }
  return out;
}

}  // namespace gradcheck
