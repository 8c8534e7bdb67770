#include "marginbench/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "marginbench/errors.hpp"
#include "marginbench/losses.hpp"
#include "marginbench/rng.hpp"

namespace marginbench {

const char* to_string(AdvMode mode) {
  switch (mode) {
    case AdvMode::none: return "none";
    case AdvMode::pgd: return "pgd";
    case AdvMode::mm: return "mm";
  }
  return "?";
}

std::optional<AdvMode> adv_mode_from_string(const std::string& name) {
  if (name == "none") return AdvMode::none;
  if (name == "pgd") return AdvMode::pgd;
  if (name == "mm") return AdvMode::mm;
  return std::nullopt;
}

Classifier init_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                    std::size_t class_count, std::uint64_t seed) {
  if (input_dim == 0 || class_count < 2) {
    throw UsageError("init_mlp: needs input_dim >= 1 and class_count >= 2");
  }
  std::vector<std::size_t> widths;
  widths.push_back(input_dim);
  for (std::size_t h : hidden) {
    if (h == 0) throw UsageError("init_mlp: hidden widths must be >= 1");
    widths.push_back(h);
  }
  widths.push_back(class_count);

  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    std::size_t in = widths[l];
    std::size_t out = widths[l + 1];
    Rng rng(stream_key(seed, 0x696e6974ULL, l));
    double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    std::vector<double> w(in * out);
    for (double& v : w) v = rng.uniform(-bound, bound);
    layers.push_back(Layer::affine(Tensor::matrix(out, in, std::move(w)),
                                   Tensor::zeros({out})));
    if (l + 2 < widths.size()) layers.push_back(Layer::relu());
  }
  return Classifier(input_dim, std::move(layers));
}

TrainResult adversarial_train(const Dataset& data, const TrainConfig& cfg) {
  if (cfg.lr <= 0.0) throw UsageError("adversarial_train: lr must be > 0");
  if (cfg.batch_size < 1) throw UsageError("adversarial_train: batch_size must be >= 1");
  if (cfg.epochs < 0) throw UsageError("adversarial_train: epochs must be >= 0");
  if (cfg.adv != AdvMode::none && cfg.attack.steps < 1) {
    throw UsageError("adversarial_train: attack steps must be >= 1");
  }
  if (data.size() == 0 && cfg.epochs > 0) {
    throw UsageError("adversarial_train: empty dataset");
  }
  std::size_t input_dim = data.feature_dim == 0 ? 1 : data.feature_dim;

  TrainResult result;
  result.model = init_mlp(input_dim, cfg.hidden, std::max<std::size_t>(data.class_count, 2),
                          cfg.seed);
  Classifier& model = result.model;

  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates keyed by (seed, epoch); attacks get an epoch-mixed seed so
    // every epoch draws fresh starts while the run stays reproducible.
    Rng shuffle_rng(stream_key(cfg.seed, 0x73687566ULL, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = n; i > 1; --i) {
      std::size_t j = shuffle_rng.next_u64() % i;
      std::swap(order[i - 1], order[j]);
    }
    AttackConfig atk = cfg.attack;
    atk.seed = stream_key(cfg.attack.seed, 0x61745f65ULL, static_cast<std::uint64_t>(epoch));

    double lr = cfg.lr;
    if (cfg.lr_decay) {
      if (epoch >= cfg.epochs * 9 / 10) {
        lr = cfg.lr * 0.01;
      } else if (epoch >= cfg.epochs * 6 / 10) {
        lr = cfg.lr * 0.1;
      }
    }

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      std::size_t stop = std::min(n, start + cfg.batch_size);
      ParamGrads grads = zero_param_grads(model);
      for (std::size_t b = start; b < stop; ++b) {
        std::size_t idx = order[b];
        const Tensor& x = data.xs[idx];
        std::size_t y = data.ys[idx];
        Tensor x_adv = x;
        if (cfg.adv == AdvMode::pgd) {
          x_adv = pgd(model, x, y, atk, idx).x_adv;
        } else if (cfg.adv == AdvMode::mm) {
          x_adv = mm_attack(model, x, y, atk, idx).x_adv;
        }
        ForwardTrace trace;
        Tensor z = forward(model, x_adv, &trace);
        LossEval ce = ce_loss(z, y);
        loss_sum += ce.value;
        grads.add(param_gradient(model, trace, ce.grad_z));
      }
      grads.scale_in_place(1.0 / static_cast<double>(stop - start));
      sgd_step(model, grads, lr);
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(n));
  }
  return result;
}

}  // namespace marginbench
