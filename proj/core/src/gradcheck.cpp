#include "marginbench/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "marginbench/errors.hpp"
#include "marginbench/losses.hpp"
#include "marginbench/oracle.hpp"
#include "marginbench/rng.hpp"

namespace marginbench {

namespace {

struct LossKindSpec {
  enum class Family { ce, cw, dlr_untargeted, margin };
  Family family;
  Rescaling method = Rescaling::natural;
};

LossEval eval_loss(const LossKindSpec& kind, const Tensor& z, std::size_t y, std::size_t t) {
  switch (kind.family) {
    case LossKindSpec::Family::ce: return ce_loss(z, y);
    case LossKindSpec::Family::cw: return cw_loss(z, y);
    case LossKindSpec::Family::dlr_untargeted: return dlr_loss(z, y);
    case LossKindSpec::Family::margin: return margin_loss(z, y, t, kind.method);
  }
  throw UsageError("gradcheck: unknown loss kind");
}

// Kinks make one-sided finite differences meaningless: reject points whose
// ReLU pre-activations or sorted logits sit within the guard band.
bool near_kink(const Classifier& model, const ForwardTrace& trace, const Tensor& z) {
  constexpr double kGuard = 1e-3;
  for (std::size_t li = 0; li < model.layers().size(); ++li) {
    if (model.layers()[li].kind != Layer::Kind::relu) continue;
    const Tensor& pre = trace.activations[li];
    for (std::size_t i = 0; i < pre.size(); ++i) {
      if (std::abs(pre[i]) < kGuard) return true;
    }
  }
  std::vector<double> sorted(z.data());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] - sorted[i - 1] < kGuard) return true;
  }
  return false;
}

}  // namespace

GradCheckResult gradcheck_model(const Classifier& model, std::size_t trials,
                                std::uint64_t seed, double h) {
  const std::size_t classes = model.class_count();
  std::vector<LossKindSpec> kinds;
  kinds.push_back({LossKindSpec::Family::ce});
  kinds.push_back({LossKindSpec::Family::cw});
  if (classes >= 3) kinds.push_back({LossKindSpec::Family::dlr_untargeted});
  for (Rescaling m : kAllRescalings) {
    if (m == Rescaling::dlr && classes < 4) continue;
    kinds.push_back({LossKindSpec::Family::margin, m});
  }

  GradCheckResult result;
  Rng rng(stream_key(seed, 0x67726164ULL, 0));
  const std::size_t max_attempts = trials * 200 + 1000;

  for (std::size_t attempt = 0; attempt < max_attempts && result.trials < trials; ++attempt) {
    const LossKindSpec& kind = kinds[result.trials % kinds.size()];
    Tensor x = Tensor::zeros({model.input_dim()});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(0.02, 0.98);
    std::size_t y = rng.next_u64() % classes;
    std::size_t t = rng.next_u64() % (classes - 1);
    if (t >= y) ++t;

    ForwardTrace trace;
    Tensor z = forward(model, x, &trace);
    if (near_kink(model, trace, z)) {
      ++result.skipped;
      continue;
    }

    LossEval loss = eval_loss(kind, z, y, t);
    Tensor analytic = input_gradient(model, trace, loss.grad_z);
    if (norm_linf(analytic) < 1e-4) {
      // Saturated (e.g. vanished CE gradient): relative comparison is noise.
      ++result.skipped;
      continue;
    }

    Tensor fd = fd_gradient(
        [&](const Tensor& probe) { return eval_loss(kind, forward(model, probe), y, t).value; },
        x, h);
    double scale = std::max(norm_linf(fd), 1e-12);
    double err = norm_linf(sub(analytic, fd)) / scale;
    result.max_rel_error = std::max(result.max_rel_error, err);
    ++result.trials;
  }
  return result;
}

}  // namespace marginbench
