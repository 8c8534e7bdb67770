#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "marginbench/tensor.hpp"

namespace marginbench {

// Margin rescalings. Every loss here is oriented so that larger means more
// adversarial; "natural" is the plain margin loss -(z_y - z_t).
enum class Rescaling { natural, softmax, max, sum, minmax, dlr, sigmoid };

constexpr std::size_t kRescalingCount = 7;
extern const Rescaling kAllRescalings[kRescalingCount];

const char* to_string(Rescaling method);
std::optional<Rescaling> rescaling_from_string(const std::string& name);

struct LossEval {
  double value = 0.0;
  Tensor grad_z;
};

// -z_y + logsumexp(z), computed with a max shift; grad = softmax(z) - onehot(y).
LossEval ce_loss(const Tensor& z, std::size_t y);

// -z_y + max_{i != y} z_i; ties among the non-y maxima break to the lowest index.
LossEval cw_loss(const Tensor& z, std::size_t y);

// Untargeted ratio variant: -(z_y - max_{i != y} z_i) / (z_pi1 - z_pi3).
// Needs K >= 3.
LossEval dlr_loss(const Tensor& z, std::size_t y);

// Targeted margin loss under the chosen rescaling. Needs t != y; the dlr
// method needs K >= 4. Degenerate denominators |d| < 1e-12 are clamped to
// sign * 1e-12.
LossEval margin_loss(const Tensor& z, std::size_t y, std::size_t t, Rescaling method);

// z_y - max_{i != y} z_i; negative iff the point is misclassified (an argmax
// tie with y counts as not misclassified).
double margin_value(const Tensor& z, std::size_t y);

}  // namespace marginbench
