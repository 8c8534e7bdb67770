#include "marginbench/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "marginbench/errors.hpp"

namespace marginbench {

const Rescaling kAllRescalings[kRescalingCount] = {
    Rescaling::natural, Rescaling::softmax, Rescaling::max,    Rescaling::sum,
    Rescaling::minmax,  Rescaling::dlr,     Rescaling::sigmoid};

const char* to_string(Rescaling method) {
  switch (method) {
    case Rescaling::natural: return "natural";
    case Rescaling::softmax: return "softmax";
    case Rescaling::max: return "max";
    case Rescaling::sum: return "sum";
    case Rescaling::minmax: return "minmax";
    case Rescaling::dlr: return "dlr";
    case Rescaling::sigmoid: return "sigmoid";
  }
  return "?";
}

std::optional<Rescaling> rescaling_from_string(const std::string& name) {
  for (Rescaling m : kAllRescalings) {
    if (name == to_string(m)) return m;
  }
  return std::nullopt;
}

namespace {

constexpr double kDenomFloor = 1e-12;

void check_class(const Tensor& z, std::size_t y, const char* who) {
  if (z.rank() != 1 || z.size() < 2) {
    throw DimensionError(std::string(who) + ": needs a rank-1 logits tensor with K >= 2");
  }
  if (y >= z.size()) {
    throw IndexError(std::string(who) + ": class index " + std::to_string(y) +
                     " out of range for K = " + std::to_string(z.size()));
  }
}

std::size_t argmax_excluding(const Tensor& z, std::size_t y) {
  std::size_t best = y == 0 ? 1 : 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (i == y) continue;
    if (z[i] > z[best]) best = i;
  }
  return best;
}

// Indices of z sorted by value descending; ties keep the lowest original index.
std::vector<std::size_t> desc_order(const Tensor& z) {
  std::vector<std::size_t> idx(z.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return z[a] > z[b]; });
  return idx;
}

double clamp_denominator(double d, bool* clamped) {
  if (std::abs(d) < kDenomFloor) {
    *clamped = true;
    return d >= 0.0 ? kDenomFloor : -kDenomFloor;
  }
  *clamped = false;
  return d;
}

double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  double e = std::exp(u);
  return e / (1.0 + e);
}

}  // namespace

LossEval ce_loss(const Tensor& z, std::size_t y) {
  check_class(z, y, "ce_loss");
  double zmax = z[0];
  for (std::size_t i = 1; i < z.size(); ++i) zmax = std::max(zmax, z[i]);
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) sum += std::exp(z[i] - zmax);
  LossEval out;
  out.value = -(z[y] - zmax) + std::log(sum);
  out.grad_z = Tensor::zeros({z.size()});
  for (std::size_t i = 0; i < z.size(); ++i) out.grad_z[i] = std::exp(z[i] - zmax) / sum;
  out.grad_z[y] -= 1.0;
  return out;
}

LossEval cw_loss(const Tensor& z, std::size_t y) {
  check_class(z, y, "cw_loss");
  std::size_t m = argmax_excluding(z, y);
  LossEval out;
  out.value = -z[y] + z[m];
  out.grad_z = Tensor::zeros({z.size()});
  out.grad_z[m] += 1.0;
  out.grad_z[y] -= 1.0;
  return out;
}

LossEval dlr_loss(const Tensor& z, std::size_t y) {
  check_class(z, y, "dlr_loss");
  if (z.size() < 3) throw DimensionError("dlr_loss: needs K >= 3");
  std::size_t m = argmax_excluding(z, y);
  std::vector<std::size_t> pi = desc_order(z);
  double num = z[y] - z[m];
  bool clamped = false;
  double den = clamp_denominator(z[pi[0]] - z[pi[2]], &clamped);
  LossEval out;
  out.value = -num / den;
  out.grad_z = Tensor::zeros({z.size()});
  out.grad_z[y] += -1.0 / den;
  out.grad_z[m] += 1.0 / den;
  if (!clamped) {
    double s = num / (den * den);
    out.grad_z[pi[0]] += s;
    out.grad_z[pi[2]] -= s;
  }
  return out;
}

LossEval margin_loss(const Tensor& z, std::size_t y, std::size_t t, Rescaling method) {
  check_class(z, y, "margin_loss");
  if (t >= z.size()) {
    throw IndexError("margin_loss: target " + std::to_string(t) + " out of range");
  }
  if (t == y) throw UsageError("margin_loss: target must differ from the true class");

  std::size_t k = z.size();
  double num = z[y] - z[t];
  LossEval out;
  out.grad_z = Tensor::zeros({k});

  switch (method) {
    case Rescaling::natural: {
      out.value = -num;
      out.grad_z[y] = -1.0;
      out.grad_z[t] = 1.0;
      return out;
    }
    case Rescaling::softmax: {
      Tensor p = softmax(z);
      out.value = -(p[y] - p[t]);
      for (std::size_t i = 0; i < k; ++i) out.grad_z[i] = (p[y] - p[t]) * p[i];
      out.grad_z[y] -= p[y];
      out.grad_z[t] += p[t];
      return out;
    }
    case Rescaling::max: {
      bool clamped = false;
      double den = clamp_denominator(z[y], &clamped);
      out.value = -num / den;
      out.grad_z[y] += -1.0 / den;
      out.grad_z[t] += 1.0 / den;
      if (!clamped) out.grad_z[y] += num / (den * den);
      return out;
    }
    case Rescaling::sum: {
      bool clamped = false;
      double den = clamp_denominator(z[y] + z[t], &clamped);
      out.value = -num / den;
      out.grad_z[y] += -1.0 / den;
      out.grad_z[t] += 1.0 / den;
      if (!clamped) {
        double s = num / (den * den);
        out.grad_z[y] += s;
        out.grad_z[t] += s;
      }
      return out;
    }
    case Rescaling::minmax: {
      std::vector<std::size_t> pi = desc_order(z);
      bool clamped = false;
      double den = clamp_denominator(z[pi[0]] - z[pi[k - 1]], &clamped);
      out.value = -num / den;
      out.grad_z[y] += -1.0 / den;
      out.grad_z[t] += 1.0 / den;
      if (!clamped) {
        double s = num / (den * den);
        out.grad_z[pi[0]] += s;
        out.grad_z[pi[k - 1]] -= s;
      }
      return out;
    }
    case Rescaling::dlr: {
      if (k < 4) throw DimensionError("margin_loss(dlr): needs K >= 4");
      std::vector<std::size_t> pi = desc_order(z);
      bool clamped = false;
      double den = clamp_denominator(z[pi[0]] - 0.5 * (z[pi[2]] + z[pi[3]]), &clamped);
      out.value = -num / den;
      out.grad_z[y] += -1.0 / den;
      out.grad_z[t] += 1.0 / den;
      if (!clamped) {
        double s = num / (den * den);
        out.grad_z[pi[0]] += s;
        out.grad_z[pi[2]] -= 0.5 * s;
        out.grad_z[pi[3]] -= 0.5 * s;
      }
      return out;
    }
    case Rescaling::sigmoid: {
      double sy = sigmoid(z[y]);
      double st = sigmoid(z[t]);
      out.value = -(sy - st);
      out.grad_z[y] = -sy * (1.0 - sy);
      out.grad_z[t] = st * (1.0 - st);
      return out;
    }
  }
  throw UsageError("margin_loss: unknown rescaling");
}

double margin_value(const Tensor& z, std::size_t y) {
  check_class(z, y, "margin_value");
  return z[y] - z[argmax_excluding(z, y)];
}

}  // namespace marginbench
