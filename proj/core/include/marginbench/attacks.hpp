#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "marginbench/losses.hpp"
#include "marginbench/nnet.hpp"
#include "marginbench/tensor.hpp"

namespace marginbench {

enum class Norm { linf, l2 };
enum class AttackLoss { ce, cw };
enum class RankSource { natural, fgsm, pgd };

const char* to_string(Norm norm);
const char* to_string(RankSource source);
std::optional<Norm> norm_from_string(const std::string& name);
std::optional<RankSource> rank_source_from_string(const std::string& name);

struct AttackConfig {
  Norm norm = Norm::linf;
  double eps = 8.0 / 255.0;
  double alpha0 = 0.0;  // <= 0 picks the default: 2*eps adaptive, eps/4 fixed-step
  int steps = 20;       // N
  int ks = 3;           // targets, clamped to K-1 at run time
  AttackLoss pgd_loss = AttackLoss::ce;
  Rescaling rescaling = Rescaling::natural;
  RankSource rank_source = RankSource::natural;
  double rank_eps = 0.0;  // <= 0 picks eps
  int rank_steps = 20;
  bool random_start = true;
  std::uint64_t seed = 0;
  double beta = 0.75;
  bool early_stop = true;  // false attacks every selected target (no sequential exit)
};

struct AlphaEvent {
  long step = 0;  // inner steps completed across all targets when the event fired
  double alpha = 0.0;
};

struct AttackOutcome {
  bool success = false;
  Tensor x_adv;
  double final_margin = 0.0;
  std::optional<std::size_t> target_used;
  long grad_evals = 0;       // input-gradient count of the attack loops
  long rank_grad_evals = 0;  // extra cost of an adversarial ranking reference
  int targets_tried = 0;
  std::vector<AlphaEvent> alpha_trace;  // one entry per target start and per halving
  bool ks_clamped = false;
};

// Test hook: called on every visited iterate, random starts included.
using IterateObserver = std::function<void(const Tensor&)>;

// eps-ball projection followed by the [0,1] box clamp. For linf this clamps
// coordinates to [x0-eps, x0+eps]; for l2 it rescales the offset onto the
// sphere when it is too long. eps = 0 collapses the ball to {x0}.
Tensor project(const Tensor& x0, const Tensor& x, double eps, Norm norm);

// x + delta, delta_i ~ U[-eps, eps] drawn from the keyed counter stream,
// box-clamped. The same key always yields the same point.
Tensor random_start(const Tensor& x, double eps, std::uint64_t rng_key);

AttackOutcome fgsm(const Classifier& model, const Tensor& x, std::size_t y,
                   const AttackConfig& cfg, std::size_t example_index = 0,
                   const IterateObserver& observer = {});

// Fixed-step sign ascent on the configured loss (ce or cw); reports the
// visited iterate with the smallest margin, not the last one.
AttackOutcome pgd(const Classifier& model, const Tensor& x, std::size_t y,
                  const AttackConfig& cfg, std::size_t example_index = 0,
                  const IterateObserver& observer = {});

// Minimum-margin attack: ranks the ks most probable false classes from the
// rank_source reference point, then attacks them sequentially with adaptive
// step size, stopping at the first target whose best iterate is misclassified.
AttackOutcome mm_attack(const Classifier& model, const Tensor& x, std::size_t y,
                        const AttackConfig& cfg, std::size_t example_index = 0,
                        const IterateObserver& observer = {});

// Step indices where the adaptive controller may halve the step size.
// Fractional periods start at 0.22 and shrink by 0.03 down to a floor of
// 0.06; the arithmetic runs on an exact hundredths lattice so the schedule
// is identical on every platform. w_j = ceil(p_j * steps), capped at
// steps - 1 and deduplicated; w_0 = 0.
std::vector<int> checkpoint_schedule(int steps);

// Worst-case input-gradient evaluations per example: min(ks, K-1) * steps.
// Independent of K once ks < K.
long grad_eval_budget(const AttackConfig& cfg, std::size_t class_count);

}  // namespace marginbench
