#include "marginbench/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "marginbench/errors.hpp"
#include "marginbench/rng.hpp"

namespace marginbench {

const char* to_string(Norm norm) { return norm == Norm::linf ? "linf" : "l2"; }

const char* to_string(RankSource source) {
  switch (source) {
    case RankSource::natural: return "natural";
    case RankSource::fgsm: return "fgsm";
    case RankSource::pgd: return "pgd";
  }
  return "?";
}

std::optional<Norm> norm_from_string(const std::string& name) {
  if (name == "linf") return Norm::linf;
  if (name == "l2") return Norm::l2;
  return std::nullopt;
}

std::optional<RankSource> rank_source_from_string(const std::string& name) {
  if (name == "natural") return RankSource::natural;
  if (name == "fgsm") return RankSource::fgsm;
  if (name == "pgd") return RankSource::pgd;
  return std::nullopt;
}

namespace {

constexpr double kBoxLo = 0.0;
constexpr double kBoxHi = 1.0;
// Draw-stream lane reserved for adversarial ranking references so they never
// perturb the per-target start points.
constexpr std::uint64_t kRankLane = 0xffffffff00000001ULL;

double clamp01(double v) { return std::min(kBoxHi, std::max(kBoxLo, v)); }

void check_example(const Classifier& model, const Tensor& x, std::size_t y) {
  if (x.rank() != 1 || x.size() != model.input_dim()) {
    throw DimensionError("attack: input size does not match the model");
  }
  if (y >= model.class_count()) {
    throw IndexError("attack: true label " + std::to_string(y) + " out of range");
  }
}

double resolve_alpha(const AttackConfig& cfg, bool adaptive) {
  if (cfg.alpha0 > 0.0) return cfg.alpha0;
  return adaptive ? 2.0 * cfg.eps : cfg.eps / 4.0;
}

// One ascent step before projection: sign step for linf, normalized-gradient
// step for l2 (a zero gradient moves nothing).
Tensor ascent_step(const Tensor& x, const Tensor& g, double alpha, Norm norm) {
  Tensor out = x;
  if (norm == Norm::linf) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] += alpha * (g[i] > 0.0 ? 1.0 : (g[i] < 0.0 ? -1.0 : 0.0));
    }
  } else {
    double n = norm_l2(g);
    if (n > 0.0) axpy(out, alpha / n, g);
  }
  return out;
}

// Running minimum of margin_value over every visited iterate.
struct MarginTracker {
  double best = std::numeric_limits<double>::infinity();
  Tensor point;
  std::optional<std::size_t> target;

  void consider(double margin, const Tensor& x, std::optional<std::size_t> tgt) {
    if (margin < best) {
      best = margin;
      point = x;
      target = tgt;
    }
  }
};

struct EvalPoint {
  Tensor x;
  Tensor z;
  ForwardTrace trace;
};

EvalPoint eval_point(const Classifier& model, Tensor x) {
  EvalPoint p;
  p.x = std::move(x);
  p.z = forward(model, p.x, &p.trace);
  return p;
}

AttackOutcome finish(const MarginTracker& tracker, long grad_evals, long rank_grad_evals,
                     int targets_tried, std::vector<AlphaEvent> alpha_trace, bool ks_clamped) {
  AttackOutcome out;
  out.success = tracker.best < 0.0;
  out.x_adv = tracker.point;
  out.final_margin = tracker.best;
  out.target_used = tracker.target;
  out.grad_evals = grad_evals;
  out.rank_grad_evals = rank_grad_evals;
  out.targets_tried = targets_tried;
  out.alpha_trace = std::move(alpha_trace);
  out.ks_clamped = ks_clamped;
  return out;
}

Tensor attack_start(const Classifier& model, const Tensor& x, const AttackConfig& cfg,
                    std::uint64_t key) {
  (void)model;
  if (!cfg.random_start) return x;
  return project(x, random_start(x, cfg.eps, key), cfg.eps, cfg.norm);
}

AttackOutcome run_pgd(const Classifier& model, const Tensor& x, std::size_t y,
                      const AttackConfig& cfg, std::uint64_t key,
                      const IterateObserver& observer) {
  check_example(model, x, y);
  if (cfg.eps <= 0.0) throw UsageError("pgd: eps must be > 0");
  if (cfg.steps < 1) throw UsageError("pgd: steps must be >= 1");

  const double alpha = resolve_alpha(cfg, /*adaptive=*/false);
  auto objective = [&](const Tensor& z) {
    return cfg.pgd_loss == AttackLoss::ce ? ce_loss(z, y) : cw_loss(z, y);
  };

  MarginTracker tracker;
  EvalPoint cur = eval_point(model, attack_start(model, x, cfg, key));
  if (observer) observer(cur.x);
  tracker.consider(margin_value(cur.z, y), cur.x, std::nullopt);

  long grad_evals = 0;
  for (int k = 0; k < cfg.steps; ++k) {
    LossEval obj = objective(cur.z);
    Tensor g = input_gradient(model, cur.trace, obj.grad_z);
    ++grad_evals;
    EvalPoint next = eval_point(model, project(x, ascent_step(cur.x, g, alpha, cfg.norm),
                                               cfg.eps, cfg.norm));
    if (observer) observer(next.x);
    tracker.consider(margin_value(next.z, y), next.x, std::nullopt);
    cur = std::move(next);
  }
  return finish(tracker, grad_evals, 0, 0, {{0, alpha}}, false);
}

}  // namespace

Tensor project(const Tensor& x0, const Tensor& x, double eps, Norm norm) {
  if (!x0.same_shape(x)) throw DimensionError("project: shape mismatch");
  if (eps < 0.0) throw UsageError("project: eps must be >= 0");
  Tensor out = x;
  if (norm == Norm::linf) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = clamp01(std::min(x0[i] + eps, std::max(x0[i] - eps, out[i])));
    }
  } else {
    double dist = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      double d = out[i] - x0[i];
      dist += d * d;
    }
    dist = std::sqrt(dist);
    if (dist > eps) {
      double s = eps / dist;
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = x0[i] + s * (out[i] - x0[i]);
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = clamp01(out[i]);
  }
  return out;
}

Tensor random_start(const Tensor& x, double eps, std::uint64_t rng_key) {
  if (eps < 0.0) throw UsageError("random_start: eps must be >= 0");
  Rng rng(rng_key);
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = clamp01(out[i] + rng.uniform(-eps, eps));
  }
  return out;
}

AttackOutcome fgsm(const Classifier& model, const Tensor& x, std::size_t y,
                   const AttackConfig& cfg, std::size_t example_index,
                   const IterateObserver& observer) {
  check_example(model, x, y);
  if (cfg.eps < 0.0) throw UsageError("fgsm: eps must be >= 0");

  ForwardTrace trace;
  Tensor z = forward(model, x, &trace);
  Tensor g = input_gradient(model, trace, ce_loss(z, y).grad_z);
  (void)example_index;

  Tensor stepped = x;
  axpy(stepped, cfg.eps, sign(g));
  Tensor x_adv = project(x, stepped, cfg.eps, cfg.norm);
  if (observer) observer(x_adv);

  MarginTracker tracker;
  tracker.consider(margin_value(forward(model, x_adv), y), x_adv, std::nullopt);
  return finish(tracker, 1, 0, 0, {{0, cfg.eps}}, false);
}

AttackOutcome pgd(const Classifier& model, const Tensor& x, std::size_t y,
                  const AttackConfig& cfg, std::size_t example_index,
                  const IterateObserver& observer) {
  return run_pgd(model, x, y, cfg, stream_key(cfg.seed, example_index, 0), observer);
}

AttackOutcome mm_attack(const Classifier& model, const Tensor& x, std::size_t y,
                        const AttackConfig& cfg, std::size_t example_index,
                        const IterateObserver& observer) {
  check_example(model, x, y);
  if (cfg.eps <= 0.0) throw UsageError("mm_attack: eps must be > 0");
  if (cfg.steps < 1) throw UsageError("mm_attack: steps must be >= 1");
  if (cfg.ks < 1) throw UsageError("mm_attack: ks must be >= 1");
  if (!(cfg.beta > 0.0 && cfg.beta < 1.0)) throw UsageError("mm_attack: beta must be in (0,1)");

  const std::size_t classes = model.class_count();
  const std::size_t ks_eff = std::min<std::size_t>(cfg.ks, classes - 1);
  const bool ks_clamped = static_cast<std::size_t>(cfg.ks) > classes - 1;

  // Ranking reference point: the natural input, or an adversarial variant of it.
  long rank_grad_evals = 0;
  Tensor ref = x;
  if (cfg.rank_source != RankSource::natural) {
    AttackConfig rc = cfg;
    rc.eps = cfg.rank_eps > 0.0 ? cfg.rank_eps : cfg.eps;
    rc.rank_source = RankSource::natural;
    if (cfg.rank_source == RankSource::fgsm) {
      AttackOutcome r = fgsm(model, x, y, rc, example_index);
      ref = std::move(r.x_adv);
      rank_grad_evals = r.grad_evals;
    } else {
      rc.steps = cfg.rank_steps;
      rc.alpha0 = 0.0;
      rc.pgd_loss = AttackLoss::ce;
      AttackOutcome r = run_pgd(model, x, y, rc,
                                stream_key(cfg.seed, example_index, kRankLane), {});
      ref = std::move(r.x_adv);
      rank_grad_evals = r.grad_evals;
    }
  }

  // False classes with the highest reference logits, descending, ties by
  // lowest index. Softmax is order-preserving so logits rank like f(r(x)).
  Tensor z_ref = forward(model, ref);
  std::vector<std::size_t> order(classes);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return z_ref[a] > z_ref[b]; });
  std::vector<std::size_t> targets;
  targets.reserve(ks_eff);
  for (std::size_t c : order) {
    if (c != y && targets.size() < ks_eff) targets.push_back(c);
  }

  const std::vector<int> schedule = checkpoint_schedule(cfg.steps);
  const double alpha0 = resolve_alpha(cfg, /*adaptive=*/true);

  MarginTracker tracker;
  std::vector<AlphaEvent> alpha_trace;
  long grad_evals = 0;
  int targets_tried = 0;

  for (std::size_t rank = 0; rank < targets.size(); ++rank) {
    const std::size_t c = targets[rank];
    const std::uint64_t key = stream_key(cfg.seed, example_index, rank);

    double alpha = alpha0;
    EvalPoint cur = eval_point(model, attack_start(model, x, cfg, key));
    if (observer) observer(cur.x);
    tracker.consider(margin_value(cur.z, y), cur.x, c);

    LossEval obj = margin_loss(cur.z, y, c, cfg.rescaling);
    double v_cur = obj.value;

    EvalPoint best = cur;
    double f_max = v_cur;

    alpha_trace.push_back({grad_evals, alpha});
    // Step size and best objective in force at checkpoint w_0 = 0.
    double cp_alpha = alpha;
    double cp_fmax = f_max;
    int increases = 0;
    std::size_t next_cp = 1;

    for (int k = 0; k < cfg.steps; ++k) {
      Tensor g = input_gradient(model, cur.trace, obj.grad_z);
      ++grad_evals;
      EvalPoint next = eval_point(model, project(x, ascent_step(cur.x, g, alpha, cfg.norm),
                                                 cfg.eps, cfg.norm));
      if (observer) observer(next.x);
      tracker.consider(margin_value(next.z, y), next.x, c);

      LossEval obj_next = margin_loss(next.z, y, c, cfg.rescaling);
      double v_next = obj_next.value;
      // Condition 2 compares consecutive raw iterate objectives.
      const bool increased = v_next > v_cur;
      if (v_next > f_max) {
        best = next;
        f_max = v_next;
      }

      if (next_cp < schedule.size() && k == schedule[next_cp]) {
        const int span = schedule[next_cp] - schedule[next_cp - 1];
        // Condition 2: too few objective-increasing steps since the last
        // checkpoint (the step just taken belongs to the next window).
        const bool cond2 = increases < cfg.beta * span;
        // Condition 3: step size and best objective both unchanged since the
        // last checkpoint, compared on the values in force on arrival.
        const bool cond3 = alpha == cp_alpha && f_max == cp_fmax;
        cp_alpha = alpha;
        cp_fmax = f_max;
        increases = 0;
        ++next_cp;
        if (cond2 || cond3) {
          alpha *= 0.5;
          alpha_trace.push_back({grad_evals, alpha});
          // Restart the next step from the best iterate seen so far.
          next = best;
          obj_next = margin_loss(next.z, y, c, cfg.rescaling);
          v_next = obj_next.value;
        }
      }
      increases += increased ? 1 : 0;

      cur = std::move(next);
      obj = std::move(obj_next);
      v_cur = v_next;
    }

    ++targets_tried;
    // Sequential exit: stop once the best iterate of this target is
    // misclassified over all K classes (margin >= 0 means still robust).
    if (cfg.early_stop && margin_value(best.z, y) < 0.0) break;
  }

  return finish(tracker, grad_evals, rank_grad_evals, targets_tried, std::move(alpha_trace),
                ks_clamped);
}

std::vector<int> checkpoint_schedule(int steps) {
  if (steps < 1) throw UsageError("checkpoint_schedule: steps must be >= 1");
  std::vector<int> w{0};
  // Periods in exact hundredths: p1 = 22, shrink by 3 per checkpoint, floor 6.
  long p_prev = 0;
  long p = 22;
  while (true) {
    long raw = (p * steps + 99) / 100;  // ceil(p/100 * steps)
    int idx = static_cast<int>(std::min<long>(raw, steps - 1));
    if (idx > w.back()) w.push_back(idx);
    if (raw >= steps) break;
    long next = p + std::max(p - p_prev - 3, 6L);
    p_prev = p;
    p = next;
  }
  return w;
}

long grad_eval_budget(const AttackConfig& cfg, std::size_t class_count) {
  if (class_count < 2) throw UsageError("grad_eval_budget: needs K >= 2");
  long targets = std::min<long>(cfg.ks, static_cast<long>(class_count) - 1);
  return targets * static_cast<long>(cfg.steps);
}

}  // namespace marginbench
