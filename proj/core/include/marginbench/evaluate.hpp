#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "marginbench/dataset.hpp"
#include "marginbench/nnet.hpp"
#include "marginbench/report.hpp"

namespace marginbench {

enum class AttackMethod { fgsm, pgd_ce, pgd_cw, mm };

const char* to_string(AttackMethod method);
std::optional<AttackMethod> attack_method_from_string(const std::string& name);

// Runs the attack on every example. Clean-misclassified examples count as
// successes at zero cost. Parallel execution (threads > 1) produces a report
// identical to the sequential one.
EvalReport evaluate(const Classifier& model, const Dataset& data, const AttackConfig& cfg,
                    AttackMethod method, int threads = 1);

struct DiffSummary {
  Rescaling method = Rescaling::natural;
  std::size_t size_a = 0;     // natural-logits success set
  std::size_t size_b = 0;     // this method's success set
  std::size_t b_minus_a = 0;  // attacked by this method only
  std::size_t a_minus_b = 0;  // attacked by natural only
};

struct RescalingComparison {
  std::vector<Rescaling> methods;                  // fixed order
  std::vector<std::vector<std::size_t>> sets;      // success sets, same order
  std::vector<DiffSummary> diffs;                  // vs natural (natural row is all zeros)
  std::vector<Rescaling> ranking;                  // by set size descending
};

// One mm-style run per rescaling method, all sharing the same rng keys.
RescalingComparison compare_rescalings(const Classifier& model, const Dataset& data,
                                       const AttackConfig& cfg, int threads = 1);

std::string comparison_to_json(const RescalingComparison& cmp);

}  // namespace marginbench
