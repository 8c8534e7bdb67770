#include "marginbench/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <thread>

#include <json.hpp>

#include "marginbench/errors.hpp"
#include "marginbench/losses.hpp"

namespace marginbench {

const char* to_string(AttackMethod method) {
  switch (method) {
    case AttackMethod::fgsm: return "fgsm";
    case AttackMethod::pgd_ce: return "pgd-ce";
    case AttackMethod::pgd_cw: return "pgd-cw";
    case AttackMethod::mm: return "mm";
  }
  return "?";
}

std::optional<AttackMethod> attack_method_from_string(const std::string& name) {
  if (name == "fgsm") return AttackMethod::fgsm;
  if (name == "pgd-ce") return AttackMethod::pgd_ce;
  if (name == "pgd-cw") return AttackMethod::pgd_cw;
  if (name == "mm") return AttackMethod::mm;
  return std::nullopt;
}

namespace {

AttackOutcome run_attack(const Classifier& model, const Tensor& x, std::size_t y,
                         const AttackConfig& cfg, AttackMethod method, std::size_t index) {
  switch (method) {
    case AttackMethod::fgsm:
      return fgsm(model, x, y, cfg, index);
    case AttackMethod::pgd_ce: {
      AttackConfig c = cfg;
      c.pgd_loss = AttackLoss::ce;
      return pgd(model, x, y, c, index);
    }
    case AttackMethod::pgd_cw: {
      AttackConfig c = cfg;
      c.pgd_loss = AttackLoss::cw;
      return pgd(model, x, y, c, index);
    }
    case AttackMethod::mm:
      return mm_attack(model, x, y, cfg, index);
  }
  throw UsageError("evaluate: unknown attack method");
}

}  // namespace

EvalReport evaluate(const Classifier& model, const Dataset& data, const AttackConfig& cfg,
                    AttackMethod method, int threads) {
  EvalReport report;
  report.attack = to_string(method);
  report.config = cfg;
  report.dataset_size = data.size();
  if (data.size() == 0) {
    report.empty_dataset = true;
    return report;
  }
  if (data.feature_dim != model.input_dim()) {
    throw DimensionError("evaluate: dataset feature_dim does not match the model");
  }
  if (data.class_count > model.class_count()) {
    throw DimensionError("evaluate: dataset labels exceed the model's class count");
  }

  const std::size_t n = data.size();
  report.examples.resize(n);
  std::vector<long> rank_evals(n, 0);

  auto started = std::chrono::steady_clock::now();

  auto work = [&](std::size_t i) {
    const Tensor& x = data.xs[i];
    const std::size_t y = data.ys[i];
    ExampleResult row;
    row.index = i;
    double clean_margin = margin_value(forward(model, x), y);
    if (clean_margin < 0.0) {
      // Already misclassified: a free success for the attacker.
      row.success = true;
      row.final_margin = clean_margin;
      row.clean_correct = false;
    } else {
      AttackOutcome out = run_attack(model, x, y, cfg, method, i);
      row.success = out.success;
      row.final_margin = out.final_margin;
      row.target_used = out.target_used;
      row.grad_evals = out.grad_evals;
      row.targets_tried = out.targets_tried;
      rank_evals[i] = out.rank_grad_evals;
    }
    report.examples[i] = std::move(row);
  };

  int workers = std::max(1, threads);
  if (workers == 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    int count = static_cast<int>(std::min<std::size_t>(workers, n));
    pool.reserve(count);
    for (int t = 0; t < count; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) work(i);
      });
    }
    for (std::thread& t : pool) t.join();
  }

  std::size_t clean_ok = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const ExampleResult& r = report.examples[i];
    if (r.clean_correct) ++clean_ok;
    if (r.success) report.success_set.push_back(i);
    report.total_grad_evals += r.grad_evals;
    report.total_rank_grad_evals += rank_evals[i];
  }
  report.clean_misclassified = n - clean_ok;
  report.clean_accuracy = static_cast<double>(clean_ok) / static_cast<double>(n);
  report.robust_accuracy =
      1.0 - static_cast<double>(report.success_set.size()) / static_cast<double>(n);
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

RescalingComparison compare_rescalings(const Classifier& model, const Dataset& data,
                                       const AttackConfig& cfg, int threads) {
  if (model.class_count() < 4) {
    throw UsageError("compare_rescalings: the dlr rescaling needs a model with K >= 4");
  }
  RescalingComparison cmp;
  for (Rescaling m : kAllRescalings) {
    AttackConfig c = cfg;
    c.rescaling = m;
    EvalReport rep = evaluate(model, data, c, AttackMethod::mm, threads);
    cmp.methods.push_back(m);
    cmp.sets.push_back(std::move(rep.success_set));
  }

  const std::vector<std::size_t>& natural = cmp.sets.front();
  for (std::size_t i = 0; i < cmp.methods.size(); ++i) {
    const std::vector<std::size_t>& set = cmp.sets[i];
    DiffSummary d;
    d.method = cmp.methods[i];
    d.size_a = natural.size();
    d.size_b = set.size();
    std::vector<std::size_t> only_b, only_a;
    std::set_difference(set.begin(), set.end(), natural.begin(), natural.end(),
                        std::back_inserter(only_b));
    std::set_difference(natural.begin(), natural.end(), set.begin(), set.end(),
                        std::back_inserter(only_a));
    d.b_minus_a = only_b.size();
    d.a_minus_b = only_a.size();
    cmp.diffs.push_back(d);
  }

  cmp.ranking.assign(cmp.methods.begin(), cmp.methods.end());
  std::stable_sort(cmp.ranking.begin(), cmp.ranking.end(), [&](Rescaling a, Rescaling b) {
    auto size_of = [&](Rescaling m) {
      for (std::size_t i = 0; i < cmp.methods.size(); ++i) {
        if (cmp.methods[i] == m) return cmp.sets[i].size();
      }
      return std::size_t{0};
    };
    return size_of(a) > size_of(b);
  });
  return cmp;
}

std::string comparison_to_json(const RescalingComparison& cmp) {
  nlohmann::json j;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < cmp.methods.size(); ++i) {
    nlohmann::json row;
    row["method"] = to_string(cmp.methods[i]);
    row["set_size"] = cmp.sets[i].size();
    row["success_set"] = cmp.sets[i];
    row["gained_vs_natural"] = cmp.diffs[i].b_minus_a;
    row["lost_vs_natural"] = cmp.diffs[i].a_minus_b;
    rows.push_back(std::move(row));
  }
  j["methods"] = std::move(rows);
  nlohmann::json ranking = nlohmann::json::array();
  for (Rescaling m : cmp.ranking) ranking.push_back(to_string(m));
  j["ranking"] = std::move(ranking);
  return j.dump();
}

}  // namespace marginbench
