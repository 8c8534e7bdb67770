#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "marginbench/attacks.hpp"

namespace marginbench {

struct ExampleResult {
  std::size_t index = 0;
  bool success = false;
  double final_margin = 0.0;
  std::optional<std::size_t> target_used;
  long grad_evals = 0;
  int targets_tried = 0;
  bool clean_correct = true;
};

struct EvalReport {
  std::string attack;  // fgsm | pgd-ce | pgd-cw | mm
  bool empty_dataset = false;
  std::size_t dataset_size = 0;
  double clean_accuracy = 1.0;
  double robust_accuracy = 1.0;
  std::size_t clean_misclassified = 0;
  long total_grad_evals = 0;
  long total_rank_grad_evals = 0;
  std::vector<std::size_t> success_set;  // sorted example indices
  AttackConfig config;
  double wall_time_seconds = 0.0;  // reported, never asserted
  std::vector<ExampleResult> examples;
};

enum class ReportFormat { json, csv };

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

// One row per example: index,success,final_margin,target_used,grad_evals,targets_tried
std::string report_to_csv(const EvalReport& report);

void emit_report(const EvalReport& report, const std::string& path, ReportFormat format);
EvalReport read_report(const std::string& path);  // JSON only

}  // namespace marginbench
