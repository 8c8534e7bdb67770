#include "marginbench/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "marginbench/errors.hpp"

namespace marginbench {

namespace {

using nlohmann::json;

json config_to_json(const AttackConfig& cfg) {
  json j;
  j["norm"] = to_string(cfg.norm);
  j["eps"] = cfg.eps;
  j["alpha0"] = cfg.alpha0;
  j["steps"] = cfg.steps;
  j["ks"] = cfg.ks;
  j["pgd_loss"] = cfg.pgd_loss == AttackLoss::ce ? "ce" : "cw";
  j["rescaling"] = to_string(cfg.rescaling);
  j["rank_source"] = to_string(cfg.rank_source);
  j["rank_eps"] = cfg.rank_eps;
  j["rank_steps"] = cfg.rank_steps;
  j["random_start"] = cfg.random_start;
  j["seed"] = cfg.seed;
  j["beta"] = cfg.beta;
  j["early_stop"] = cfg.early_stop;
  return j;
}

AttackConfig config_from_json(const json& j) {
  AttackConfig cfg;
  auto norm = norm_from_string(j.at("norm").get<std::string>());
  if (!norm) throw ParseError("report: config.norm has an unknown value");
  cfg.norm = *norm;
  cfg.eps = j.at("eps").get<double>();
  cfg.alpha0 = j.at("alpha0").get<double>();
  cfg.steps = j.at("steps").get<int>();
  cfg.ks = j.at("ks").get<int>();
  cfg.pgd_loss = j.at("pgd_loss").get<std::string>() == "cw" ? AttackLoss::cw : AttackLoss::ce;
  auto rescaling = rescaling_from_string(j.at("rescaling").get<std::string>());
  if (!rescaling) throw ParseError("report: config.rescaling has an unknown value");
  cfg.rescaling = *rescaling;
  auto source = rank_source_from_string(j.at("rank_source").get<std::string>());
  if (!source) throw ParseError("report: config.rank_source has an unknown value");
  cfg.rank_source = *source;
  cfg.rank_eps = j.at("rank_eps").get<double>();
  cfg.rank_steps = j.at("rank_steps").get<int>();
  cfg.random_start = j.at("random_start").get<bool>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.beta = j.at("beta").get<double>();
  cfg.early_stop = j.at("early_stop").get<bool>();
  return cfg;
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
  json j;
  j["attack"] = report.attack;
  j["empty_dataset"] = report.empty_dataset;
  j["dataset_size"] = report.dataset_size;
  j["clean_accuracy"] = report.clean_accuracy;
  j["robust_accuracy"] = report.robust_accuracy;
  j["clean_misclassified"] = report.clean_misclassified;
  j["total_grad_evals"] = report.total_grad_evals;
  j["total_rank_grad_evals"] = report.total_rank_grad_evals;
  j["success_set"] = report.success_set;
  j["config"] = config_to_json(report.config);
  j["wall_time_seconds"] = report.wall_time_seconds;
  json rows = json::array();
  for (const ExampleResult& r : report.examples) {
    json row;
    row["index"] = r.index;
    row["success"] = r.success;
    row["final_margin"] = r.final_margin;
    if (r.target_used) {
      row["target_used"] = *r.target_used;
    } else {
      row["target_used"] = nullptr;
    }
    row["grad_evals"] = r.grad_evals;
    row["targets_tried"] = r.targets_tried;
    row["clean_correct"] = r.clean_correct;
    rows.push_back(std::move(row));
  }
  j["examples"] = std::move(rows);
  return j.dump();
}

EvalReport report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("report: invalid JSON: ") + e.what());
  }
  EvalReport report;
  try {
    report.attack = j.at("attack").get<std::string>();
    report.empty_dataset = j.at("empty_dataset").get<bool>();
    report.dataset_size = j.at("dataset_size").get<std::size_t>();
    report.clean_accuracy = j.at("clean_accuracy").get<double>();
    report.robust_accuracy = j.at("robust_accuracy").get<double>();
    report.clean_misclassified = j.at("clean_misclassified").get<std::size_t>();
    report.total_grad_evals = j.at("total_grad_evals").get<long>();
    report.total_rank_grad_evals = j.at("total_rank_grad_evals").get<long>();
    report.success_set = j.at("success_set").get<std::vector<std::size_t>>();
    report.config = config_from_json(j.at("config"));
    report.wall_time_seconds = j.at("wall_time_seconds").get<double>();
    for (const json& row : j.at("examples")) {
      ExampleResult r;
      r.index = row.at("index").get<std::size_t>();
      r.success = row.at("success").get<bool>();
      r.final_margin = row.at("final_margin").get<double>();
      if (!row.at("target_used").is_null()) {
        r.target_used = row.at("target_used").get<std::size_t>();
      }
      r.grad_evals = row.at("grad_evals").get<long>();
      r.targets_tried = row.at("targets_tried").get<int>();
      r.clean_correct = row.at("clean_correct").get<bool>();
      report.examples.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("report: missing or mistyped field: ") + e.what());
  }
  return report;
}

std::string report_to_csv(const EvalReport& report) {
  std::string out = "index,success,final_margin,target_used,grad_evals,targets_tried\n";
  char buf[40];
  for (const ExampleResult& r : report.examples) {
    out += std::to_string(r.index);
    out += r.success ? ",1," : ",0,";
    std::snprintf(buf, sizeof(buf), "%.17g", r.final_margin);
    out += buf;
    out += ',';
    if (r.target_used) out += std::to_string(*r.target_used);
    out += ',';
    out += std::to_string(r.grad_evals);
    out += ',';
    out += std::to_string(r.targets_tried);
    out += '\n';
  }
  return out;
}

void emit_report(const EvalReport& report, const std::string& path, ReportFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << (format == ReportFormat::json ? report_to_json(report) : report_to_csv(report));
  if (format == ReportFormat::json) out << '\n';
  if (!out) throw IoError("write failed: " + path);
}

EvalReport read_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return report_from_json(ss.str());
}

}  // namespace marginbench
