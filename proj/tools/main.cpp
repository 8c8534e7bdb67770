// marginbench: train small classifiers, attack them with margin-based
// attacks, and write machine-readable robustness reports.

#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "marginbench/dataset.hpp"
#include "marginbench/errors.hpp"
#include "marginbench/evaluate.hpp"
#include "marginbench/gradcheck.hpp"
#include "marginbench/losses.hpp"
#include "marginbench/nnet.hpp"
#include "marginbench/oracle.hpp"
#include "marginbench/report.hpp"
#include "marginbench/train.hpp"

using namespace marginbench;

namespace {

int env_threads() {
  const char* v = std::getenv("MARGINBENCH_THREADS");
  if (!v) return 1;
  int t = std::atoi(v);
  return t >= 1 ? t : 1;
}

struct AttackFlags {
  std::string model;
  std::string data;
  std::string attack = "mm";
  std::string norm = "linf";
  double eps = 0.0;
  double alpha = 0.0;
  int steps = 20;
  int ks = 3;
  std::string rescaling = "natural";
  std::string rank_source = "natural";
  double rank_eps = 0.0;
  int rank_steps = 20;
  std::uint64_t seed = 0;
  double beta = 0.75;
  bool no_random_start = false;
  bool exhaustive = false;
  int threads = env_threads();
  std::string out;
  std::string format;
};

struct TrainFlags {
  std::string synth;
  std::string data;
  std::size_t classes = 3;
  std::size_t n_per_class = 100;
  double noise = 0.05;
  std::string hidden = "16,16";
  std::string adv = "none";
  int epochs = 20;
  std::size_t batch = 32;
  double lr = 0.1;
  double eps = 0.03;
  double alpha = 0.0;
  int steps = 10;
  int ks = 3;
  std::string rescaling = "natural";
  std::uint64_t seed = 0;
  std::string out;
  std::string data_out;
};

struct CompareFlags {
  std::string model;
  std::string data;
  std::string norm = "linf";
  double eps = 0.0;
  double alpha = 0.0;
  int steps = 20;
  int ks = 3;
  std::string rank_source = "natural";
  std::uint64_t seed = 0;
  int threads = env_threads();
  std::string out;
};

struct GradcheckFlags {
  std::string model;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
};

struct OracleFlags {
  std::string model;
  std::string data;
  int grid = 201;
  double eps = 0.0;
  std::size_t limit = 0;  // 0 = all examples
  std::string out;
};

template <typename T>
T parse_enum(std::optional<T> parsed, const std::string& what, const std::string& value) {
  if (!parsed) throw UsageError("unknown " + what + ": \"" + value + "\"");
  return *parsed;
}

std::vector<std::size_t> parse_hidden(const std::string& spec) {
  std::vector<std::size_t> out;
  std::string cur;
  for (char ch : spec + ",") {
    if (ch == ',') {
      if (!cur.empty()) {
        long v = std::atol(cur.c_str());
        if (v < 1) throw UsageError("bad --hidden width: \"" + cur + "\"");
        out.push_back(static_cast<std::size_t>(v));
        cur.clear();
      }
    } else if (ch != ' ') {
      cur += ch;
    }
  }
  return out;
}

AttackConfig to_config(const AttackFlags& f) {
  AttackConfig cfg;
  cfg.norm = parse_enum(norm_from_string(f.norm), "norm", f.norm);
  cfg.eps = f.eps;
  cfg.alpha0 = f.alpha;
  cfg.steps = f.steps;
  cfg.ks = f.ks;
  cfg.rescaling = parse_enum(rescaling_from_string(f.rescaling), "rescaling", f.rescaling);
  cfg.rank_source = parse_enum(rank_source_from_string(f.rank_source), "rank-source", f.rank_source);
  cfg.rank_eps = f.rank_eps;
  cfg.rank_steps = f.rank_steps;
  cfg.random_start = !f.no_random_start;
  cfg.seed = f.seed;
  cfg.beta = f.beta;
  cfg.early_stop = !f.exhaustive;
  return cfg;
}

int run_attack(const AttackFlags& f) {
  Classifier model = load_model(f.model);
  Dataset data = load_dataset(f.data);
  AttackConfig cfg = to_config(f);
  AttackMethod method = parse_enum(attack_method_from_string(f.attack), "attack", f.attack);

  EvalReport report = evaluate(model, data, cfg, method, f.threads);

  ReportFormat format = ReportFormat::json;
  if (f.format == "csv" || (f.format.empty() && f.out.size() > 4 &&
                            f.out.substr(f.out.size() - 4) == ".csv")) {
    format = ReportFormat::csv;
  } else if (!f.format.empty() && f.format != "json") {
    throw UsageError("unknown format: \"" + f.format + "\"");
  }
  emit_report(report, f.out, format);

  std::printf("attack           %s\n", report.attack.c_str());
  std::printf("examples         %zu\n", report.dataset_size);
  std::printf("clean accuracy   %.4f\n", report.clean_accuracy);
  std::printf("robust accuracy  %.4f\n", report.robust_accuracy);
  std::printf("grad evals       %ld (+%ld ranking)\n", report.total_grad_evals,
              report.total_rank_grad_evals);
  std::printf("wall time        %.3fs\n", report.wall_time_seconds);
  std::printf("report           %s\n", f.out.c_str());
  return 0;
}

int run_train(const TrainFlags& f) {
  if (f.synth.empty() == f.data.empty()) {
    throw UsageError("train needs exactly one of --synth or --data");
  }
  Dataset data;
  if (!f.synth.empty()) {
    SynthKind kind = parse_enum(synth_kind_from_string(f.synth), "synth kind", f.synth);
    data = synth_dataset(kind, f.n_per_class, f.classes, f.noise, f.seed);
  } else {
    data = load_dataset(f.data);
  }

  TrainConfig cfg;
  cfg.hidden = parse_hidden(f.hidden);
  cfg.epochs = f.epochs;
  cfg.batch_size = f.batch;
  cfg.lr = f.lr;
  cfg.adv = parse_enum(adv_mode_from_string(f.adv), "adv mode", f.adv);
  cfg.seed = f.seed;
  cfg.attack.eps = f.eps;
  cfg.attack.alpha0 = f.alpha;
  cfg.attack.steps = f.steps;
  cfg.attack.ks = f.ks;
  cfg.attack.rescaling = parse_enum(rescaling_from_string(f.rescaling), "rescaling", f.rescaling);
  cfg.attack.seed = f.seed;

  TrainResult result = adversarial_train(data, cfg);
  save_model(result.model, f.out);
  if (!f.data_out.empty()) save_dataset(data, f.data_out);

  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (margin_value(forward(result.model, data.xs[i]), data.ys[i]) >= 0.0) ++correct;
  }
  std::printf("examples        %zu\n", data.size());
  if (!result.epoch_loss.empty()) {
    std::printf("first/last loss %.4f / %.4f\n", result.epoch_loss.front(),
                result.epoch_loss.back());
  }
  std::printf("train accuracy  %.4f\n",
              data.size() ? static_cast<double>(correct) / data.size() : 1.0);
  std::printf("model           %s\n", f.out.c_str());
  return 0;
}

int run_compare(const CompareFlags& f) {
  Classifier model = load_model(f.model);
  Dataset data = load_dataset(f.data);

  AttackConfig cfg;
  cfg.norm = parse_enum(norm_from_string(f.norm), "norm", f.norm);
  cfg.eps = f.eps;
  cfg.alpha0 = f.alpha;
  cfg.steps = f.steps;
  cfg.ks = f.ks;
  cfg.rank_source = parse_enum(rank_source_from_string(f.rank_source), "rank-source", f.rank_source);
  cfg.seed = f.seed;

  RescalingComparison cmp = compare_rescalings(model, data, cfg, f.threads);
  std::printf("%-10s %8s %8s %8s\n", "method", "set", "gained", "lost");
  for (std::size_t i = 0; i < cmp.methods.size(); ++i) {
    std::printf("%-10s %8zu %8zu %8zu\n", to_string(cmp.methods[i]), cmp.sets[i].size(),
                cmp.diffs[i].b_minus_a, cmp.diffs[i].a_minus_b);
  }
  std::printf("ranking:");
  for (Rescaling m : cmp.ranking) std::printf(" %s", to_string(m));
  std::printf("\n");

  if (!f.out.empty()) {
    std::FILE* out = std::fopen(f.out.c_str(), "wb");
    if (!out) throw IoError("cannot open for writing: " + f.out);
    std::string json = comparison_to_json(cmp);
    std::fwrite(json.data(), 1, json.size(), out);
    std::fputc('\n', out);
    std::fclose(out);
  }
  return 0;
}

int run_gradcheck(const GradcheckFlags& f) {
  Classifier model = load_model(f.model);
  GradCheckResult r = gradcheck_model(model, f.trials, f.seed);
  bool ok = r.trials >= f.trials && r.max_rel_error < 1e-5;
  std::printf("trials        %zu (skipped %zu near kinks)\n", r.trials, r.skipped);
  std::printf("max rel error %.3e\n", r.max_rel_error);
  std::printf("%s\n", ok ? "PASS" : "FAIL");
  return ok ? 0 : 1;
}

int run_oracle(const OracleFlags& f) {
  Classifier model = load_model(f.model);
  Dataset data = load_dataset(f.data);
  std::size_t count = data.size();
  if (f.limit > 0 && f.limit < count) count = f.limit;

  std::string json = "[";
  std::printf("%8s %14s %14s\n", "index", "clean_margin", "oracle_margin");
  for (std::size_t i = 0; i < count; ++i) {
    GridSpec grid;
    grid.points_per_axis = f.grid;
    grid.eps = f.eps;
    grid.center = data.xs[i];
    GridResult r = grid_min_margin(model, grid, data.ys[i]);
    double clean = margin_value(forward(model, data.xs[i]), data.ys[i]);
    std::printf("%8zu %14.6f %14.6f\n", i, clean, r.margin);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s{\"index\":%zu,\"clean_margin\":%.17g,\"margin\":%.17g}",
                  i ? "," : "", i, clean, r.margin);
    json += buf;
  }
  json += "]";
  if (!f.out.empty()) {
    std::FILE* out = std::fopen(f.out.c_str(), "wb");
    if (!out) throw IoError("cannot open for writing: " + f.out);
    std::fwrite(json.data(), 1, json.size(), out);
    std::fputc('\n', out);
    std::fclose(out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"margin-based adversarial robustness benchmark"};
  app.require_subcommand(1);

  AttackFlags af;
  CLI::App* attack = app.add_subcommand("attack", "evaluate a model under an attack");
  attack->add_option("--model", af.model, "model JSON file")->required();
  attack->add_option("--data", af.data, "dataset CSV file")->required();
  attack->add_option("--attack", af.attack, "fgsm|pgd-ce|pgd-cw|mm");
  attack->add_option("--norm", af.norm, "linf|l2");
  attack->add_option("--eps", af.eps, "perturbation bound")->required();
  attack->add_option("--alpha", af.alpha, "step size (default: 2*eps mm, eps/4 pgd)");
  attack->add_option("--steps", af.steps, "attack steps per target");
  attack->add_option("--ks", af.ks, "targets to attack (mm)");
  attack->add_option("--rescaling", af.rescaling,
                     "natural|softmax|max|sum|minmax|dlr|sigmoid");
  attack->add_option("--rank-source", af.rank_source, "natural|fgsm|pgd");
  attack->add_option("--rank-eps", af.rank_eps, "eps for the ranking reference");
  attack->add_option("--rank-steps", af.rank_steps, "steps for the pgd ranking reference");
  attack->add_option("--seed", af.seed, "rng seed");
  attack->add_option("--beta", af.beta, "adaptive step-size threshold");
  attack->add_flag("--no-random-start", af.no_random_start, "start at the natural input");
  attack->add_flag("--exhaustive", af.exhaustive, "attack every target (no early stop)");
  attack->add_option("--threads", af.threads, "worker threads (env MARGINBENCH_THREADS)");
  attack->add_option("--out", af.out, "report path")->required();
  attack->add_option("--format", af.format, "json|csv (default from extension)");

  TrainFlags tf;
  CLI::App* train = app.add_subcommand("train", "train a classifier, optionally adversarially");
  train->add_option("--synth", tf.synth, "blobs|rings|moons");
  train->add_option("--data", tf.data, "dataset CSV file");
  train->add_option("--classes", tf.classes, "synthetic class count");
  train->add_option("--n-per-class", tf.n_per_class, "synthetic examples per class");
  train->add_option("--noise", tf.noise, "synthetic noise level");
  train->add_option("--hidden", tf.hidden, "hidden widths, e.g. 16,16");
  train->add_option("--adv", tf.adv, "none|pgd|mm");
  train->add_option("--epochs", tf.epochs, "training epochs");
  train->add_option("--batch", tf.batch, "minibatch size");
  train->add_option("--lr", tf.lr, "learning rate");
  train->add_option("--eps", tf.eps, "attack eps during training");
  train->add_option("--alpha", tf.alpha, "attack step size during training");
  train->add_option("--steps", tf.steps, "attack steps during training");
  train->add_option("--ks", tf.ks, "attack targets during training (mm)");
  train->add_option("--rescaling", tf.rescaling, "mm rescaling during training");
  train->add_option("--seed", tf.seed, "rng seed");
  train->add_option("--out", tf.out, "model output path")->required();
  train->add_option("--data-out", tf.data_out, "also write the training data as CSV");

  CompareFlags cf;
  CLI::App* compare = app.add_subcommand("compare-rescalings",
                                         "success-set diff of the margin rescalings");
  compare->add_option("--model", cf.model, "model JSON file")->required();
  compare->add_option("--data", cf.data, "dataset CSV file")->required();
  compare->add_option("--norm", cf.norm, "linf|l2");
  compare->add_option("--eps", cf.eps, "perturbation bound")->required();
  compare->add_option("--alpha", cf.alpha, "step size");
  compare->add_option("--steps", cf.steps, "attack steps per target");
  compare->add_option("--ks", cf.ks, "targets to attack");
  compare->add_option("--rank-source", cf.rank_source, "natural|fgsm|pgd");
  compare->add_option("--seed", cf.seed, "rng seed");
  compare->add_option("--threads", cf.threads, "worker threads");
  compare->add_option("--out", cf.out, "JSON output path");

  GradcheckFlags gf;
  CLI::App* gradcheck = app.add_subcommand("gradcheck",
                                           "finite-difference check of every loss gradient");
  gradcheck->add_option("--model", gf.model, "model JSON file")->required();
  gradcheck->add_option("--trials", gf.trials, "comparisons to run");
  gradcheck->add_option("--seed", gf.seed, "rng seed");

  OracleFlags of;
  CLI::App* oracle = app.add_subcommand("oracle",
                                        "brute-force minimum margin over a grid");
  oracle->add_option("--model", of.model, "model JSON file")->required();
  oracle->add_option("--data", of.data, "dataset CSV file")->required();
  oracle->add_option("--grid", of.grid, "points per axis (odd)");
  oracle->add_option("--eps", of.eps, "perturbation bound")->required();
  oracle->add_option("--limit", of.limit, "only the first N examples");
  oracle->add_option("--out", of.out, "JSON output path");

  try {
    app.parse(argc, argv);
    if (app.got_subcommand(attack)) return run_attack(af);
    if (app.got_subcommand(train)) return run_train(tf);
    if (app.got_subcommand(compare)) return run_compare(cf);
    if (app.got_subcommand(gradcheck)) return run_gradcheck(gf);
    if (app.got_subcommand(oracle)) return run_oracle(of);
    return 2;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
