#include <cmath>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "marginbench/dataset.hpp"
#include "marginbench/errors.hpp"
#include "marginbench/evaluate.hpp"
#include "marginbench/gradcheck.hpp"
#include "marginbench/losses.hpp"
#include "marginbench/report.hpp"
#include "marginbench/train.hpp"
#include "test_util.hpp"

using namespace marginbench;

namespace {

std::string strip_wall_time(std::string json) {
  auto pos = json.find("\"wall_time_seconds\":");
  if (pos == std::string::npos) return json;
  auto end = json.find_first_of(",}", pos);
  return json.erase(pos, end - pos);
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("synthetic datasets are deterministic and inside the box") {
  for (SynthKind kind : {SynthKind::blobs, SynthKind::rings, SynthKind::moons}) {
    std::size_t classes = kind == SynthKind::moons ? 2 : 4;
    Dataset a = synth_dataset(kind, 25, classes, 0.03, 5);
    Dataset b = synth_dataset(kind, 25, classes, 0.03, 5);
    REQUIRE(a.size() == 25 * classes);
    CHECK(a.class_count == classes);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a.xs[i] == b.xs[i]);
      CHECK(a.ys[i] == b.ys[i]);
      for (std::size_t d = 0; d < a.feature_dim; ++d) {
        CHECK(a.xs[i][d] >= 0.0);
        CHECK(a.xs[i][d] <= 1.0);
      }
    }
    Dataset c = synth_dataset(kind, 25, classes, 0.03, 6);
    CHECK(!(c.xs[0] == a.xs[0]));
  }
  CHECK_THROWS_AS(synth_dataset(SynthKind::moons, 10, 3, 0.0, 1), UsageError);
}

TEST_CASE("csv parsing handles rows, headers, and errors") {
  Dataset d = dataset_from_csv("1,0.5,0.25\n");
  REQUIRE(d.size() == 1);
  CHECK(d.ys[0] == 1);
  CHECK(d.xs[0][0] == 0.5);
  CHECK(d.xs[0][1] == 0.25);
  CHECK(d.feature_dim == 2);
  CHECK(d.class_count == 2);

  d = dataset_from_csv("label,f1,f2\n0,0.1,0.9\n1,0.2,0.8\n");
  CHECK(d.size() == 2);

  CHECK_THROWS_WITH_AS(dataset_from_csv("0,0.1,0.9\n1,1.5,0.2\n"),
                       doctest::Contains("row 2"), ParseError);
  CHECK_THROWS_AS(dataset_from_csv("0,0.1,0.9\n1,0.2\n"), ParseError);
  CHECK_THROWS_AS(dataset_from_csv("0,0.1,abc\n"), ParseError);
}

TEST_CASE("dataset csv round-trips through save and load") {
  Dataset d = synth_dataset(SynthKind::blobs, 10, 3, 0.02, 11);
  std::string path = temp_path("mb_data_roundtrip.csv");
  save_dataset(d, path);
  Dataset back = load_dataset(path);
  REQUIRE(back.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(back.xs[i] == d.xs[i]);
    CHECK(back.ys[i] == d.ys[i]);
  }
  std::filesystem::remove(path);
}

TEST_CASE("evaluate at tiny eps recovers clean accuracy") {
  Dataset data = synth_dataset(SynthKind::blobs, 30, 3, 0.04, 21);
  TrainConfig tc;
  tc.hidden = {12};
  tc.epochs = 15;
  tc.lr = 0.3;
  tc.seed = 21;
  Classifier model = adversarial_train(data, tc).model;

  AttackConfig cfg;
  cfg.eps = 1e-9;
  cfg.steps = 5;
  cfg.ks = 2;
  EvalReport rep = evaluate(model, data, cfg, AttackMethod::mm);
  CHECK(std::abs(rep.robust_accuracy - rep.clean_accuracy) * data.size() <= 1.0 + 1e-9);
  CHECK(rep.clean_accuracy > 0.8);
}

TEST_CASE("evaluate is deterministic and thread-count independent") {
  Dataset data = synth_dataset(SynthKind::blobs, 20, 4, 0.05, 31);
  TrainConfig tc;
  tc.hidden = {10};
  tc.epochs = 10;
  tc.lr = 0.3;
  tc.seed = 31;
  Classifier model = adversarial_train(data, tc).model;

  AttackConfig cfg;
  cfg.eps = 0.05;
  cfg.steps = 10;
  cfg.ks = 3;
  cfg.seed = 5;

  EvalReport seq = evaluate(model, data, cfg, AttackMethod::mm, 1);
  EvalReport par = evaluate(model, data, cfg, AttackMethod::mm, 4);
  EvalReport again = evaluate(model, data, cfg, AttackMethod::mm, 1);

  CHECK(strip_wall_time(report_to_json(seq)) == strip_wall_time(report_to_json(par)));
  CHECK(strip_wall_time(report_to_json(seq)) == strip_wall_time(report_to_json(again)));
}

TEST_CASE("report integrity: success set matches rows and robust accuracy") {
  Dataset data = synth_dataset(SynthKind::rings, 15, 3, 0.02, 41);
  TrainConfig tc;
  tc.hidden = {16};
  tc.epochs = 10;
  tc.lr = 0.25;
  tc.seed = 41;
  Classifier model = adversarial_train(data, tc).model;

  AttackConfig cfg;
  cfg.eps = 0.03;
  cfg.steps = 8;
  cfg.ks = 2;
  EvalReport rep = evaluate(model, data, cfg, AttackMethod::pgd_cw);

  std::vector<std::size_t> rebuilt;
  for (const ExampleResult& r : rep.examples) {
    if (r.success) rebuilt.push_back(r.index);
    CHECK(r.success == (r.final_margin < 0.0));
  }
  CHECK(rebuilt == rep.success_set);
  CHECK(rep.robust_accuracy ==
        doctest::Approx(1.0 - static_cast<double>(rebuilt.size()) / data.size()));
  CHECK(rep.clean_accuracy >= rep.robust_accuracy);
}

TEST_CASE("empty dataset produces a flagged identity report") {
  Classifier model = mbtest::random_mlp(51, 2, {4}, 2);
  Dataset empty;
  AttackConfig cfg;
  cfg.eps = 0.1;
  EvalReport rep = evaluate(model, empty, cfg, AttackMethod::fgsm);
  CHECK(rep.empty_dataset);
  CHECK(rep.robust_accuracy == 1.0);
  CHECK(rep.examples.empty());
}

TEST_CASE("json report round-trips all non-timing fields") {
  Dataset data = synth_dataset(SynthKind::blobs, 10, 4, 0.05, 61);
  Classifier model = mbtest::random_mlp(61, 2, {8}, 4);
  AttackConfig cfg;
  cfg.eps = 0.07;
  cfg.steps = 6;
  cfg.ks = 2;
  cfg.rescaling = Rescaling::dlr;
  cfg.rank_source = RankSource::fgsm;
  EvalReport rep = evaluate(model, data, cfg, AttackMethod::mm);

  std::string path = temp_path("mb_report_roundtrip.json");
  emit_report(rep, path, ReportFormat::json);
  EvalReport back = read_report(path);
  std::filesystem::remove(path);

  CHECK(strip_wall_time(report_to_json(rep)) == strip_wall_time(report_to_json(back)));
}

TEST_CASE("csv report has one row per example plus a header") {
  Dataset data = synth_dataset(SynthKind::blobs, 8, 2, 0.05, 71);
  Classifier model = mbtest::random_mlp(71, 2, {6}, 2);
  AttackConfig cfg;
  cfg.eps = 0.05;
  cfg.steps = 4;
  cfg.ks = 1;
  EvalReport rep = evaluate(model, data, cfg, AttackMethod::mm);
  std::string csv = report_to_csv(rep);
  std::size_t lines = 0;
  for (char ch : csv) {
    if (ch == '\n') ++lines;
  }
  CHECK(lines == data.size() + 1);
  CHECK(csv.rfind("index,success,final_margin,target_used,grad_evals,targets_tried\n", 0) == 0);
}

TEST_CASE("compare_rescalings diffs against natural are consistent") {
  Dataset data = synth_dataset(SynthKind::blobs, 15, 4, 0.06, 81);
  TrainConfig tc;
  tc.hidden = {12};
  tc.epochs = 10;
  tc.lr = 0.3;
  tc.seed = 81;
  Classifier model = adversarial_train(data, tc).model;

  AttackConfig cfg;
  cfg.eps = 0.05;
  cfg.steps = 8;
  cfg.ks = 3;
  cfg.seed = 17;
  RescalingComparison cmp = compare_rescalings(model, data, cfg);

  REQUIRE(cmp.methods.size() == kRescalingCount);
  REQUIRE(cmp.diffs.size() == kRescalingCount);
  CHECK(cmp.methods[0] == Rescaling::natural);
  CHECK(cmp.diffs[0].b_minus_a == 0);
  CHECK(cmp.diffs[0].a_minus_b == 0);

  for (const DiffSummary& d : cmp.diffs) {
    // |A u B - A| - |A u B - B| == |B| - |A|
    long lhs = static_cast<long>(d.b_minus_a) - static_cast<long>(d.a_minus_b);
    long rhs = static_cast<long>(d.size_b) - static_cast<long>(d.size_a);
    CHECK(lhs == rhs);
  }
  CHECK(cmp.ranking.size() == kRescalingCount);
}

TEST_CASE("adversarial_train with zero epochs returns the initialized model") {
  Dataset data = synth_dataset(SynthKind::blobs, 10, 2, 0.05, 91);
  TrainConfig tc;
  tc.hidden = {5};
  tc.epochs = 0;
  tc.seed = 91;
  TrainResult r = adversarial_train(data, tc);
  Classifier fresh = init_mlp(2, {5}, 2, 91);
  REQUIRE(r.model.layers().size() == fresh.layers().size());
  for (std::size_t i = 0; i < fresh.layers().size(); ++i) {
    if (fresh.layers()[i].kind != Layer::Kind::affine) continue;
    CHECK(r.model.layers()[i].weights == fresh.layers()[i].weights);
  }
  CHECK(r.epoch_loss.empty());
}

TEST_CASE("adversarial training produces finite losses and learns the data") {
  Dataset data = synth_dataset(SynthKind::blobs, 25, 3, 0.04, 92);
  TrainConfig tc;
  tc.hidden = {12};
  tc.epochs = 12;
  tc.lr = 0.25;
  tc.seed = 92;
  tc.adv = AdvMode::pgd;
  tc.attack.eps = 0.03;
  tc.attack.steps = 5;
  tc.attack.seed = 92;
  TrainResult r = adversarial_train(data, tc);
  REQUIRE(r.epoch_loss.size() == 12);
  for (double loss : r.epoch_loss) CHECK(std::isfinite(loss));
  CHECK(r.epoch_loss.back() < r.epoch_loss.front());
}

TEST_CASE("pgd-ranked target selection never degrades much below natural ranking") {
  Dataset data = synth_dataset(SynthKind::blobs, 50, 6, 0.05, 93);
  TrainConfig tc;
  tc.hidden = {16};
  tc.epochs = 15;
  tc.lr = 0.25;
  tc.seed = 93;
  Classifier model = adversarial_train(data, tc).model;

  AttackConfig cfg;
  cfg.eps = 0.045;
  cfg.steps = 10;
  cfg.ks = 3;
  cfg.seed = 23;
  EvalReport natural = evaluate(model, data, cfg, AttackMethod::mm);

  cfg.rank_source = RankSource::pgd;
  cfg.rank_steps = 10;
  EvalReport ranked = evaluate(model, data, cfg, AttackMethod::mm);

  double natural_rate = 1.0 - natural.robust_accuracy;
  double ranked_rate = 1.0 - ranked.robust_accuracy;
  CHECK(ranked_rate >= natural_rate - 0.002);
  CHECK(ranked.total_rank_grad_evals > 0);
}

TEST_CASE("stars budget: ks=3 totals undercut exhaustive ks=9 by 60%") {
  Dataset train = synth_dataset(SynthKind::blobs, 40, 10, 0.02, 95);
  TrainConfig tc;
  tc.hidden = {24, 24};
  tc.epochs = 25;
  tc.lr = 0.2;
  tc.seed = 95;
  Classifier model = adversarial_train(train, tc).model;
  Dataset test = synth_dataset(SynthKind::blobs, 40, 10, 0.02, 96);

  AttackConfig stars;
  stars.eps = 0.05;
  stars.steps = 10;
  stars.ks = 3;
  stars.seed = 19;
  EvalReport cheap = evaluate(model, test, stars, AttackMethod::mm, 2);

  AttackConfig full = stars;
  full.ks = 9;
  full.early_stop = false;
  EvalReport expensive = evaluate(model, test, full, AttackMethod::mm, 2);

  // some examples must resist, otherwise the bound is vacuous
  CHECK(cheap.success_set.size() < test.size());
  double reduction = 1.0 - static_cast<double>(cheap.total_grad_evals) /
                               static_cast<double>(expensive.total_grad_evals);
  CHECK(reduction >= 0.60);
}

TEST_CASE("gradcheck_model reports sub-1e-5 errors on a healthy model") {
  Classifier model = mbtest::random_mlp(94, 3, {10, 10}, 5);
  GradCheckResult r = gradcheck_model(model, 60, 94);
  CHECK(r.trials == 60);
  CHECK(r.max_rel_error < 1e-5);
}
