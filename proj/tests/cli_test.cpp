// End-to-end checks of the command-line tool: exit codes, file outputs, and
// the train -> attack -> oracle pipeline.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <doctest.h>

#include "marginbench/dataset.hpp"
#include "marginbench/report.hpp"

using namespace marginbench;

namespace {

const std::string kCli = MARGINBENCH_CLI_PATH;

std::filesystem::path work_dir() {
  auto dir = std::filesystem::temp_directory_path() / "marginbench_cli_test";
  std::filesystem::create_directories(dir);
  return dir;
}

int run(const std::string& args) {
  std::string cmd = kCli + " " + args + " > " + (work_dir() / "stdout.txt").string() + " 2>&1";
  int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WEXITSTATUS(status);
}

std::string captured_stdout() {
  std::ifstream in(work_dir() / "stdout.txt");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return text;
}

}  // namespace

TEST_CASE("cli help and bad invocations use the documented exit codes") {
  CHECK(run("--help") == 0);
  CHECK(run("attack --help") == 0);
  CHECK(run("definitely-not-a-subcommand") == 2);
  CHECK(run("attack --model nope.json") == 2);  // missing required flags
  // validation error: unknown enum value
  CHECK(run("train --synth pyramids --out " + (work_dir() / "x.json").string()) == 2);
}

TEST_CASE("cli train/attack/oracle/gradcheck pipeline") {
  auto dir = work_dir();
  std::string model = (dir / "model.json").string();
  std::string data = (dir / "data.csv").string();
  std::string report = (dir / "report.json").string();
  std::string report_csv = (dir / "report.csv").string();

  int rc = run("train --synth blobs --classes 4 --n-per-class 30 --noise 0.04 --epochs 8"
               " --lr 0.3 --hidden 12 --seed 7 --out " + model + " --data-out " + data);
  REQUIRE(rc == 0);
  REQUIRE(std::filesystem::exists(model));
  REQUIRE(std::filesystem::exists(data));

  rc = run("attack --model " + model + " --data " + data +
           " --attack mm --eps 0.05 --steps 10 --ks 2 --seed 3 --out " + report);
  REQUIRE(rc == 0);
  EvalReport rep = read_report(report);
  CHECK(rep.attack == "mm");
  CHECK(rep.dataset_size == 120);

  rc = run("attack --model " + model + " --data " + data +
           " --attack pgd-cw --eps 0.05 --steps 10 --seed 3 --out " + report_csv);
  REQUIRE(rc == 0);
  std::ifstream csv(report_csv);
  std::string header;
  std::getline(csv, header);
  CHECK(header == "index,success,final_margin,target_used,grad_evals,targets_tried");

  rc = run("gradcheck --model " + model + " --trials 30 --seed 1");
  CHECK(rc == 0);
  CHECK(captured_stdout().find("PASS") != std::string::npos);

  // MARGINBENCH_THREADS supplies the --threads default
  {
    std::string cmd = "MARGINBENCH_THREADS=2 " + kCli + " attack --model " + model +
                      " --data " + data + " --attack mm --eps 0.05 --steps 10 --ks 2 --seed 3" +
                      " --out " + report + " > /dev/null 2>&1";
    int status = std::system(cmd.c_str());
    CHECK(WEXITSTATUS(status) == 0);
  }

  rc = run("oracle --model " + model + " --data " + data + " --grid 21 --eps 0.05 --limit 3");
  CHECK(rc == 0);

  rc = run("compare-rescalings --model " + model + " --data " + data +
           " --eps 0.05 --steps 6 --ks 2 --seed 3 --out " + (dir / "cmp.json").string());
  CHECK(rc == 0);
  CHECK(std::filesystem::exists(dir / "cmp.json"));

  // runtime error: nonexistent input file
  CHECK(run("attack --model " + (dir / "missing.json").string() + " --data " + data +
            " --eps 0.05 --out " + report) == 1);
  // runtime error: malformed data file
  std::ofstream bad(dir / "bad.csv");
  bad << "0,0.5,1.7\n";
  bad.close();
  CHECK(run("attack --model " + model + " --data " + (dir / "bad.csv").string() +
            " --eps 0.05 --out " + report) == 1);
}
