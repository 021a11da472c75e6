#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code;
  std::string output;  // stdout only
};

fs::path work_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "survdro_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

CliResult run_cli(const std::string& args) {
  const auto out_path = work_dir() / "stdout.txt";
  const std::string command = std::string(SURVDRO_CLI_PATH) + " " + args +
                              " > " + out_path.string() + " 2> " +
                              (work_dir() / "stderr.txt").string();
  const int status = std::system(command.c_str());
  std::ifstream in(out_path);
  std::string output((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
  return {WEXITSTATUS(status), output};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("synth writes a deterministic dataset") {
  const auto csv = (work_dir() / "synth.csv").string();
  const std::string flags =
      "synth --n 100 --k 2 --pi 0.8,0.2 --dim 3 --censoring-rate 0.3 --seed 7 -o ";
  CHECK(run_cli(flags + csv).exit_code == 0);
  const auto first = slurp(csv);
  CHECK(first.find("x1,x2,x3,time,status,latent_group") == 0);
  CHECK(run_cli(flags + csv).exit_code == 0);
  CHECK(slurp(csv) == first);

  // 100 data rows plus header.
  CHECK(std::count(first.begin(), first.end(), '\n') == 101);
}

TEST_CASE("synth validates the mixture weights") {
  const auto csv = (work_dir() / "bad.csv").string();
  const auto res = run_cli("synth --n 10 --k 2 --pi 0.8,0.8 --seed 1 -o " + csv);
  CHECK(res.exit_code == 2);
}

TEST_CASE("train writes a checkpoint and a trace") {
  const auto csv = (work_dir() / "train_data.csv").string();
  REQUIRE(run_cli("synth --n 200 --k 2 --pi 0.7,0.3 --dim 3 --seed 3 -o " + csv)
              .exit_code == 0);
  const auto out = (work_dir() / "run1").string();
  const auto res = run_cli(
      "train --data " + csv +
      " --group-cols latent_group --trainer dro --alpha 0.2 --model linear "
      "--lr 0.05 --iters 40 --seed 5 --out " + out);
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("final_objective=") == 0);
  CHECK(fs::exists(out + "/checkpoint.json"));
  CHECK(fs::exists(out + "/trace.csv"));
  CHECK(fs::exists(out + "/effective_config.json"));
}

TEST_CASE("train rejects bad flags with exit code 2") {
  const auto csv = (work_dir() / "train_data.csv").string();
  CHECK(run_cli("train --data " + csv + " --trainer dro --alpha 1.5 --out " +
                (work_dir() / "x").string())
            .exit_code == 2);
  CHECK(run_cli("train --data " + csv + " --trainer dro_split --n1 0 --out " +
                (work_dir() / "x").string())
            .exit_code == 2);
  CHECK(run_cli("train --data " + (work_dir() / "nope.csv").string())
            .exit_code == 2);
}

TEST_CASE("evaluate prints a table and honours missing group flags") {
  const auto csv = (work_dir() / "train_data.csv").string();
  const auto ckpt = (work_dir() / "run1/checkpoint.json").string();
  const auto out = (work_dir() / "eval1").string();
  const std::string schema = " --group-cols latent_group ";

  const auto res = run_cli("evaluate --data " + csv + schema + "--checkpoint " +
                           ckpt + " --train-data " + csv + " --out " + out);
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("c-index") != std::string::npos);
  // No groups requested: group-based fairness columns are NA while
  // c-index/LPL are present.
  const auto metrics = slurp(out + "/metrics.csv");
  CHECK(metrics.find(",NA") != std::string::npos);
  CHECK(metrics.rfind("NA,NA", 0) == std::string::npos);  // c-index defined
  // The Breslow baseline fitted on the training data is exported too.
  CHECK(slurp(out + "/baseline_hazard.csv").rfind("time,hazard_increment", 0) ==
        0);

  const auto res2 =
      run_cli("evaluate --data " + csv + schema + "--checkpoint " + ckpt +
              " --train-data " + csv + " --groups latent_group --intersect "
              "latent_group --out " + out);
  CHECK(res2.exit_code == 0);

  // Determinism: rerun reproduces the metrics file byte for byte.
  const auto snapshot = slurp(out + "/metrics.csv");
  CHECK(run_cli("evaluate --data " + csv + schema + "--checkpoint " + ckpt +
                " --train-data " + csv + " --groups latent_group --intersect "
                "latent_group --out " + out)
            .exit_code == 0);
  CHECK(slurp(out + "/metrics.csv") == snapshot);

  CHECK(run_cli("evaluate --data " + csv + schema + "--checkpoint " + ckpt +
                " --groups not_a_column")
            .exit_code == 2);
}

TEST_CASE("tune with a one-cell grid reports that cell") {
  const auto csv = (work_dir() / "tune_data.csv").string();
  REQUIRE(run_cli("synth --n 250 --k 2 --pi 0.75,0.25 --dim 3 --seed 9 -o " + csv)
              .exit_code == 0);
  const auto config = work_dir() / "exp.json";
  {
    std::ofstream out(config);
    out << R"({
      "data": ")" << csv << R"(",
      "group_cols": ["latent_group"],
      "methods": ["dro/linear"],
      "grid": {"learning_rates": [0.05], "alphas": [0.2]},
      "repeats": 1,
      "max_iterations": 30,
      "master_seed": 4,
      "eval_attribute": "latent_group"
    })";
  }
  const auto out = (work_dir() / "tune_out").string();
  const auto res = run_cli("tune --config " + config.string() + " --out " + out);
  CHECK(res.exit_code == 0);
  CHECK(fs::exists(out + "/report.csv"));
  CHECK(fs::exists(out + "/report.md"));
  CHECK(fs::exists(out + "/raw_results.csv"));
  const auto chosen = slurp(out + "/chosen.json");
  CHECK(chosen.find("\"alpha\": 0.2") != std::string::npos);
  CHECK(chosen.find("\"learning_rate\": 0.05") != std::string::npos);
  CHECK(fs::exists(out + "/traces/trace_dro_linear_0.csv"));

  // The standalone report command reproduces the report from raw results.
  const auto rep_out = (work_dir() / "rep_out").string();
  CHECK(run_cli("report --raw " + out + "/raw_results.csv --out " + rep_out)
            .exit_code == 0);
  CHECK(slurp(rep_out + "/report.csv") == slurp(out + "/report.csv"));
}

TEST_CASE("sweep-alpha emits one row per alpha, ascending") {
  const auto csv = (work_dir() / "tune_data.csv").string();
  const auto out = (work_dir() / "sweep_out").string();
  const auto res = run_cli("sweep-alpha --data " + csv +
                           " --group-cols latent_group --alphas 0.3,0.1 "
                           "--iters 25 --lr 0.05 --groups latent_group --out " +
                           out);
  CHECK(res.exit_code == 0);
  const auto body = slurp(out + "/alpha_sweep.csv");
  std::stringstream ss(body);
  std::string line;
  std::getline(ss, line);
  CHECK(line.rfind("alpha,", 0) == 0);
  std::getline(ss, line);
  CHECK(std::strtod(line.c_str(), nullptr) == 0.1);
  std::getline(ss, line);
  CHECK(std::strtod(line.c_str(), nullptr) == 0.3);

  // The default alpha grid yields six rows plus the header.
  const auto out6 = (work_dir() / "sweep_out6").string();
  REQUIRE(run_cli("sweep-alpha --data " + csv +
                  " --group-cols latent_group --iters 5 --lr 0.05 "
                  "--groups latent_group --out " + out6)
              .exit_code == 0);
  const auto grid_body = slurp(out6 + "/alpha_sweep.csv");
  CHECK(std::count(grid_body.begin(), grid_body.end(), '\n') == 7);
}

TEST_CASE("report on a missing file exits with code 2") {
  CHECK(run_cli("report --raw " + (work_dir() / "missing.csv").string())
            .exit_code == 2);
}
