// Command-line front end: synth, train, evaluate, tune, sweep-alpha,
// report. Machine-readable output goes to files (and the documented
// stdout formats); progress and diagnostics go to stderr. Exit codes:
// 0 success, 1 runtime/numeric failure, 2 usage or configuration error.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "survdro/survdro.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "survdro 1.0.0 (built " __DATE__ ", gcc " __VERSION__ ")";

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> split_doubles(const std::string& csv) {
  std::vector<double> out;
  for (const auto& item : split_list(csv)) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (end == item.c_str() || *end != '\0') {
      throw survdro::config_error("not a number: '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw survdro::config_error("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw survdro::parse_error("'" + path + "': " + e.what());
  }
  return j;
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw survdro::config_error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

// Dataset loading options shared by the data-consuming subcommands.
struct DataFlags {
  std::string path;
  std::string time_col = "time";
  std::string event_col = "status";
  std::string group_cols;

  void attach(CLI::App* cmd, bool required = true) {
    auto* opt = cmd->add_option("--data", path, "input dataset CSV");
    if (required) opt->required();
    cmd->add_option("--time-col", time_col, "duration column name");
    cmd->add_option("--event-col", event_col, "event indicator column name");
    cmd->add_option("--group-cols", group_cols,
                    "comma-separated group attribute columns");
  }

  survdro::Dataset load(const std::vector<std::string>& extra_groups = {}) const {
    survdro::CsvSchema schema;
    schema.time_col = time_col;
    schema.event_col = event_col;
    schema.group_cols = split_list(group_cols);
    for (const auto& g : extra_groups) {
      if (std::find(schema.group_cols.begin(), schema.group_cols.end(), g) ==
          schema.group_cols.end()) {
        schema.group_cols.push_back(g);
      }
    }
    return survdro::load_csv(path, schema);
  }
};

// ---- synth ---------------------------------------------------------------

struct SynthArgs {
  std::size_t n = 0;
  std::size_t k = 1;
  std::string pi = "1.0";
  std::size_t dim = 4;
  std::string theta;  // "a,b,..;c,d,.." one group per ';'; empty = drawn
  double censoring_rate = 0.0;
  std::uint64_t seed = 0;
  std::string out;
  std::string config_path;
};

int run_synth(const SynthArgs& args, const CLI::App* cmd) {
  json effective;
  survdro::SyntheticConfig cfg;
  cfg.num_groups = args.k;
  cfg.feature_dim = args.dim;
  cfg.mixture_weights = split_doubles(args.pi);
  if (!args.config_path.empty()) {
    const json j = load_json_file(args.config_path);
    cfg.n = j.value("n", cfg.n);
    cfg.num_groups = j.value("k", cfg.num_groups);
    cfg.feature_dim = j.value("dim", cfg.feature_dim);
    cfg.censoring_rate = j.value("censoring_rate", cfg.censoring_rate);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("pi")) cfg.mixture_weights = j["pi"].get<std::vector<double>>();
    if (j.contains("theta")) {
      for (const auto& row : j["theta"]) {
        const auto values = row.get<std::vector<double>>();
        cfg.coefficients.emplace_back(Eigen::Map<const Eigen::VectorXd>(
            values.data(), static_cast<Eigen::Index>(values.size())));
      }
    }
  }
  // Flags that were given explicitly override the config file.
  if (cmd->count("--n")) cfg.n = args.n;
  if (cmd->count("--k")) cfg.num_groups = args.k;
  if (cmd->count("--dim")) cfg.feature_dim = args.dim;
  if (cmd->count("--censoring-rate")) cfg.censoring_rate = args.censoring_rate;
  if (cmd->count("--seed")) cfg.seed = args.seed;
  if (cmd->count("--pi")) cfg.mixture_weights = split_doubles(args.pi);
  if (!args.theta.empty()) {
    cfg.coefficients.clear();
    std::stringstream ss(args.theta);
    std::string group;
    while (std::getline(ss, group, ';')) {
      const auto values = split_doubles(group);
      cfg.coefficients.emplace_back(Eigen::Map<const Eigen::VectorXd>(
          values.data(), static_cast<Eigen::Index>(values.size())));
    }
  }
  if (cfg.coefficients.empty()) {
    // Standard-normal coefficients from the documented derived stream.
    survdro::Rng rng(cfg.seed + 1);
    for (std::size_t g = 0; g < cfg.num_groups; ++g) {
      Eigen::VectorXd theta(static_cast<Eigen::Index>(cfg.feature_dim));
      for (Eigen::Index j = 0; j < theta.size(); ++j) theta[j] = rng.normal();
      cfg.coefficients.push_back(std::move(theta));
    }
  }

  const auto ds = survdro::generate_synthetic(cfg);
  survdro::save_csv(ds, args.out);

  effective["n"] = cfg.n;
  effective["k"] = cfg.num_groups;
  effective["pi"] = cfg.mixture_weights;
  effective["dim"] = cfg.feature_dim;
  effective["censoring_rate"] = cfg.censoring_rate;
  effective["seed"] = cfg.seed;
  json theta_rows = json::array();
  for (const auto& t : cfg.coefficients) {
    theta_rows.push_back(std::vector<double>(t.data(), t.data() + t.size()));
  }
  effective["theta"] = theta_rows;
  write_json_file(effective, args.out + ".config.json");
  std::cerr << "wrote " << ds.size() << " records to " << args.out << "\n";
  return 0;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  DataFlags data;
  std::string trainer = "erm";
  std::string model = "linear";
  std::size_t hidden_dim = 24;
  double alpha = 0.2;
  double lambda = 0.0;
  double lr = 0.01;
  std::size_t iters = 500;
  long long n1 = -1;  // -1 = default n/2
  std::uint64_t seed = 0;
  double gamma = 0.01;
  std::string reg_attr;
  std::string reg_attrs;
  bool standardize = false;
  bool uncensored_only = false;
  std::size_t patience = 0;
  std::string val_data;
  std::string out = ".";
  std::string config_path;
};

survdro::TrainConfig to_train_config(const TrainArgs& args) {
  survdro::TrainConfig cfg;
  cfg.trainer = survdro::trainer_kind_from_string(args.trainer);
  cfg.model = survdro::model_kind_from_string(args.model);
  cfg.hidden_dim = args.hidden_dim;
  cfg.alpha = args.alpha;
  cfg.lambda = args.lambda;
  cfg.learning_rate = args.lr;
  cfg.max_iterations = args.iters;
  if (args.n1 == 0) {
    throw survdro::config_error("--n1 must be at least 1");
  }
  cfg.n1 = args.n1 < 0 ? 0 : static_cast<std::size_t>(args.n1);
  cfg.seed = args.seed;
  cfg.gamma = args.gamma;
  cfg.reg_attribute = args.reg_attr;
  cfg.reg_attributes = split_list(args.reg_attrs);
  cfg.uncensored_only_dro = args.uncensored_only;
  cfg.patience = args.patience;
  if (survdro::is_dro_kind(cfg.trainer) &&
      !(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) {
    throw survdro::config_error("--alpha must lie in (0, 1]");
  }
  return cfg;
}

int run_train(TrainArgs& args, const CLI::App* cmd) {
  if (!args.config_path.empty()) {
    // Config file fills anything not given explicitly on the command line.
    const json j = load_json_file(args.config_path);
    if (!cmd->count("--trainer")) args.trainer = j.value("trainer", args.trainer);
    if (!cmd->count("--model")) args.model = j.value("model", args.model);
    if (!cmd->count("--alpha")) args.alpha = j.value("alpha", args.alpha);
    if (!cmd->count("--lambda")) args.lambda = j.value("lambda", args.lambda);
    if (!cmd->count("--lr")) args.lr = j.value("learning_rate", args.lr);
    if (!cmd->count("--iters")) {
      args.iters = j.value("max_iterations", args.iters);
    }
    if (!cmd->count("--seed")) args.seed = j.value("seed", args.seed);
    if (!cmd->count("--n1")) args.n1 = j.value("n1", args.n1);
  }
  auto cfg = to_train_config(args);
  std::vector<std::string> reg_groups = cfg.reg_attributes;
  if (!cfg.reg_attribute.empty()) reg_groups.push_back(cfg.reg_attribute);
  auto ds = args.data.load(reg_groups);

  std::optional<survdro::Dataset> val;
  if (!args.val_data.empty()) {
    DataFlags vf = args.data;
    vf.path = args.val_data;
    val = vf.load(reg_groups);
  }

  std::optional<survdro::Standardization> st;
  if (args.standardize) {
    std::vector<survdro::Dataset*> others;
    if (val) others.push_back(&*val);
    st = survdro::standardize_features(ds, others);
  }

  fs::create_directories(args.out);
  survdro::TrainResult result;
  try {
    result = survdro::train(ds, cfg, val ? &*val : nullptr);
  } catch (const survdro::training_aborted& e) {
    // Persist what we have for diagnosis, then fail the run.
    e.trace.to_csv(args.out + "/trace.csv");
    std::cerr << "error: " << e.what() << " (partial trace written)\n";
    return 1;
  }
  survdro::Checkpoint ckpt;
  ckpt.model = result.model;
  ckpt.standardization = st;
  ckpt.provenance = {{"trainer", args.trainer},
                     {"model", args.model},
                     {"alpha", cfg.alpha},
                     {"lambda", cfg.lambda},
                     {"learning_rate", cfg.learning_rate},
                     {"max_iterations", cfg.max_iterations},
                     {"n1", cfg.n1},
                     {"seed", cfg.seed},
                     {"standardize", args.standardize},
                     {"uncensored_only_dro", cfg.uncensored_only_dro},
                     {"data", args.data.path}};
  survdro::save_checkpoint(ckpt, args.out + "/checkpoint.json");
  result.trace.to_csv(args.out + "/trace.csv");
  write_json_file(ckpt.provenance, args.out + "/effective_config.json");

  std::cout << "final_objective="
            << survdro::format_double(result.trace.rows.back().objective)
            << "\n";
  return 0;
}

// ---- evaluate ---------------------------------------------------------------

struct EvaluateArgs {
  DataFlags data;
  std::string checkpoint;
  std::string train_data;
  std::string groups;
  std::string intersect;
  double gamma = 0.01;
  std::size_t grid_size = 100;
  std::string out;
};

int run_evaluate(const EvaluateArgs& args) {
  const auto ckpt = survdro::load_checkpoint(args.checkpoint);
  survdro::EvalSpec spec;
  spec.group_attributes = split_list(args.groups);
  spec.intersect_attributes = split_list(args.intersect);
  spec.gamma = args.gamma;
  spec.grid_size = args.grid_size;

  std::vector<std::string> needed = spec.group_attributes;
  needed.insert(needed.end(), spec.intersect_attributes.begin(),
                spec.intersect_attributes.end());
  auto ds = args.data.load(needed);
  if (ckpt.standardization) ckpt.standardization->apply(ds);

  std::optional<survdro::Dataset> train_ds;
  if (!args.train_data.empty()) {
    DataFlags tf = args.data;
    tf.path = args.train_data;
    train_ds = tf.load(needed);
    if (ckpt.standardization) ckpt.standardization->apply(*train_ds);
  }

  const auto report = survdro::evaluate_model(
      ckpt.model, ds, train_ds ? &*train_ds : nullptr, spec);
  std::cout << report.table();
  if (!args.out.empty()) {
    fs::create_directories(args.out);
    std::ofstream csv(args.out + "/metrics.csv");
    if (!csv) throw survdro::config_error("cannot write metrics.csv");
    csv << report.csv_header() << '\n' << report.csv_row() << '\n';
    if (train_ds) {
      const auto train_scores =
          survdro::risk_scores(ckpt.model, train_ds->features);
      const auto bh = survdro::breslow_baseline(train_scores, train_ds->durations,
                                                train_ds->events);
      survdro::save_baseline_csv(bh, args.out + "/baseline_hazard.csv");
    }
  }
  return 0;
}

// ---- tune -------------------------------------------------------------------

struct TuneArgs {
  std::string config_path;
  std::string out;
  std::size_t jobs = 0;       // 0 = take from config
  std::size_t repeats = 0;    // 0 = take from config
  long long master_seed = -1; // -1 = take from config
};

int run_tune(const TuneArgs& args) {
  const json j = load_json_file(args.config_path);
  DataFlags data;
  data.path = j.at("data").get<std::string>();
  data.time_col = j.value("time_col", data.time_col);
  data.event_col = j.value("event_col", data.event_col);
  if (j.contains("group_cols")) {
    std::vector<std::string> cols = j["group_cols"].get<std::vector<std::string>>();
    std::string joined;
    for (const auto& c : cols) joined += (joined.empty() ? "" : ",") + c;
    data.group_cols = joined;
  }

  survdro::ExperimentConfig cfg;
  for (const auto& name : j.value("methods", std::vector<std::string>{})) {
    const auto slash = name.find('/');
    survdro::MethodSpec method;
    method.trainer = survdro::trainer_kind_from_string(
        slash == std::string::npos ? name : name.substr(0, slash));
    method.model = slash == std::string::npos
                       ? survdro::ModelKind::linear
                       : survdro::model_kind_from_string(name.substr(slash + 1));
    cfg.methods.push_back(method);
  }
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    if (g.contains("learning_rates")) {
      cfg.grid.learning_rates = g["learning_rates"].get<std::vector<double>>();
    }
    if (g.contains("alphas")) {
      cfg.grid.alphas = g["alphas"].get<std::vector<double>>();
    }
    if (g.contains("lambdas")) {
      cfg.grid.lambdas = g["lambdas"].get<std::vector<double>>();
    }
  }
  if (j.contains("rule")) {
    cfg.rule.tolerance = j["rule"].value("tolerance", cfg.rule.tolerance);
    cfg.rule.objective = j["rule"].value("objective", cfg.rule.objective);
  }
  cfg.repeats = j.value("repeats", cfg.repeats);
  cfg.master_seed = j.value("master_seed", cfg.master_seed);
  if (j.contains("seeds")) {
    cfg.repeat_seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  }
  cfg.test_fraction = j.value("test_fraction", cfg.test_fraction);
  cfg.val_fraction = j.value("val_fraction", cfg.val_fraction);
  cfg.max_iterations = j.value("max_iterations", cfg.max_iterations);
  cfg.hidden_dim = j.value("hidden_dim", cfg.hidden_dim);
  cfg.n1 = j.value("n1", cfg.n1);
  cfg.gamma = j.value("gamma", cfg.gamma);
  cfg.eval_attribute = j.value("eval_attribute", cfg.eval_attribute);
  if (j.contains("intersect_attributes")) {
    cfg.intersect_attributes =
        j["intersect_attributes"].get<std::vector<std::string>>();
  }
  cfg.reg_attribute = j.value("reg_attribute", cfg.reg_attribute);
  cfg.uncensored_only_dro = j.value("uncensored_only_dro", false);
  cfg.jobs = j.value("jobs", cfg.jobs);

  // Flags override the config file.
  if (args.jobs != 0) cfg.jobs = args.jobs;
  if (args.repeats != 0) cfg.repeats = args.repeats;
  if (args.master_seed >= 0) {
    cfg.master_seed = static_cast<std::uint64_t>(args.master_seed);
  }

  std::vector<std::string> needed;
  if (!cfg.eval_attribute.empty()) needed.push_back(cfg.eval_attribute);
  needed.insert(needed.end(), cfg.intersect_attributes.begin(),
                cfg.intersect_attributes.end());
  if (!cfg.reg_attribute.empty()) needed.push_back(cfg.reg_attribute);
  const auto ds = data.load(needed);
  if (j.value("standardize", false)) {
    throw survdro::config_error(
        "tune: standardize inside the harness is not supported; standardize "
        "the CSV up front");
  }

  std::cerr << "tune: " << cfg.methods.size() << " methods, " << cfg.repeats
            << " repeats\n";
  const auto result = survdro::run_experiment(ds, cfg);

  fs::create_directories(args.out + "/traces");
  survdro::save_raw_results_csv(result, args.out + "/raw_results.csv");
  survdro::emit_report(result, args.out);
  survdro::save_run_traces(result, args.out + "/traces");
  json effective = j;
  effective["repeats"] = cfg.repeats;
  effective["master_seed"] = cfg.master_seed;
  effective["jobs"] = cfg.jobs;
  write_json_file(effective, args.out + "/effective_config.json");
  std::cerr << "tune: wrote report to " << args.out << "\n";
  return 0;
}

// ---- sweep-alpha ---------------------------------------------------------

struct SweepArgs {
  DataFlags data;
  std::string alphas = "0.1,0.15,0.2,0.3,0.4,0.5";
  std::string model = "linear";
  double lr = 0.01;
  std::size_t iters = 500;
  std::uint64_t seed = 0;
  std::string groups;
  std::string intersect;
  double gamma = 0.01;
  std::string out = ".";
  std::size_t jobs = 1;
};

int run_sweep(const SweepArgs& args) {
  survdro::EvalSpec spec;
  spec.group_attributes = split_list(args.groups);
  spec.intersect_attributes = split_list(args.intersect);
  spec.gamma = args.gamma;
  std::vector<std::string> needed = spec.group_attributes;
  needed.insert(needed.end(), spec.intersect_attributes.begin(),
                spec.intersect_attributes.end());
  const auto ds = args.data.load(needed);

  survdro::TrainConfig base;
  base.model = survdro::model_kind_from_string(args.model);
  base.learning_rate = args.lr;
  base.max_iterations = args.iters;
  base.seed = args.seed;

  const auto alphas = split_doubles(args.alphas);
  std::cerr << "sweep-alpha: " << alphas.size() << " values\n";
  const auto rows = survdro::sweep_alpha(ds, alphas, base, spec, 0.2, args.jobs);
  fs::create_directories(args.out);
  survdro::save_alpha_sweep_csv(rows, args.out + "/alpha_sweep.csv");
  std::cerr << "sweep-alpha: wrote " << args.out << "/alpha_sweep.csv\n";
  return 0;
}

// ---- report ----------------------------------------------------------------

struct ReportArgs {
  std::string raw;
  std::string out = ".";
};

int run_report(const ReportArgs& args) {
  const auto result = survdro::load_raw_results_csv(args.raw);
  fs::create_directories(args.out);
  survdro::emit_report(result, args.out, /*with_chosen=*/false);
  std::cerr << "report: wrote " << args.out << "/report.{csv,md}\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"survival analysis with distributionally robust Cox training"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
  synth_cmd->add_option("--n", synth.n, "number of records");
  synth_cmd->add_option("--k", synth.k, "number of latent groups");
  synth_cmd->add_option("--pi", synth.pi, "mixture weights, comma separated");
  synth_cmd->add_option("--dim", synth.dim, "feature dimension");
  synth_cmd->add_option("--theta", synth.theta,
                        "per-group coefficients 'a,b;c,d' (default: drawn)");
  synth_cmd->add_option("--censoring-rate", synth.censoring_rate,
                        "exponential censoring rate (0 = none)");
  synth_cmd->add_option("--seed", synth.seed, "generator seed");
  synth_cmd->add_option("-o,--out", synth.out, "output CSV path")->required();
  synth_cmd->add_option("--config", synth.config_path, "JSON config file");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train one model");
  train_args.data.attach(train_cmd);
  train_cmd->add_option("--trainer", train_args.trainer,
                        "erm|dro|dro_split|dro_split_one_side|reg_individual|"
                        "reg_group|reg_intersectional");
  train_cmd->add_option("--model", train_args.model, "linear|mlp");
  train_cmd->add_option("--hidden-dim", train_args.hidden_dim, "MLP width");
  train_cmd->add_option("--alpha", train_args.alpha,
                        "minimum subpopulation probability (DRO)");
  train_cmd->add_option("--lambda", train_args.lambda,
                        "fairness regularization weight");
  train_cmd->add_option("--lr", train_args.lr, "Adam learning rate");
  train_cmd->add_option("--iters", train_args.iters, "training iterations");
  train_cmd->add_option("--n1", train_args.n1, "size of D1 (split trainers)");
  train_cmd->add_option("--seed", train_args.seed, "seed");
  train_cmd->add_option("--gamma", train_args.gamma,
                        "individual-fairness scale factor");
  train_cmd->add_option("--reg-attr", train_args.reg_attr,
                        "group attribute for reg_group");
  train_cmd->add_option("--reg-attrs", train_args.reg_attrs,
                        "attributes for reg_intersectional");
  train_cmd->add_flag("--standardize", train_args.standardize,
                      "z-score features with training statistics");
  train_cmd->add_flag("--uncensored-only-dro", train_args.uncensored_only,
                      "restrict the DRO average to uncensored records");
  train_cmd->add_option("--patience", train_args.patience,
                        "early-stop patience (0 = off)");
  train_cmd->add_option("--val-data", train_args.val_data,
                        "validation CSV for early stopping");
  train_cmd->add_option("--out", train_args.out, "output directory");
  train_cmd->add_option("--config", train_args.config_path, "JSON config file");

  EvaluateArgs eval_args;
  auto* eval_cmd = app.add_subcommand("evaluate", "compute the metric suite");
  eval_args.data.attach(eval_cmd);
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "model checkpoint")
      ->required();
  eval_cmd->add_option("--train-data", eval_args.train_data,
                       "training CSV for the Breslow baseline (enables IBS)");
  eval_cmd->add_option("--groups", eval_args.groups,
                       "attributes for F_G and CI, comma separated");
  eval_cmd->add_option("--intersect", eval_args.intersect,
                       "attributes whose product defines F_cap");
  eval_cmd->add_option("--gamma", eval_args.gamma, "F_I scale factor");
  eval_cmd->add_option("--grid-size", eval_args.grid_size,
                       "time grid size for AUC/IBS");
  eval_cmd->add_option("--out", eval_args.out, "directory for metrics.csv");

  TuneArgs tune_args;
  auto* tune_cmd = app.add_subcommand("tune", "grid search + selection rule");
  tune_cmd->add_option("--config", tune_args.config_path, "experiment JSON")
      ->required();
  tune_cmd->add_option("--out", tune_args.out, "output directory")->required();
  tune_cmd->add_option("--jobs", tune_args.jobs, "parallel training jobs");
  tune_cmd->add_option("--repeats", tune_args.repeats, "override repeats");
  tune_cmd->add_option("--master-seed", tune_args.master_seed,
                       "override master seed");

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep-alpha",
                                       "train DRO across an alpha list");
  sweep_args.data.attach(sweep_cmd);
  sweep_cmd->add_option("--alphas", sweep_args.alphas, "comma-separated alphas");
  sweep_cmd->add_option("--model", sweep_args.model, "linear|mlp");
  sweep_cmd->add_option("--lr", sweep_args.lr, "learning rate");
  sweep_cmd->add_option("--iters", sweep_args.iters, "iterations");
  sweep_cmd->add_option("--seed", sweep_args.seed, "seed");
  sweep_cmd->add_option("--groups", sweep_args.groups, "attributes for F_G/CI");
  sweep_cmd->add_option("--intersect", sweep_args.intersect,
                        "attributes for F_cap");
  sweep_cmd->add_option("--gamma", sweep_args.gamma, "F_I scale factor");
  sweep_cmd->add_option("--out", sweep_args.out, "output directory");
  sweep_cmd->add_option("--jobs", sweep_args.jobs, "parallel jobs");

  ReportArgs report_args;
  auto* report_cmd =
      app.add_subcommand("report", "regenerate report files from raw results");
  report_cmd->add_option("--raw", report_args.raw, "raw_results.csv path")
      ->required();
  report_cmd->add_option("--out", report_args.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*synth_cmd) return run_synth(synth, synth_cmd);
    if (*train_cmd) return run_train(train_args, train_cmd);
    if (*eval_cmd) return run_evaluate(eval_args);
    if (*tune_cmd) return run_tune(tune_args);
    if (*sweep_cmd) return run_sweep(sweep_args);
    if (*report_cmd) return run_report(report_args);
  } catch (const survdro::config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const survdro::parse_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const survdro::shape_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
