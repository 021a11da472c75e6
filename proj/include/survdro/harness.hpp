#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "survdro/csv.hpp"
#include "survdro/dataset.hpp"
#include "survdro/errors.hpp"
#include "survdro/report.hpp"
#include "survdro/train.hpp"

namespace survdro {

// Hyperparameter axes. Each trainer kind expands only the axes it uses:
// learning rate always, alpha for the DRO kinds, lambda for the
// regularized kinds. Expansion order (and therefore selection
// tie-breaking) is learning rate outermost, then the second axis.
struct GridSpec {
  std::vector<double> learning_rates{0.01, 0.001, 0.0001};
  std::vector<double> lambdas{1.0, 0.7, 0.4};
  std::vector<double> alphas{0.1, 0.15, 0.2, 0.3, 0.4, 0.5};
};

// Model selection: among candidates whose validation c-index stays within
// `tolerance` (fractionally) of the unregularized reference, pick the one
// minimizing the objective metric; when nothing qualifies, fall back to
// the highest validation c-index and flag it. Ties keep grid order.
struct SelectionRule {
  double tolerance = 0.05;
  std::string objective = "ci_percent";  // "ci_percent" or "f_a"
};

struct Candidate {
  TrainConfig config;
  double val_c_index = 0.0;
  double val_objective = 0.0;
};

struct Selection {
  std::size_t index = 0;
  bool fallback = false;
};

inline Selection select_candidate(const std::vector<Candidate>& candidates,
                                  double reference_c_index,
                                  const SelectionRule& rule) {
  if (candidates.empty()) {
    throw config_error("select_candidate: no candidates");
  }
  const double floor_c = (1.0 - rule.tolerance) * reference_c_index;
  Selection sel;
  bool found = false;
  double best_obj = 0.0;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (candidates[k].val_c_index >= floor_c) {
      if (!found || candidates[k].val_objective < best_obj) {
        found = true;
        best_obj = candidates[k].val_objective;
        sel.index = k;
      }
    }
  }
  if (found) return sel;
  sel.fallback = true;
  double best_c = candidates[0].val_c_index;
  sel.index = 0;
  for (std::size_t k = 1; k < candidates.size(); ++k) {
    if (candidates[k].val_c_index > best_c) {
      best_c = candidates[k].val_c_index;
      sel.index = k;
    }
  }
  return sel;
}

struct MethodSpec {
  TrainerKind trainer = TrainerKind::erm;
  ModelKind model = ModelKind::linear;

  std::string name() const {
    return to_string(trainer) + "/" + to_string(model);
  }
};

struct ExperimentConfig {
  std::vector<MethodSpec> methods;
  GridSpec grid;
  SelectionRule rule;
  std::size_t repeats = 10;
  std::uint64_t master_seed = 0;            // fixes the test split
  std::vector<std::uint64_t> repeat_seeds;  // default master_seed + 1..repeats
  double test_fraction = 0.2;
  double val_fraction = 0.2;
  std::size_t max_iterations = 500;
  std::size_t hidden_dim = 24;
  std::size_t n1 = 0;
  double gamma = 0.01;
  std::string eval_attribute;                     // headline F_G / CI groups
  std::vector<std::string> intersect_attributes;  // F_cap; empty = eval attr
  std::string reg_attribute;  // reg_group penalty groups; empty = eval attr
  bool uncensored_only_dro = false;
  std::size_t jobs = 1;

  std::vector<std::uint64_t> seeds() const {
    if (!repeat_seeds.empty()) {
      if (repeat_seeds.size() != repeats) {
        throw config_error("experiment: seed list length must equal repeats");
      }
      return repeat_seeds;
    }
    std::vector<std::uint64_t> out(repeats);
    for (std::size_t r = 0; r < repeats; ++r) out[r] = master_seed + 1 + r;
    return out;
  }
};

struct RepeatOutcome {
  MetricsReport report;
  TrainConfig chosen;
  TrainTrace trace;  // trace of the chosen training run
  bool fallback = false;
};

struct MethodResult {
  MethodSpec method;
  std::string display_name;  // method.name() unless loaded from disk
  std::vector<RepeatOutcome> repeats;
};

struct ExperimentResult {
  std::vector<MethodResult> methods;
  std::vector<std::string> metric_columns = MetricsReport::metric_names();

  struct Stat {
    std::optional<double> mean;
    std::optional<double> std_dev;  // population, across repeats
    std::size_t count = 0;
  };

  Stat stat(std::size_t method_index, const std::string& metric) const {
    Stat s;
    const auto& outcomes = methods[method_index].repeats;
    double sum = 0.0;
    for (const auto& o : outcomes) {
      if (auto v = o.report.metric(metric)) {
        sum += *v;
        ++s.count;
      }
    }
    if (s.count == 0) return s;
    const double mean = sum / static_cast<double>(s.count);
    double sq = 0.0;
    for (const auto& o : outcomes) {
      if (auto v = o.report.metric(metric)) sq += (*v - mean) * (*v - mean);
    }
    s.mean = mean;
    s.std_dev = std::sqrt(sq / static_cast<double>(s.count));
    return s;
  }
};

namespace detail {

inline void parallel_for(std::size_t jobs, std::size_t count,
                         const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  const std::size_t num_threads = std::min(jobs, count);
  workers.reserve(num_threads);
  for (std::size_t t = 0; t < num_threads; ++t) {
    workers.emplace_back([&] {
      for (;;) {
        const std::size_t k = next.fetch_add(1);
        if (k >= count || failed.load()) return;
        try {
          fn(k);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline std::vector<TrainConfig> expand_grid(const MethodSpec& method,
                                            const ExperimentConfig& cfg) {
  std::vector<TrainConfig> out;
  TrainConfig base;
  base.trainer = method.trainer;
  base.model = method.model;
  base.hidden_dim = cfg.hidden_dim;
  base.max_iterations = cfg.max_iterations;
  base.n1 = cfg.n1;
  base.gamma = cfg.gamma;
  base.uncensored_only_dro = cfg.uncensored_only_dro;
  if (method.trainer == TrainerKind::reg_group) {
    base.reg_attribute =
        cfg.reg_attribute.empty() ? cfg.eval_attribute : cfg.reg_attribute;
  }
  for (double lr : cfg.grid.learning_rates) {
    base.learning_rate = lr;
    if (is_dro_kind(method.trainer)) {
      for (double alpha : cfg.grid.alphas) {
        base.alpha = alpha;
        out.push_back(base);
      }
    } else if (is_reg_kind(method.trainer)) {
      for (double lambda : cfg.grid.lambdas) {
        base.lambda = lambda;
        out.push_back(base);
      }
    } else {
      out.push_back(base);
    }
  }
  return out;
}

inline double validation_objective(const MetricsReport& report,
                                   const SelectionRule& rule) {
  const auto v = report.metric(rule.objective);
  return v ? *v : std::numeric_limits<double>::infinity();
}

}  // namespace detail

// The evaluation protocol: one fixed test split; per repeat a fresh
// validation split of the remaining data, the full grid trained, the
// selection rule applied against the unregularized reference of the same
// model family, and the chosen model scored on the common test set.
inline ExperimentResult run_experiment(const Dataset& ds,
                                       const ExperimentConfig& cfg) {
  if (cfg.methods.empty()) throw config_error("experiment: no methods given");
  if (cfg.repeats == 0) throw config_error("experiment: repeats must be positive");
  const auto seeds = cfg.seeds();

  auto outer = split_dataset_two(ds, 1.0 - cfg.test_fraction, cfg.master_seed);
  const Dataset& trainval = outer.first;
  const Dataset& test = outer.second;

  EvalSpec eval_spec;
  if (!cfg.eval_attribute.empty()) {
    eval_spec.group_attributes.push_back(cfg.eval_attribute);
  }
  eval_spec.intersect_attributes = cfg.intersect_attributes;
  eval_spec.gamma = cfg.gamma;

  ExperimentResult result;
  result.methods.resize(cfg.methods.size());
  for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
    result.methods[m].method = cfg.methods[m];
    result.methods[m].display_name = cfg.methods[m].name();
    result.methods[m].repeats.resize(cfg.repeats);
  }

  std::vector<ModelKind> model_kinds;
  for (const auto& method : cfg.methods) {
    if (std::find(model_kinds.begin(), model_kinds.end(), method.model) ==
        model_kinds.end()) {
      model_kinds.push_back(method.model);
    }
  }

  constexpr std::size_t npos = static_cast<std::size_t>(-1);
  struct Cell {
    std::size_t method_index = npos;  // npos marks reference-only cells
    TrainConfig config;
    std::optional<TrainResult> trained;
    double val_c = 0.0;
    MetricsReport val_report;
  };
  struct Repeat {
    Dataset train_ds;
    Dataset val_ds;
    std::vector<Cell> cells;
    std::vector<std::pair<std::size_t, std::size_t>> method_cell_span;
  };

  std::vector<Repeat> repeats(cfg.repeats);
  std::vector<std::pair<std::size_t, std::size_t>> work;  // (repeat, cell)
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    Repeat& rep = repeats[r];
    auto inner = split_dataset_two(trainval, 1.0 - cfg.val_fraction, seeds[r]);
    rep.train_ds = std::move(inner.first);
    rep.val_ds = std::move(inner.second);

    // Unregularized reference runs for model families without a listed
    // ERM method.
    for (ModelKind mk : model_kinds) {
      const bool listed = std::any_of(
          cfg.methods.begin(), cfg.methods.end(), [&](const MethodSpec& ms) {
            return ms.trainer == TrainerKind::erm && ms.model == mk;
          });
      if (listed) continue;
      for (auto base : detail::expand_grid({TrainerKind::erm, mk}, cfg)) {
        base.seed = seeds[r];
        Cell cell;
        cell.config = base;
        rep.cells.push_back(std::move(cell));
      }
    }
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
      const std::size_t begin = rep.cells.size();
      for (auto base : detail::expand_grid(cfg.methods[m], cfg)) {
        base.seed = seeds[r];
        Cell cell;
        cell.method_index = m;
        cell.config = base;
        rep.cells.push_back(std::move(cell));
      }
      rep.method_cell_span.emplace_back(begin, rep.cells.size());
    }
    for (std::size_t k = 0; k < rep.cells.size(); ++k) work.emplace_back(r, k);
  }

  // All (repeat, candidate) cells are independent; train them in one
  // parallel pass and reduce in repeat-index order afterwards.
  detail::parallel_for(cfg.jobs, work.size(), [&](std::size_t w) {
    Repeat& rep = repeats[work[w].first];
    Cell& cell = rep.cells[work[w].second];
    cell.trained = train(rep.train_ds, cell.config);
    const Eigen::VectorXd val_scores =
        risk_scores(cell.trained->model, rep.val_ds.features);
    try {
      cell.val_c = c_index(val_scores, rep.val_ds.durations, rep.val_ds.events);
    } catch (const undefined_metric_error&) {
      cell.val_c = 0.0;
    }
    cell.val_report =
        evaluate_model(cell.trained->model, rep.val_ds, &rep.train_ds, eval_spec);
  });

  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    Repeat& rep = repeats[r];
    std::map<ModelKind, double> reference_c;
    for (ModelKind mk : model_kinds) {
      double best = 0.0;
      for (const auto& cell : rep.cells) {
        if (cell.config.trainer == TrainerKind::erm && cell.config.model == mk) {
          best = std::max(best, cell.val_c);
        }
      }
      reference_c[mk] = best;
    }

    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
      const auto span = rep.method_cell_span[m];
      std::vector<Candidate> candidates;
      candidates.reserve(span.second - span.first);
      for (std::size_t k = span.first; k < span.second; ++k) {
        candidates.push_back(
            {rep.cells[k].config, rep.cells[k].val_c,
             detail::validation_objective(rep.cells[k].val_report, cfg.rule)});
      }
      const Selection sel = select_candidate(
          candidates, reference_c[cfg.methods[m].model], cfg.rule);
      const Cell& chosen = rep.cells[span.first + sel.index];
      RepeatOutcome outcome;
      outcome.report =
          evaluate_model(chosen.trained->model, test, &rep.train_ds, eval_spec);
      outcome.chosen = chosen.config;
      outcome.trace = chosen.trained->trace;
      outcome.fallback = sel.fallback;
      result.methods[m].repeats[r] = std::move(outcome);
    }
  }
  return result;
}

struct AlphaSweepRow {
  double alpha = 0.0;
  MetricsReport report;
};

// Trains the plain DRO trainer once per alpha on a fixed train/test split
// and evaluates the held-out part. Rows come back sorted by alpha.
inline std::vector<AlphaSweepRow> sweep_alpha(const Dataset& ds,
                                              std::vector<double> alphas,
                                              const TrainConfig& base,
                                              const EvalSpec& eval_spec,
                                              double test_fraction = 0.2,
                                              std::size_t jobs = 1) {
  if (alphas.empty()) throw config_error("sweep_alpha: empty alpha list");
  std::sort(alphas.begin(), alphas.end());
  auto parts = split_dataset_two(ds, 1.0 - test_fraction, base.seed);
  const Dataset& train_ds = parts.first;
  const Dataset& test_ds = parts.second;
  std::vector<AlphaSweepRow> rows(alphas.size());
  detail::parallel_for(jobs, alphas.size(), [&](std::size_t k) {
    TrainConfig cfg = base;
    cfg.trainer = TrainerKind::dro;
    cfg.alpha = alphas[k];
    const TrainResult res = train(train_ds, cfg);
    rows[k].alpha = alphas[k];
    rows[k].report = evaluate_model(res.model, test_ds, &train_ds, eval_spec);
  });
  return rows;
}

inline void save_alpha_sweep_csv(const std::vector<AlphaSweepRow>& rows,
                                 const std::string& path) {
  if (rows.empty()) throw config_error("alpha sweep: nothing to write");
  std::ofstream out(path);
  if (!out) throw config_error("cannot write '" + path + "'");
  out << "alpha," << rows.front().report.csv_header() << '\n';
  for (const auto& row : rows) {
    out << format_double(row.alpha) << ',' << row.report.csv_row() << '\n';
  }
}

// ---------------------------------------------------------------------
// Report emission

namespace detail {

inline std::string na_or(const std::optional<double>& v) {
  if (!v) return "NA";
  return format_double(*v);
}

inline std::string mean_std_cell(const ExperimentResult::Stat& s) {
  if (!s.mean) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f (%.4f)", *s.mean, *s.std_dev);
  return buf;
}

inline std::string metric_display(const std::string& metric) {
  if (metric == "c_index") return "c-index \xE2\x86\x91";
  if (metric == "auc") return "AUC \xE2\x86\x91";
  if (metric == "lpl") return "LPL \xE2\x86\x91";
  if (metric == "ibs") return "IBS \xE2\x86\x93";
  if (metric == "f_i") return "F_I \xE2\x86\x93";
  if (metric == "f_g") return "F_G \xE2\x86\x93";
  if (metric == "f_cap") return "F_cap \xE2\x86\x93";
  if (metric == "f_a") return "F_A \xE2\x86\x93";
  if (metric == "ci_percent") return "CI(%) \xE2\x86\x93";
  return metric;
}

}  // namespace detail

// Per-repeat rows, one per (method, repeat): the raw material for the
// aggregated report and for regression tests.
inline void save_raw_results_csv(const ExperimentResult& result,
                                 const std::string& path) {
  if (result.methods.empty()) throw config_error("emit_report: empty result");
  std::ofstream out(path);
  if (!out) throw config_error("cannot write '" + path + "'");
  out << "method,repeat";
  for (const auto& m : result.metric_columns) out << ',' << m;
  out << ",learning_rate,alpha,lambda,fallback\n";
  for (const auto& method : result.methods) {
    for (std::size_t r = 0; r < method.repeats.size(); ++r) {
      const auto& o = method.repeats[r];
      out << method.display_name << ',' << r;
      for (const auto& m : result.metric_columns) {
        out << ',' << detail::na_or(o.report.metric(m));
      }
      out << ',' << format_double(o.chosen.learning_rate) << ','
          << format_double(o.chosen.alpha) << ','
          << format_double(o.chosen.lambda) << ',' << (o.fallback ? 1 : 0)
          << '\n';
    }
  }
}

// Reads back what save_raw_results_csv wrote (metric values only); used
// by the standalone report command and round-trip tests.
inline ExperimentResult load_raw_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw parse_error("'" + path + "': empty file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2 || header[0] != "method" || header[1] != "repeat") {
    throw parse_error("'" + path + "': not a raw results file");
  }
  std::vector<std::string> metric_cols;
  for (std::size_t c = 2; c < header.size(); ++c) {
    if (header[c] == "learning_rate") break;
    metric_cols.push_back(header[c]);
  }
  ExperimentResult result;
  result.metric_columns = metric_cols;
  std::map<std::string, std::size_t> method_index;
  std::size_t row_number = 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row_number;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 2 + metric_cols.size()) {
      throw parse_error("'" + path + "': short row " +
                        std::to_string(row_number));
    }
    auto [it, inserted] =
        method_index.try_emplace(cells[0], result.methods.size());
    if (inserted) {
      MethodResult mr;
      mr.display_name = cells[0];
      result.methods.push_back(std::move(mr));
    }
    RepeatOutcome outcome;
    for (std::size_t c = 0; c < metric_cols.size(); ++c) {
      const std::string& v = cells[2 + c];
      if (v != "NA") {
        outcome.report.set_metric(metric_cols[c],
                                  std::strtod(v.c_str(), nullptr));
      }
    }
    result.methods[it->second].repeats.push_back(std::move(outcome));
  }
  if (result.methods.empty()) {
    throw parse_error("'" + path + "': no result rows");
  }
  return result;
}

inline void save_report_csv(const ExperimentResult& result,
                            const std::string& path) {
  if (result.methods.empty()) throw config_error("emit_report: empty result");
  std::ofstream out(path);
  if (!out) throw config_error("cannot write '" + path + "'");
  out << "method";
  for (const auto& m : result.metric_columns) {
    out << ',' << m << "_mean," << m << "_std";
  }
  out << '\n';
  for (std::size_t mi = 0; mi < result.methods.size(); ++mi) {
    out << result.methods[mi].display_name;
    for (const auto& m : result.metric_columns) {
      const auto s = result.stat(mi, m);
      out << ',' << detail::na_or(s.mean) << ',' << detail::na_or(s.std_dev);
    }
    out << '\n';
  }
}

inline void save_report_md(const ExperimentResult& result,
                           const std::string& path) {
  if (result.methods.empty()) throw config_error("emit_report: empty result");
  std::ofstream out(path);
  if (!out) throw config_error("cannot write '" + path + "'");
  out << "| Method |";
  for (const auto& m : result.metric_columns) {
    out << ' ' << detail::metric_display(m) << " |";
  }
  out << "\n|---|";
  for (std::size_t k = 0; k < result.metric_columns.size(); ++k) out << "---|";
  out << '\n';
  for (std::size_t mi = 0; mi < result.methods.size(); ++mi) {
    out << "| " << result.methods[mi].display_name << " |";
    for (const auto& m : result.metric_columns) {
      out << ' ' << detail::mean_std_cell(result.stat(mi, m)) << " |";
    }
    out << '\n';
  }
}

inline void save_chosen_json(const ExperimentResult& result,
                             const std::string& path) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& method : result.methods) {
    for (std::size_t r = 0; r < method.repeats.size(); ++r) {
      const auto& o = method.repeats[r];
      j.push_back({{"method", method.display_name},
                   {"repeat", r},
                   {"learning_rate", o.chosen.learning_rate},
                   {"alpha", o.chosen.alpha},
                   {"lambda", o.chosen.lambda},
                   {"fallback", o.fallback}});
    }
  }
  std::ofstream out(path);
  if (!out) throw config_error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

// One trace file per (method, repeat) for the runs the selection rule
// chose.
inline void save_run_traces(const ExperimentResult& result,
                            const std::string& dir) {
  for (const auto& method : result.methods) {
    std::string slug = method.display_name;
    for (auto& c : slug) {
      if (c == '/') c = '_';
    }
    for (std::size_t r = 0; r < method.repeats.size(); ++r) {
      method.repeats[r].trace.to_csv(dir + "/trace_" + slug + "_" +
                                     std::to_string(r) + ".csv");
    }
  }
}

// Writes report.csv and report.md (and, when the result carries chosen
// configurations, chosen.json) into `dir`.
inline void emit_report(const ExperimentResult& result, const std::string& dir,
                        bool with_chosen = true) {
  save_report_csv(result, dir + "/report.csv");
  save_report_md(result, dir + "/report.md");
  if (with_chosen) save_chosen_json(result, dir + "/chosen.json");
}

}  // namespace survdro
