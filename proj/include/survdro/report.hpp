#pragma once

#include <Eigen/Core>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "survdro/cox_loss.hpp"
#include "survdro/dataset.hpp"
#include "survdro/errors.hpp"
#include "survdro/metrics.hpp"
#include "survdro/model.hpp"

namespace survdro {

// What to evaluate: which attributes get per-group metrics (F_G and CI),
// which attribute intersection feeds F_cap, and the time grid for the
// survival-curve metrics. The first entry of `group_attributes` supplies
// the headline F_G/CI columns.
struct EvalSpec {
  std::vector<std::string> group_attributes;
  std::vector<std::string> intersect_attributes;  // empty = group_attributes
  double gamma = 0.01;
  std::size_t grid_size = 100;
  std::optional<Eigen::VectorXd> time_grid;  // overrides the default grid
};

struct AttributeMetrics {
  std::string attribute;
  std::optional<double> f_g;
  std::optional<double> ci_percent;
};

// One evaluation run. Undefined metrics stay empty and print as NA.
// Better-direction: higher for c_index/auc/lpl, lower for everything else.
struct MetricsReport {
  std::optional<double> c_index;
  std::optional<double> auc;
  std::optional<double> lpl;
  std::optional<double> ibs;
  std::optional<double> f_i;
  std::optional<double> f_g;        // first listed attribute
  std::optional<double> f_cap;
  std::optional<double> f_a;
  std::optional<double> ci_percent; // first listed attribute
  std::vector<AttributeMetrics> per_attribute;

  static const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names = {
        "c_index", "auc", "lpl", "ibs", "f_i", "f_g", "f_cap", "f_a",
        "ci_percent"};
    return names;
  }

  std::optional<double> metric(const std::string& name) const {
    if (name == "c_index") return c_index;
    if (name == "auc") return auc;
    if (name == "lpl") return lpl;
    if (name == "ibs") return ibs;
    if (name == "f_i") return f_i;
    if (name == "f_g") return f_g;
    if (name == "f_cap") return f_cap;
    if (name == "f_a") return f_a;
    if (name == "ci_percent") return ci_percent;
    throw config_error("unknown metric '" + name + "'");
  }

  void set_metric(const std::string& name, std::optional<double> value) {
    if (name == "c_index") {
      c_index = value;
    } else if (name == "auc") {
      auc = value;
    } else if (name == "lpl") {
      lpl = value;
    } else if (name == "ibs") {
      ibs = value;
    } else if (name == "f_i") {
      f_i = value;
    } else if (name == "f_g") {
      f_g = value;
    } else if (name == "f_cap") {
      f_cap = value;
    } else if (name == "f_a") {
      f_a = value;
    } else if (name == "ci_percent") {
      ci_percent = value;
    } else {
      throw config_error("unknown metric '" + name + "'");
    }
  }

  std::string csv_header() const {
    std::ostringstream out;
    for (std::size_t k = 0; k < metric_names().size(); ++k) {
      out << (k ? "," : "") << metric_names()[k];
    }
    for (const auto& am : per_attribute) {
      out << ",f_g_" << am.attribute << ",ci_" << am.attribute;
    }
    return out.str();
  }

  std::string csv_row() const {
    auto cell = [](const std::optional<double>& v) -> std::string {
      if (!v) return "NA";
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", *v);
      return buf;
    };
    std::ostringstream out;
    for (std::size_t k = 0; k < metric_names().size(); ++k) {
      out << (k ? "," : "") << cell(metric(metric_names()[k]));
    }
    for (const auto& am : per_attribute) {
      out << ',' << cell(am.f_g) << ',' << cell(am.ci_percent);
    }
    return out.str();
  }

  std::string table() const {
    auto cell = [](const std::optional<double>& v) -> std::string {
      if (!v) return "NA";
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.4f", *v);
      return buf;
    };
    std::ostringstream out;
    out << "metric        value      better\n";
    auto line = [&](const char* name, const std::optional<double>& v,
                    const char* dir) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "%-13s %-10s %s\n", name,
                    cell(v).c_str(), dir);
      out << buf;
    };
    line("c-index", c_index, "higher");
    line("AUC (C/D, IPCW)", auc, "higher");
    line("LPL", lpl, "higher");
    line("IBS", ibs, "lower");
    line("F_I", f_i, "lower");
    line("F_G", f_g, "lower");
    line("F_cap", f_cap, "lower");
    line("F_A", f_a, "lower");
    line("CI(%)", ci_percent, "lower");
    for (const auto& am : per_attribute) {
      line(("F_G[" + am.attribute + "]").c_str(), am.f_g, "lower");
      line(("CI(%)[" + am.attribute + "]").c_str(), am.ci_percent, "lower");
    }
    return out.str();
  }
};

// Full metric suite for a trained model on an evaluation set. IBS needs
// the Breslow baseline, which is fit on `training` (the same data the
// model was trained on); without it IBS is NA. Metrics whose
// preconditions fail come back NA rather than aborting the run.
inline MetricsReport evaluate_model(const RiskModel& model, const Dataset& eval,
                                    const Dataset* training,
                                    const EvalSpec& spec = {}) {
  MetricsReport report;
  const Eigen::VectorXd scores = risk_scores(model, eval.features);

  try {
    report.c_index = c_index(scores, eval.durations, eval.events);
  } catch (const undefined_metric_error&) {
  }
  try {
    report.lpl = test_lpl(scores, eval.durations, eval.events);
  } catch (const config_error&) {
  }

  std::optional<Eigen::VectorXd> grid;
  try {
    grid = spec.time_grid ? *spec.time_grid
                          : default_time_grid(eval.durations, eval.events,
                                              spec.grid_size);
  } catch (const undefined_metric_error&) {
  }
  if (grid) {
    try {
      report.auc = time_dependent_auc(scores, eval.durations, eval.events, *grid);
    } catch (const undefined_metric_error&) {
    }
    if (training != nullptr) {
      const Eigen::VectorXd train_scores = risk_scores(model, training->features);
      try {
        const BaselineHazard bh =
            breslow_baseline(train_scores, training->durations, training->events);
        report.ibs = integrated_brier(
            [&](std::size_t i, double t) {
              return survival_estimate(bh, scores[static_cast<Eigen::Index>(i)], t);
            },
            eval.durations, eval.events, *grid);
      } catch (const config_error&) {
      }
    }
  }

  if (eval.size() >= 2) {
    report.f_i = fairness_individual(scores, eval.features,
                                     FairnessConfig{spec.gamma});
  }

  for (const auto& attr : spec.group_attributes) {
    AttributeMetrics am;
    am.attribute = attr;
    // A missing attribute is a caller error and propagates; a category
    // with no members or no comparable pairs in this particular subset
    // just renders NA.
    const auto part = GroupPartition::from_dataset(eval, attr);
    try {
      am.f_g = fairness_group(scores, part);
    } catch (const config_error&) {
    }
    try {
      am.ci_percent =
          concordance_imparity(scores, eval.durations, eval.events, part);
    } catch (const undefined_metric_error&) {
    } catch (const config_error&) {
    }
    report.per_attribute.push_back(am);
  }
  if (!report.per_attribute.empty()) {
    report.f_g = report.per_attribute.front().f_g;
    report.ci_percent = report.per_attribute.front().ci_percent;
  }

  const auto& cap_attrs = spec.intersect_attributes.empty()
                              ? spec.group_attributes
                              : spec.intersect_attributes;
  if (!cap_attrs.empty()) {
    std::vector<GroupPartition> parts;
    for (const auto& attr : cap_attrs) {
      parts.push_back(GroupPartition::from_dataset(eval, attr));
    }
    try {
      report.f_cap = fairness_intersectional(scores, parts);
    } catch (const config_error&) {
    }
  }

  if (report.f_i && report.f_g && report.f_cap) {
    report.f_a = fairness_average(*report.f_i, *report.f_g, *report.f_cap);
  }
  return report;
}

}  // namespace survdro
