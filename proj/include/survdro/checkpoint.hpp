#pragma once

#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "survdro/dataset.hpp"
#include "survdro/errors.hpp"
#include "survdro/model.hpp"

namespace survdro {

// Model checkpoint: variant tag, dimensions, the flat parameter vector in
// canonical order, the feature standardization baked into the model's
// input space (if any), and free-form provenance (the seed and options
// that produced it).
struct Checkpoint {
  RiskModel model{LinearModel{}};
  std::optional<Standardization> standardization;
  nlohmann::json provenance;
};

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  nlohmann::json j;
  j["variant"] = to_string(ckpt.model.kind());
  j["input_dim"] = ckpt.model.input_dim();
  if (ckpt.model.kind() == ModelKind::mlp) {
    j["hidden_dim"] = ckpt.model.hidden_dim();
  }
  const Eigen::VectorXd flat = ckpt.model.flatten();
  j["params"] = std::vector<double>(flat.data(), flat.data() + flat.size());
  if (ckpt.standardization) {
    const auto& st = *ckpt.standardization;
    j["standardization"] = {
        {"means", std::vector<double>(st.means.data(), st.means.data() + st.means.size())},
        {"stds", std::vector<double>(st.stds.data(), st.stds.data() + st.stds.size())}};
  }
  if (!ckpt.provenance.is_null()) j["provenance"] = ckpt.provenance;
  std::ofstream out(path);
  if (!out) throw config_error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error("'" + path + "': " + e.what());
  }
  Checkpoint ckpt;
  const auto kind = model_kind_from_string(j.at("variant").get<std::string>());
  const auto input_dim = j.at("input_dim").get<std::size_t>();
  const auto hidden_dim =
      kind == ModelKind::mlp ? j.at("hidden_dim").get<std::size_t>() : 0;
  ckpt.model = init_params(kind, input_dim, hidden_dim, 0);
  const auto params = j.at("params").get<std::vector<double>>();
  if (params.size() != ckpt.model.param_count()) {
    throw parse_error("'" + path + "': parameter count does not match dims");
  }
  Eigen::VectorXd flat =
      Eigen::Map<const Eigen::VectorXd>(params.data(),
                                        static_cast<Eigen::Index>(params.size()));
  ckpt.model.set_from_flat(flat);
  if (j.contains("standardization")) {
    Standardization st;
    const auto means = j["standardization"].at("means").get<std::vector<double>>();
    const auto stds = j["standardization"].at("stds").get<std::vector<double>>();
    st.means = Eigen::Map<const Eigen::VectorXd>(means.data(),
                                                 static_cast<Eigen::Index>(means.size()));
    st.stds = Eigen::Map<const Eigen::VectorXd>(stds.data(),
                                                static_cast<Eigen::Index>(stds.size()));
    ckpt.standardization = std::move(st);
  }
  if (j.contains("provenance")) ckpt.provenance = j["provenance"];
  return ckpt;
}

}  // namespace survdro
