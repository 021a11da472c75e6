#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "survdro/dataset.hpp"
#include "survdro/errors.hpp"

namespace survdro {

// Shortest decimal form that round-trips a double exactly.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Column roles for CSV ingestion. Every column that is not the time
// column, the event column or a listed group column is a numeric feature.
struct CsvSchema {
  std::string time_col = "time";
  std::string event_col = "status";
  std::vector<std::string> group_cols;
};

namespace detail {

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline double parse_number(const std::string& cell, std::size_t row,
                           const std::string& col) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw parse_error("row " + std::to_string(row) + ": non-numeric value '" +
                      cell + "' in column '" + col + "'");
  }
  return v;
}

}  // namespace detail

// Reads a header-first UTF-8 CSV into a Dataset. Group columns are coded
// by first appearance; feature columns keep file order. Cell-level
// problems carry the 1-based data row number.
inline Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw parse_error("'" + path + "': empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_line(line);

  constexpr int kFeature = 0, kTime = 1, kEvent = 2, kGroup = 3;
  std::vector<int> role(header.size(), kFeature);
  std::vector<int> group_slot(header.size(), -1);
  int time_idx = -1, event_idx = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == schema.time_col) {
      role[c] = kTime;
      time_idx = static_cast<int>(c);
    } else if (header[c] == schema.event_col) {
      role[c] = kEvent;
      event_idx = static_cast<int>(c);
    } else {
      for (std::size_t g = 0; g < schema.group_cols.size(); ++g) {
        if (header[c] == schema.group_cols[g]) {
          role[c] = kGroup;
          group_slot[c] = static_cast<int>(g);
        }
      }
    }
  }
  if (time_idx < 0) {
    throw config_error("'" + path + "': missing time column '" +
                       schema.time_col + "'");
  }
  if (event_idx < 0) {
    throw config_error("'" + path + "': missing event column '" +
                       schema.event_col + "'");
  }
  for (const auto& g : schema.group_cols) {
    bool found = false;
    for (std::size_t c = 0; c < header.size(); ++c)
      found = found || header[c] == g;
    if (!found) {
      throw config_error("'" + path + "': missing group column '" + g + "'");
    }
  }

  Dataset ds;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (role[c] == kFeature) ds.feature_names.push_back(header[c]);
  }
  std::vector<GroupAttribute> attrs(schema.group_cols.size());

  std::vector<double> times;
  std::vector<std::uint8_t> events;
  std::vector<double> feats;  // row-major
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto cells = detail::split_line(line);
    if (cells.size() != header.size()) {
      throw parse_error("row " + std::to_string(row) + ": expected " +
                        std::to_string(header.size()) + " cells, got " +
                        std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      switch (role[c]) {
        case kFeature:
          feats.push_back(detail::parse_number(cells[c], row, header[c]));
          break;
        case kTime: {
          const double t = detail::parse_number(cells[c], row, header[c]);
          if (!(t >= 0.0)) {
            throw parse_error("row " + std::to_string(row) +
                              ": negative duration");
          }
          times.push_back(t);
          break;
        }
        case kEvent: {
          const double e = detail::parse_number(cells[c], row, header[c]);
          if (e != 0.0 && e != 1.0) {
            throw parse_error("row " + std::to_string(row) +
                              ": event indicator '" + cells[c] +
                              "' is not 0 or 1");
          }
          events.push_back(static_cast<std::uint8_t>(e));
          break;
        }
        case kGroup: {
          auto& attr = attrs[static_cast<std::size_t>(group_slot[c])];
          int code = -1;
          for (std::size_t k = 0; k < attr.labels.size(); ++k) {
            if (attr.labels[k] == cells[c]) code = static_cast<int>(k);
          }
          if (code < 0) {
            code = static_cast<int>(attr.labels.size());
            attr.labels.push_back(cells[c]);
          }
          attr.categories.push_back(code);
          break;
        }
      }
    }
  }

  const auto n = times.size();
  const auto d = ds.feature_names.size();
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  ds.durations.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    ds.durations[static_cast<Eigen::Index>(i)] = times[i];
    for (std::size_t j = 0; j < d; ++j) {
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          feats[i * d + j];
    }
  }
  ds.events = std::move(events);
  for (std::size_t g = 0; g < attrs.size(); ++g) {
    ds.groups.emplace(schema.group_cols[g], std::move(attrs[g]));
  }
  ds.validate();
  return ds;
}

// Writes features, time, status, then group columns (original labels).
// load_csv(save_csv(ds)) reproduces ds exactly: floats go out with 17
// significant digits.
inline void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot write '" + path + "'");
  for (const auto& name : ds.feature_names) out << name << ',';
  out << "time,status";
  for (const auto& [name, attr] : ds.groups) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j) {
      out << format_double(ds.features(static_cast<Eigen::Index>(i), j)) << ',';
    }
    out << format_double(ds.durations[static_cast<Eigen::Index>(i)]) << ','
        << static_cast<int>(ds.events[i]);
    for (const auto& [name, attr] : ds.groups) {
      out << ',' << attr.labels[static_cast<std::size_t>(attr.categories[i])];
    }
    out << '\n';
  }
}

inline CsvSchema schema_for(const Dataset& ds) {
  CsvSchema schema;
  for (const auto& [name, attr] : ds.groups) schema.group_cols.push_back(name);
  return schema;
}

}  // namespace survdro
