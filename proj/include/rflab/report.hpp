#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "rflab/model.hpp"

namespace rflab {

// One named pass/fail check with a human-readable explanation.
struct Verdict {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Structured result of one experiment run: a numeric table plus verdicts.
// The CSV carries the table; the JSON carries the configuration echo, the
// verdicts, and the wall clock.
struct Report {
  std::string tag;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::string> columns;
  std::vector<std::string> row_labels;  // optional; empty or one per row
  std::vector<std::vector<double>> rows;
  std::vector<Verdict> verdicts;
  double wall_seconds = 0.0;

  bool all_pass() const;
  void add_verdict(const std::string& name, bool pass,
                   const std::string& detail);
  int column_index(const std::string& name) const;  // -1 when absent
};

// Shortest decimal form that round-trips a double (17 significant digits).
std::string fmt17(double v);

// Writes via a temp file in the same directory plus rename, so readers never
// observe a partial file.
void write_text_atomic(const std::string& path, const std::string& text);

std::string report_csv(const Report& report);
std::string report_json(const Report& report);

// Writes <dir>/<tag>.csv and <dir>/<tag>.json (directory created if needed).
void write_report(const std::string& dir, const Report& report);

// Dataset as CSV with header x1,...,xd,y plus a sidecar JSON describing the
// generating model and seed.
void write_dataset(const std::string& dir, const std::string& stem,
                   const TrainingSet& data, const RegressionModel& model);

}  // namespace rflab
