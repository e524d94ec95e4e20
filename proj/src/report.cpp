#include "rflab/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace rflab {

bool Report::all_pass() const {
  for (const Verdict& v : verdicts)
    if (!v.pass) return false;
  return true;
}

void Report::add_verdict(const std::string& name, bool pass,
                         const std::string& detail) {
  verdicts.push_back({name, pass, detail});
}

int Report::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string report_csv(const Report& report) {
  std::string out;
  bool labeled = !report.row_labels.empty();
  if (labeled) out += "label,";
  for (std::size_t c = 0; c < report.columns.size(); ++c) {
    if (c) out += ',';
    out += report.columns[c];
  }
  out += '\n';
  for (std::size_t r = 0; r < report.rows.size(); ++r) {
    if (labeled) {
      out += report.row_labels[r];
      out += ',';
    }
    const auto& row = report.rows[r];
    if (row.size() != report.columns.size())
      throw std::runtime_error("report row width mismatch in " + report.tag);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += fmt17(row[c]);
    }
    out += '\n';
  }
  return out;
}

std::string report_json(const Report& report) {
  nlohmann::json j;
  j["tag"] = report.tag;
  j["config"] = report.config;
  auto verdicts = nlohmann::json::array();
  for (const Verdict& v : report.verdicts)
    verdicts.push_back(
        {{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}});
  j["verdicts"] = verdicts;
  j["all_pass"] = report.all_pass();
  j["wall_seconds"] = report.wall_seconds;
  return j.dump(2) + "\n";
}

void write_report(const std::string& dir, const Report& report) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_text_atomic((fs::path(dir) / (report.tag + ".csv")).string(),
                    report_csv(report));
  write_text_atomic((fs::path(dir) / (report.tag + ".json")).string(),
                    report_json(report));
}

void write_dataset(const std::string& dir, const std::string& stem,
                   const TrainingSet& data, const RegressionModel& model) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::string csv;
  for (int j = 0; j < data.dim; ++j) csv += "x" + std::to_string(j + 1) + ",";
  csv += "y\n";
  for (int i = 0; i < data.size(); ++i) {
    std::span<const double> x = data.point(i);
    for (int j = 0; j < data.dim; ++j) {
      csv += fmt17(x[j]);
      csv += ',';
    }
    csv += fmt17(data.ys[i]);
    csv += '\n';
  }
  write_text_atomic((fs::path(dir) / (stem + ".csv")).string(), csv);

  nlohmann::json j;
  j["model"] = model.tag();
  j["dim"] = model.dim;
  j["sigma"] = model.sigma;
  j["n"] = data.size();
  j["seed"] = data.seed;
  write_text_atomic((fs::path(dir) / (stem + ".json")).string(),
                    j.dump(2) + "\n");
}

}  // namespace rflab
