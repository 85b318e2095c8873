#include "mssf/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mssf {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string trajectory_csv(const ReactionNetwork& net, const Trajectory& traj) {
  std::string out = "t";
  for (const auto& s : net.species()) out += "," + s.name;
  out += "\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    out += format_double(traj.times[i]);
    for (double v : traj.states[i]) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

std::string observations_csv(const ObservationSequence& obs) {
  std::string out = "t";
  std::size_t m = obs.values.empty() ? 0 : obs.values.front().size();
  for (std::size_t l = 1; l <= m; ++l) out += ",y" + std::to_string(l);
  out += "\n";
  for (std::size_t i = 0; i < obs.times.size(); ++i) {
    out += format_double(obs.times[i]);
    for (double v : obs.values[i]) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    auto next = line.find(',', pos);
    if (next == std::string::npos) {
      fields.push_back(line.substr(pos));
      break;
    }
    fields.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return fields;
}

double parse_field(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(where + ": malformed number '" + s + "'");
  }
}

}  // namespace

ObservationSequence parse_observations_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("observations csv: empty file");
  if (line.rfind("t,", 0) != 0 && line != "t") {
    throw std::runtime_error("observations csv: header must start with 't,'");
  }
  ObservationSequence obs;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    const std::string where = "observations csv row " + std::to_string(row);
    if (fields.size() < 1) throw std::runtime_error(where + ": missing fields");
    obs.times.push_back(parse_field(fields[0], where));
    std::vector<double> y;
    for (std::size_t i = 1; i < fields.size(); ++i) y.push_back(parse_field(fields[i], where));
    obs.values.push_back(std::move(y));
    ++row;
  }
  return obs;
}

std::string filter_csv(const FilterRun& run) {
  std::string out = "t,functional,estimate,sd,ess,step_wall_ms\n";
  for (const auto& step : run.steps) {
    for (std::size_t f = 0; f < run.functional_names.size(); ++f) {
      out += format_double(step.time);
      out += "," + run.functional_names[f];
      out += "," + format_double(step.mean[f]);
      out += "," + format_double(std::sqrt(step.variance_proxy[f]));
      out += "," + format_double(step.ess);
      out += "," + format_double(step.step_wall_ms);
      out += "\n";
    }
  }
  return out;
}

std::string exact_filter_csv(const ExactFilterResult& result) {
  std::string out = "t,functional,estimate,sd,ess,step_wall_ms\n";
  for (const auto& step : result.steps) {
    for (std::size_t f = 0; f < result.functional_names.size(); ++f) {
      out += format_double(step.time);
      out += "," + result.functional_names[f];
      out += "," + format_double(step.mean[f]);
      out += "," + format_double(std::sqrt(step.variance[f]));
      out += ",nan";
      out += "," + format_double(step.step_wall_ms);
      out += "\n";
    }
  }
  return out;
}

}  // namespace mssf
