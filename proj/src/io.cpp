#include "glp/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "glp/errors.hpp"

namespace glp::io {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw InvalidInput("not a number: '" + std::string(text) + "'");
  return value;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw InvalidInput("CSV: missing column '" + std::string(name) + "'");
}

namespace {

std::vector<std::string> split_line(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("error writing " + path.string());
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("CSV " + path.string() + ": missing header");
  table.header = split_line(line);
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto fields = split_line(line);
    if (fields.size() != table.header.size())
      throw InvalidInput("CSV " + path.string() + ": row width differs from header");
    table.rows.push_back(std::move(fields));
  }
  return table;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  auto out = open_for_write(path);
  auto emit = [&out](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << fields[i];
    out << '\n';
  };
  emit(table.header);
  for (const auto& row : table.rows) emit(row);
  finish(out, path);
}

void write_profile_csv(const std::filesystem::path& path, const ProfileCurve& curve) {
  const auto phi = curve.grid.values();
  auto out = open_for_write(path);
  out << "phi,profile_loss,log_gl_delta1,converged\n";
  for (std::size_t j = 0; j < phi.size(); ++j)
    out << format_double(phi[j]) << ',' << format_double(curve.profile_loss[j]) << ','
        << format_double(-curve.profile_loss[j]) << ',' << (curve.converged[j] ? 1 : 0) << '\n';
  finish(out, path);
}

ProfileCurve read_profile_csv(const std::filesystem::path& path, const InterestPartition& partition,
                              ParameterVector mgle, double mgle_loss) {
  if (partition.interest().size() != 1) throw InvalidInput("profile CSV: only 1-D interest sets are supported");
  const CsvTable table = read_csv(path);
  const auto pc = table.column("phi");
  const auto lc = table.column("profile_loss");
  const auto cc = table.column("converged");
  if (table.rows.size() < 2) throw InvalidInput("profile CSV " + path.string() + ": need at least two rows");
  ProfileCurve curve{ProfileGrid{partition, {}}};
  for (const auto& row : table.rows) {
    curve.grid.points.push_back({parse_double(row[pc])});
    curve.profile_loss.push_back(parse_double(row[lc]));
    if (row[cc] != "0" && row[cc] != "1") throw InvalidInput("profile CSV: converged must be 0 or 1");
    curve.converged.push_back(row[cc] == "1");
    curve.minimizers.emplace_back();
  }
  curve.mgle = std::move(mgle);
  curve.mgle_loss = mgle_loss;
  return curve;
}

void write_coverage_curve_csv(const std::filesystem::path& path, const CalibrationResult& result) {
  auto out = open_for_write(path);
  out << "delta,coverage\n";
  for (const auto& p : result.coverage_curve) out << format_double(p.delta) << ',' << format_double(p.coverage) << '\n';
  finish(out, path);
}

void write_coverage_report_csv(const std::filesystem::path& path, std::span<const CoverageReport> reports,
                               std::span<const std::string> parameter_names) {
  auto out = open_for_write(path);
  for (const auto& name : parameter_names) out << "theta_" << name << ',';
  out << "interest,delta_star,alpha,observed_coverage,B_effective\n";
  for (const auto& report : reports) {
    if (report.theta_true.size() != parameter_names.size())
      throw InvalidInput("coverage CSV: parameter name count differs from theta");
    std::string interest;
    for (auto i : report.partition.interest()) interest += (interest.empty() ? "" : ";") + parameter_names[i];
    for (std::size_t a = 0; a < report.alphas.size(); ++a) {
      for (double v : report.theta_true) out << format_double(v) << ',';
      const double delta = report.deltas.empty() ? report.delta_star : report.deltas[a];
      out << interest << ',' << format_double(delta) << ',' << format_double(report.alphas[a]) << ','
          << format_double(report.observed[a]) << ',' << report.B_effective << '\n';
    }
  }
  finish(out, path);
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  auto out = open_for_write(path);
  out << text;
  finish(out, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace glp::io
