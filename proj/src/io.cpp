#include "bvam/io.hpp"

#include "bvam/errors.hpp"

#include <Eigen/Core>
#include <fftw3.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace bvam {

namespace fs = std::filesystem;

namespace {

std::string quote(const std::string& cell) {
  if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// RFC-4180 record splitting; quoted cells may span lines.
bool read_record(std::istream& in, std::vector<std::string>& cells) {
  cells.clear();
  std::string cell;
  bool quoted = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          cell += '"';
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      cell += c;
    }
  }
  if (!any) return false;
  cells.push_back(std::move(cell));
  return true;
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw Error("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
}

std::string cell(double v) { return format_number(v); }
std::string cell(int v) { return std::to_string(v); }

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw Error("CSV has no column '" + name + "'");
}

std::vector<double> CsvTable::numbers(const std::string& name) const {
  const auto c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    const std::string& s = r.at(c);
    if (s.empty()) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size()) throw Error("non-numeric cell '" + s + "' in " + name);
    out.push_back(v);
  }
  return out;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (ec != std::errc{}) throw Error("number formatting failed");
  return std::string(buf, end);
}

void write_csv(const fs::path& path, const CsvTable& table) {
  if (table.header.empty()) throw Error("CSV header must not be empty");
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  auto write_row = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << quote(row[i]);
    }
    out << "\r\n";
  };
  write_row(table.header);
  for (const auto& r : table.rows) {
    if (r.size() != table.header.size()) throw Error("CSV row width does not match the header");
    write_row(r);
  }
  if (!out.flush()) throw Error("write to '" + path.string() + "' failed");
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  CsvTable t;
  if (!read_record(in, t.header)) throw Error("'" + path.string() + "' has no header row");
  std::vector<std::string> row;
  while (read_record(in, row)) {
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != t.header.size()) throw Error("ragged row in '" + path.string() + "'");
    t.rows.push_back(row);
  }
  return t;
}

nlohmann::json describe_grid(const SpectralGrid& grid) {
  return {{"N", grid.size()},
          {"Lx", grid.half_length()},
          {"dx", grid.spacing()},
          {"x0", grid.points()[0]},
          {"center_index", grid.center_index()},
          {"dealias", grid.dealiased()}};
}

fs::path write_metadata(const fs::path& data_path, const RunMetadata& meta) {
  fs::path out = data_path;
  out.replace_extension(".meta.json");
  nlohmann::json j;
  j["config"] = meta.config;
  j["grid"] = meta.grid;
  j["versions"] = {{"bvam", std::string(BVAM_VERSION)},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"fftw", std::string(fftw_version)}};
  j["command_line"] = meta.command_line;
  ensure_parent(out);
  std::ofstream f(out, std::ios::binary);
  if (!f) throw Error("cannot open '" + out.string() + "' for writing");
  f << j.dump(2) << '\n';
  if (!f.flush()) throw Error("write to '" + out.string() + "' failed");
  return out;
}

void export_trajectory(const Trajectory& traj, const fs::path& path) {
  if (traj.size() == 0) throw Error("empty trajectory");
  const auto n = traj.states.front().size();
  CsvTable t;
  t.header = {"t", "E"};
  for (Eigen::Index j = 0; j < n; ++j) t.header.push_back("u1_" + std::to_string(j));
  for (Eigen::Index j = 0; j < n; ++j) t.header.push_back("u2_" + std::to_string(j));
  for (std::size_t i = 0; i < traj.size(); ++i) {
    std::vector<std::string> r{cell(traj.times[i]), i < traj.energies.size() ? cell(traj.energies[i]) : ""};
    for (Eigen::Index j = 0; j < n; ++j) r.push_back(cell(traj.states[i].u1[j]));
    for (Eigen::Index j = 0; j < n; ++j) r.push_back(cell(traj.states[i].u2[j]));
    t.rows.push_back(std::move(r));
  }
  write_csv(path, t);
}

void export_state(const SpectralGrid& grid, const FieldPair& state, const fs::path& path) {
  state.check(grid.size());
  CsvTable t;
  t.header = {"x", "u1", "u2"};
  for (int j = 0; j < grid.size(); ++j) t.rows.push_back({cell(grid.points()[j]), cell(state.u1[j]), cell(state.u2[j])});
  write_csv(path, t);
}

void export_eigenvalues(const std::vector<std::complex<double>>& values, const fs::path& path) {
  CsvTable t;
  t.header = {"index", "re", "im"};
  for (std::size_t i = 0; i < values.size(); ++i) {
    t.rows.push_back({std::to_string(i), cell(values[i].real()), cell(values[i].imag())});
  }
  write_csv(path, t);
}

void export_branch(const EquilibriumBranch& branch, const fs::path& path) {
  CsvTable t;
  t.header = {"C", "E", "max_real_part", "leading_re", "leading_im", "stable", "residual_norm", "iterations", "event"};
  for (const auto& p : branch.points) {
    const auto lead = p.stability.eigenvalues.empty() ? std::complex<double>{} : p.stability.eigenvalues.front();
    t.rows.push_back({cell(p.C), cell(p.energy), cell(p.stability.max_real_part), cell(lead.real()),
                      cell(lead.imag()), p.stability.stable ? "1" : "0", cell(p.residual_norm), cell(p.iterations),
                      std::string(to_string(p.event))});
  }
  write_csv(path, t);
}

void export_branch(const OrbitBranch& branch, const fs::path& path, int multiplier_columns) {
  CsvTable t;
  t.header = {"C", "T", "E", "residual_norm", "iterations", "critical_re", "critical_im"};
  for (int k = 0; k < multiplier_columns; ++k) {
    t.header.push_back("multiplier_re_" + std::to_string(k));
    t.header.push_back("multiplier_im_" + std::to_string(k));
  }
  t.header.push_back("event");
  for (const auto& p : branch.points) {
    std::vector<std::string> r{cell(p.C), cell(p.orbit.period), cell(p.energy), cell(p.orbit.residual_norm),
                               cell(p.orbit.iterations)};
    if (p.has_monodromy) {
      r.push_back(cell(p.bifurcation.critical_multiplier.real()));
      r.push_back(cell(p.bifurcation.critical_multiplier.imag()));
    } else {
      r.insert(r.end(), {"", ""});
    }
    for (int k = 0; k < multiplier_columns; ++k) {
      if (p.has_monodromy && k < static_cast<int>(p.multipliers.size())) {
        r.push_back(cell(p.multipliers[k].real()));
        r.push_back(cell(p.multipliers[k].imag()));
      } else {
        r.insert(r.end(), {"", ""});
      }
    }
    r.push_back(std::string(to_string(p.event)));
    t.rows.push_back(std::move(r));
  }
  write_csv(path, t);
}

void export_attractor(const std::vector<AttractorSample>& samples, const fs::path& path) {
  CsvTable t;
  t.header = {"t", "t_norm", "u1_center", "u2_center", "E", "dEdt"};
  for (const auto& s : samples) {
    t.rows.push_back({cell(s.t), cell(s.t_norm), cell(s.u1_center), cell(s.u2_center), cell(s.E), cell(s.dEdt)});
  }
  write_csv(path, t);
}

void export_spectrum(const AmplitudeSpectrum& spectrum, const fs::path& path) {
  CsvTable t;
  t.header = {"frequency", "amplitude"};
  for (Eigen::Index i = 0; i < spectrum.frequency.size(); ++i) {
    t.rows.push_back({cell(spectrum.frequency[i]), cell(spectrum.amplitude[i])});
  }
  write_csv(path, t);
}

}  // namespace bvam
