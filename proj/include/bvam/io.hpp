#pragma once

#include "bvam/continuation.hpp"
#include "bvam/diagnostics.hpp"
#include "bvam/integrator.hpp"
#include "bvam/spectral.hpp"

#include <json.hpp>

#include <complex>
#include <filesystem>
#include <string>
#include <vector>

namespace bvam {

/// Header plus rows of raw cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a named column; throws Error when absent.
  std::size_t column(const std::string& name) const;
  /// Column parsed as doubles (empty cells become NaN).
  std::vector<double> numbers(const std::string& name) const;
};

/// Shortest text that round-trips: 17 significant digits.
std::string format_number(double v);

void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

/// Run description written next to every data file as <stem>.meta.json.
struct RunMetadata {
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json grid = nlohmann::json::object();
  std::string command_line;
};

nlohmann::json describe_grid(const SpectralGrid& grid);
/// Writes <dir>/<stem>.meta.json for the data file `data_path`.
std::filesystem::path write_metadata(const std::filesystem::path& data_path, const RunMetadata& meta);

/// One row per recorded time: t, E, u1[0..N-1], u2[0..N-1].
void export_trajectory(const Trajectory& traj, const std::filesystem::path& path);
/// x, u1, u2.
void export_state(const SpectralGrid& grid, const FieldPair& state, const std::filesystem::path& path);
/// index, re, im.
void export_eigenvalues(const std::vector<std::complex<double>>& values, const std::filesystem::path& path);
/// C, E, max_real_part, leading_re, leading_im, stable, residual_norm, iterations, event.
void export_branch(const EquilibriumBranch& branch, const std::filesystem::path& path);
/// C, T, E, residual_norm, iterations, critical_re, critical_im, multiplier_re_k / multiplier_im_k
/// for the leading `multiplier_columns` multipliers, event. Points without Floquet data leave those cells empty.
void export_branch(const OrbitBranch& branch, const std::filesystem::path& path, int multiplier_columns = 4);
/// t, t_norm, u1_center, u2_center, E, dEdt.
void export_attractor(const std::vector<AttractorSample>& samples, const std::filesystem::path& path);
/// frequency, amplitude.
void export_spectrum(const AmplitudeSpectrum& spectrum, const std::filesystem::path& path);

}  // namespace bvam
