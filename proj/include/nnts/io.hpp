#pragma once

// Text formats: angle files in, JSON documents and CSV out. The document
// grammar is described in docs/FORMATS.md.

#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "nnts/core.hpp"
#include "nnts/inference.hpp"
#include "nnts/optimizer.hpp"

namespace nnts::io {

inline constexpr int kFormatVersion = 1;

enum class Convention { axial_mod_pi, leaf_double, raw_0_pi };

struct DatasetSpec {
  std::filesystem::path path;
  AngleUnit unit;
  Convention convention;
};

/// Tolerance on sum |v_k|^2 = 1 for parameters read from a document. Documents
/// closer than kNormTolerance are taken verbatim, within this bound they are
/// renormalized, beyond it they are rejected.
inline constexpr double kLoadNormTolerance = 1e-6;

AngleUnit parse_unit(std::string_view name);
Convention parse_convention(std::string_view name);
const char* to_string(AngleUnit unit);
const char* to_string(Convention convention);

/// One decimal angle per line; blank lines and '#' comments are skipped.
/// `source` names the stream in error messages.
AxialSample parse_angles(std::istream& in, AngleUnit unit, Convention convention,
                         std::string_view source = "<input>");
AxialSample load_angles(const DatasetSpec& spec);

/// Angle file with a comment header; readable by load_angles as radians/raw_0_pi.
std::string format_angles(const AxialSample& sample, std::string_view header_comment = {});

std::string save_params(const AxialParams& params);
std::string save_params(const SymmetricAxialParams& params);
std::string save_params(const FittedParams& params);
FittedParams load_params(std::string_view document);

std::string save_fit(const FitResult& fit);
std::string save_scan(const ModelScan& scan);
/// Human-readable table, best BIC / AIC marked with '*'.
std::string format_scan_table(const ModelScan& scan);
std::string save_test(const LRTResult& result);

std::string save_moments(const AxialParams& params, int max_r);

struct GridRow {
  double theta = 0.0;
  double density = 0.0;
  double cdf = 0.0;
};

/// theta_j = j pi / n_points for j = 0..n_points-1.
std::vector<GridRow> density_grid(const AxialParams& params, int n_points);
/// Header "theta,density,cdf" followed by one row per grid point.
std::string format_density_grid(const std::vector<GridRow>& rows);

/// Shortest decimal representation that reads back to the same double.
std::string format_double(double x);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace nnts::io
