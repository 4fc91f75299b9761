#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adoptnet/analysis.hpp"
#include "adoptnet/control.hpp"
#include "adoptnet/model.hpp"

namespace adoptnet {

// Shortest representation that round-trips a double exactly.
std::string format_double(double v);

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path,
                      const Eigen::MatrixXd& m);

// Columns: t, a_1..a_n, d_1..d_n, x_1..x_n, u_1..u_n (u rows zero-filled
// where no control was applied).
void write_trajectory_csv(const std::filesystem::path& path,
                          const Trajectory& traj);

// Columns: t, sum_a, sum_d, mean_x.
void write_aggregate_csv(const std::filesystem::path& path,
                         const Trajectory& traj);

struct SummaryRow {
  std::uint64_t seed = 0;
  std::string channel = "none";
  bool feasible = true;
  double total_adopters = 0;
  double control_cost = 0;
  double final_adoption = 0;
};

void write_summary_csv(const std::filesystem::path& path,
                       const std::vector<SummaryRow>& rows);

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t fnv1a64_file(const std::filesystem::path& path);

std::string equilibrium_report_json(const EquilibriumReport& rep);
std::string equilibrium_report_text(const EquilibriumReport& rep);
std::string policy_result_json(const PolicyResult& res, Channel channel);

struct RunRecord {
  std::string label;
  Trajectory trajectory;
  std::optional<SummaryRow> summary;
  std::string report_json;  // verbatim payload for <label>_report.json
};

struct ManifestEntry {
  std::string name;
  std::string fnv1a64;
};

// Hashes the named files (relative to dir) and writes dir/manifest.json.
std::vector<ManifestEntry> write_manifest(const std::filesystem::path& dir,
                                          const std::vector<std::string>& names);

// Writes per-run trajectory/aggregate CSVs, a shared summary.csv, any JSON
// reports, then manifest.json listing every file with its content hash.
std::vector<ManifestEntry> write_outputs(const std::vector<RunRecord>& runs,
                                         const std::filesystem::path& out_dir);

}  // namespace adoptnet
