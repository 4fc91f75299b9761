#include "adoptnet/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "adoptnet/errors.hpp"

namespace adoptnet {

namespace {

using ordered_json = nlohmann::ordered_json;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

ordered_json vec_json(const Eigen::VectorXd& v) {
  ordered_json arr = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

std::string join_vec(const Eigen::VectorXd& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += format_double(v[i]);
  }
  return s;
}

ordered_json report_json_obj(const EquilibriumReport& rep) {
  ordered_json j;
  j["kind"] = rep.kind == EquilibriumKind::AdoptionDiffused
                  ? "adoption_diffused"
                  : "adoption_free";
  j["a_star"] = vec_json(rep.a_star);
  j["d_star"] = vec_json(rep.d_star);
  j["x_star"] = vec_json(rep.x_star);
  j["residual"] = rep.residual;
  j["r0_min"] = rep.r0_min;
  j["r0_max"] = rep.r0_max;
  j["threshold_verdict"] = threshold_verdict_name(rep.threshold_verdict);
  j["diffused_exists"] = rep.diffused_exists;
  ordered_json cert;
  cert["certified"] = rep.certificate.certified;
  if (rep.certificate.certified) {
    cert["sigma1"] = rep.certificate.sigma1;
    cert["sigma2"] = rep.certificate.sigma2;
  }
  j["certificate"] = cert;
  if (!rep.note.empty()) j["note"] = rep.note;
  return j;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        std::ostringstream msg;
        msg << path.string() << ":" << lineno << ": not a number: '" << cell
            << "'";
        throw ParseError(msg.str());
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      std::ostringstream msg;
      msg << path.string() << ":" << lineno << ": expected "
          << rows.front().size() << " columns, got " << row.size();
      throw ParseError(msg.str());
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void write_matrix_csv(const std::filesystem::path& path,
                      const Eigen::MatrixXd& m) {
  std::ofstream out = open_out(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
  finish(out, path);
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const Trajectory& traj) {
  std::ofstream out = open_out(path);
  const int n = traj.states.empty() ? 0 : static_cast<int>(traj.states[0].a.size());
  out << 't';
  for (const char* part : {"a", "d", "x", "u"}) {
    for (int i = 1; i <= n; ++i) out << ',' << part << '_' << i;
  }
  out << '\n';
  for (std::size_t t = 0; t < traj.states.size(); ++t) {
    const State& s = traj.states[t];
    out << t;
    out << ',' << join_vec(s.a) << ',' << join_vec(s.d) << ','
        << join_vec(s.x) << ',';
    if (t < traj.controls.size()) {
      out << join_vec(traj.controls[t]);
    } else {
      out << join_vec(Eigen::VectorXd::Zero(n));
    }
    out << '\n';
  }
  finish(out, path);
}

void write_aggregate_csv(const std::filesystem::path& path,
                         const Trajectory& traj) {
  std::ofstream out = open_out(path);
  out << "t,sum_a,sum_d,mean_x\n";
  for (std::size_t t = 0; t < traj.states.size(); ++t) {
    const State& s = traj.states[t];
    const double mean_x = s.x.size() > 0 ? s.x.mean() : 0.0;
    out << t << ',' << format_double(s.a.sum()) << ','
        << format_double(s.d.sum()) << ',' << format_double(mean_x) << '\n';
  }
  finish(out, path);
}

void write_summary_csv(const std::filesystem::path& path,
                       const std::vector<SummaryRow>& rows) {
  std::ofstream out = open_out(path);
  out << "seed,channel,feasible,total_adopters,control_cost,final_adoption\n";
  for (const SummaryRow& r : rows) {
    out << r.seed << ',' << r.channel << ',' << (r.feasible ? 1 : 0) << ','
        << format_double(r.total_adopters) << ','
        << format_double(r.control_cost) << ','
        << format_double(r.final_adoption) << '\n';
  }
  finish(out, path);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for hashing: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a64(ss.str());
}

std::string equilibrium_report_json(const EquilibriumReport& rep) {
  return report_json_obj(rep).dump(2) + "\n";
}

std::string equilibrium_report_text(const EquilibriumReport& rep) {
  std::ostringstream out;
  out << "kind="
      << (rep.kind == EquilibriumKind::AdoptionDiffused ? "adoption_diffused"
                                                        : "adoption_free")
      << '\n';
  out << "a_star=" << join_vec(rep.a_star) << '\n';
  out << "d_star=" << join_vec(rep.d_star) << '\n';
  out << "x_star=" << join_vec(rep.x_star) << '\n';
  out << "residual=" << format_double(rep.residual) << '\n';
  out << "r0_min=" << format_double(rep.r0_min) << '\n';
  out << "r0_max=" << format_double(rep.r0_max) << '\n';
  out << "threshold_verdict=" << threshold_verdict_name(rep.threshold_verdict)
      << '\n';
  out << "diffused_exists=" << (rep.diffused_exists ? "true" : "false")
      << '\n';
  out << "certified=" << (rep.certificate.certified ? "true" : "false")
      << '\n';
  if (rep.certificate.certified) {
    out << "sigma1=" << format_double(rep.certificate.sigma1) << '\n';
    out << "sigma2=" << format_double(rep.certificate.sigma2) << '\n';
  }
  if (!rep.note.empty()) out << "note=" << rep.note << '\n';
  return out.str();
}

std::string policy_result_json(const PolicyResult& res, Channel channel) {
  ordered_json j;
  j["channel"] = channel_name(channel);
  j["feasible"] = res.feasible;
  j["u"] = vec_json(res.u);
  j["cost"] = res.cost;
  j["iterations"] = res.iterations;
  j["kkt_residual"] = res.kkt_residual;
  if (std::isfinite(res.terminal_deviation)) {
    j["terminal_deviation"] = res.terminal_deviation;
  }
  if (!res.U.empty()) {
    ordered_json plan = ordered_json::array();
    for (const Eigen::VectorXd& u : res.U) plan.push_back(vec_json(u));
    j["U"] = plan;
  }
  j["equilibrium"] =
      res.equilibrium ? report_json_obj(*res.equilibrium) : ordered_json();
  if (!res.note.empty()) j["note"] = res.note;
  return j.dump(2) + "\n";
}

std::vector<ManifestEntry> write_manifest(
    const std::filesystem::path& dir, const std::vector<std::string>& names) {
  std::vector<ManifestEntry> entries;
  ordered_json manifest;
  manifest["files"] = ordered_json::array();
  for (const std::string& name : names) {
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64_file(dir / name)));
    entries.push_back({name, hex});
    ordered_json f;
    f["name"] = name;
    f["fnv1a64"] = hex;
    manifest["files"].push_back(f);
  }
  std::ofstream out = open_out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  finish(out, dir / "manifest.json");
  return entries;
}

std::vector<ManifestEntry> write_outputs(
    const std::vector<RunRecord>& runs,
    const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec && !std::filesystem::is_directory(out_dir)) {
    throw IoError("cannot create output directory: " + out_dir.string());
  }

  std::vector<std::string> files;
  std::vector<SummaryRow> summary;
  for (const RunRecord& run : runs) {
    const std::string stem =
        run.label.empty() ? std::string("run") : run.label;
    write_trajectory_csv(out_dir / (stem + "_trajectory.csv"),
                         run.trajectory);
    files.push_back(stem + "_trajectory.csv");
    write_aggregate_csv(out_dir / (stem + "_aggregate.csv"), run.trajectory);
    files.push_back(stem + "_aggregate.csv");
    if (!run.report_json.empty()) {
      std::ofstream out = open_out(out_dir / (stem + "_report.json"));
      out << run.report_json;
      finish(out, out_dir / (stem + "_report.json"));
      files.push_back(stem + "_report.json");
    }
    if (run.summary) summary.push_back(*run.summary);
  }
  if (!summary.empty()) {
    write_summary_csv(out_dir / "summary.csv", summary);
    files.push_back("summary.csv");
  }
  return write_manifest(out_dir, files);
}

}  // namespace adoptnet
