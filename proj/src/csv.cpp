#include "mtjfp/csv.hpp"

#include "mtjfp/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace mtjfp {

std::string csv_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_error_rates(std::ostream& os, const std::vector<ErrorRatePoint>& points) {
  os << kErrorRateHeader << "\n";
  for (const auto& p : points) {
    os << csv_number(p.current) << ',' << csv_number(p.pulse_width) << ','
       << csv_number(p.temperature) << ',' << csv_number(p.rate) << ',' << to_string(p.kind)
       << ',' << to_string(p.source) << "\n";
  }
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double number(const std::string& s, int line, const char* column) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(Errc::Config, "line " + std::to_string(line) + ": column " + column +
                                  ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

std::vector<ErrorRatePoint> read_error_rates(std::istream& is) {
  std::string line;
  int n = 0;
  std::vector<ErrorRatePoint> out;
  bool header = false;
  while (std::getline(is, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != kErrorRateHeader) {
        throw Error(Errc::Config, "line " + std::to_string(n) + ": expected header '" +
                                      kErrorRateHeader + "'");
      }
      header = true;
      continue;
    }
    const auto c = split(line);
    if (c.size() != 6) {
      throw Error(Errc::Config, "line " + std::to_string(n) + ": expected 6 columns, found " +
                                    std::to_string(c.size()));
    }
    ErrorRatePoint p;
    p.current = number(c[0], n, "current_A");
    p.pulse_width = number(c[1], n, "pulse_s");
    p.temperature = number(c[2], n, "temp_K");
    p.rate = number(c[3], n, "rate");
    try {
      p.kind = parse_rate_kind(c[4]);
      p.source = parse_solver_kind(c[5]);
    } catch (const Error& e) {
      throw Error(Errc::Config, "line " + std::to_string(n) + ": " + e.detail());
    }
    if (!(p.rate > 0.0 && p.rate < 1.0)) {
      throw Error(Errc::Config, "line " + std::to_string(n) + ": rate must lie in (0, 1)");
    }
    if (!(p.pulse_width > 0.0) || !std::isfinite(p.pulse_width)) {
      throw Error(Errc::Config, "line " + std::to_string(n) + ": pulse_s must be > 0");
    }
    if (!(p.temperature > 0.0)) {
      throw Error(Errc::Config, "line " + std::to_string(n) + ": temp_K must be > 0");
    }
    out.push_back(p);
  }
  if (!header) throw Error(Errc::Config, "missing header '" + std::string(kErrorRateHeader) + "'");
  return out;
}

std::vector<ErrorRatePoint> read_error_rates_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Config, "cannot open data file '" + path + "'");
  try {
    return read_error_rates(in);
  } catch (const Error& e) {
    throw Error(Errc::Config, path + ": " + e.detail());
  }
}

void write_trajectory(std::ostream& os, const std::vector<TrajectorySample>& samples) {
  os << "t_s,mx,my,mz\n";
  for (const auto& s : samples) {
    os << csv_number(s.t) << ',' << csv_number(s.m.x()) << ',' << csv_number(s.m.y()) << ','
       << csv_number(s.m.z()) << "\n";
  }
}

namespace {

void snapshot_rows(std::ostream& os, const ThetaMesh& mesh, const std::vector<double>& masses) {
  os << "theta_rad,p_mass,rho_density\n";
  const auto& f = mesh.faces();
  for (std::size_t k = 0; k < mesh.size(); ++k) {
    const double dx = std::cos(f[k]) - std::cos(f[k + 1]);
    os << csv_number(mesh.centers()[k]) << ',' << csv_number(masses[k]) << ','
       << csv_number(masses[k] / dx) << "\n";
  }
}

}  // namespace

void write_snapshot(std::ostream& os, const GridDistribution& dist) {
  snapshot_rows(os, dist.mesh, dist.p);
}

void write_snapshot(std::ostream& os, const LegendreState& state, const ThetaMesh& mesh) {
  snapshot_rows(os, mesh, reconstruct_cell_masses(state, mesh));
}

void write_coefficients(std::ostream& os, const LegendreState& state) {
  os << "n,r_n\n";
  for (int n = 0; n <= state.order(); ++n) os << n << ',' << csv_number(state.r(n)) << "\n";
}

}  // namespace mtjfp
