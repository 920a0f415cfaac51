#pragma once

// CSV emitters and the error-rate ingestion parser.  Every file starts with
// a header row whose column names carry units.  Floats use 17 significant
// digits so files round-trip exactly.

#include "mtjfp/fvm.hpp"
#include "mtjfp/sllgs.hpp"
#include "mtjfp/spectral.hpp"
#include "mtjfp/stats.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace mtjfp {

inline constexpr const char* kErrorRateHeader = "current_A,pulse_s,temp_K,rate,kind,solver";

std::string csv_number(double v);

void write_error_rates(std::ostream& os, const std::vector<ErrorRatePoint>& points);
/// Throws Config naming the line on malformed rows.
std::vector<ErrorRatePoint> read_error_rates(std::istream& is);
std::vector<ErrorRatePoint> read_error_rates_file(const std::string& path);

/// t_s,mx,my,mz
void write_trajectory(std::ostream& os, const std::vector<TrajectorySample>& samples);

/// theta_rad,p_mass,rho_density (rho per unit cos(theta), integrating to 1).
void write_snapshot(std::ostream& os, const GridDistribution& dist);
/// Same columns from a Legendre state, on the given mesh.
void write_snapshot(std::ostream& os, const LegendreState& state, const ThetaMesh& mesh);

/// n,r_n
void write_coefficients(std::ostream& os, const LegendreState& state);

}  // namespace mtjfp
