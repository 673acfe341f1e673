#pragma once

#include <cmath>
#include <string>
#include <vector>

namespace spaceverse {

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kMuKm3PerS2 = 398600.4418;
inline constexpr double kEarthRotationRadPerS = 7.2921159e-5;
inline constexpr double kPi = 3.14159265358979323846;

struct Vec3 {
  double x = 0, y = 0, z = 0;
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

inline Vec3 operator-(const Vec3& a, const Vec3& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}
inline double dot(const Vec3& a, const Vec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

// Circular Keplerian orbit around a spherical Earth. Seeds one satellite of
// the constellation; no perturbations, no drag.
struct OrbitSpec {
  std::string id;
  double altitude_km = 570.0;
  double inclination_deg = 70.0;
  double raan_deg = 0.0;
  double initial_anomaly_deg = 0.0;
  double epoch_s = 0.0;
};

struct GroundStationSpec {
  std::string id;
  double latitude_deg = 0.0;    // [-90, 90]
  double longitude_deg = 0.0;   // [-180, 180]
  double min_elevation_deg = 10.0;  // [0, 90)
};

// Visibility interval for one (satellite, ground station) pair.
struct ContactWindow {
  double start_s = 0;
  double end_s = 0;
  double duration() const { return end_s - start_s; }
};

double orbital_radius_km(const OrbitSpec& orbit);
double orbital_angular_rate(const OrbitSpec& orbit);  // rad/s
double orbital_period_s(const OrbitSpec& orbit);

// Earth-centered inertial position at simulation time t (t >= epoch).
Vec3 propagate(const OrbitSpec& orbit, double t);

// Ground station ECI position; the Earth-fixed frame coincides with the
// inertial frame at t = 0 and rotates at kEarthRotationRadPerS.
Vec3 ground_station_eci(const GroundStationSpec& gs, double t);

// Topocentric elevation of a satellite position above a station's horizon,
// in degrees within [-90, 90].
double elevation_deg(const Vec3& sat_position, const GroundStationSpec& gs,
                     double t);

// Fixed-step scan with bisection refinement of the boundary crossings.
// Returned windows are disjoint, sorted, and clipped to [0, horizon_s].
std::vector<ContactWindow> contact_windows(const OrbitSpec& orbit,
                                           const GroundStationSpec& gs,
                                           double horizon_s, double step_s,
                                           double refine_s = 0.1);

// Union of window lists (e.g. one satellite against several stations),
// overlaps merged.
std::vector<ContactWindow> merge_windows(
    const std::vector<std::vector<ContactWindow>>& lists);

double contact_fraction(const std::vector<ContactWindow>& windows,
                        double horizon_s);

// Windows for every satellite against every station, satellites in parallel.
// Result indexed [satellite][station].
std::vector<std::vector<std::vector<ContactWindow>>> all_contact_windows(
    const std::vector<OrbitSpec>& sats,
    const std::vector<GroundStationSpec>& stations, double horizon_s,
    double step_s, double refine_s = 0.1, int threads = 0);

// Mean over satellites of the merged-window contact fraction, with every
// station's elevation mask overridden to mask_deg.
double mean_contact_fraction(const std::vector<OrbitSpec>& sats,
                             const std::vector<GroundStationSpec>& stations,
                             double mask_deg, double horizon_s, double step_s,
                             int threads = 0);

struct MaskCalibration {
  bool reachable = false;
  double mask_deg = 0.0;
  double fraction = 0.0;      // fraction achieved at mask_deg
  double fraction_lo = 0.0;   // fraction at the 89 deg mask
  double fraction_hi = 0.0;   // fraction at the 0 deg mask
};

// Solves for the elevation mask that yields the target mean contact
// fraction by bisection; the fraction is monotone non-increasing in the
// mask, so the search brackets [0, 89] degrees.
MaskCalibration calibrate_elevation_mask(
    const std::vector<OrbitSpec>& sats,
    const std::vector<GroundStationSpec>& stations, double target_fraction,
    double tolerance, double horizon_s, double step_s, int threads = 0);

}  // namespace spaceverse
