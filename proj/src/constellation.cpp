#include "spaceverse/constellation.hpp"

#include "spaceverse/parallel.hpp"

#include <algorithm>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace spaceverse {

namespace {
constexpr double kDegToRad = kPi / 180.0;
constexpr double kRadToDeg = 180.0 / kPi;
}  // namespace

double orbital_radius_km(const OrbitSpec& orbit) {
  return kEarthRadiusKm + orbit.altitude_km;
}

double orbital_angular_rate(const OrbitSpec& orbit) {
  const double a = orbital_radius_km(orbit);
  return std::sqrt(kMuKm3PerS2 / (a * a * a));
}

double orbital_period_s(const OrbitSpec& orbit) {
  return 2.0 * kPi / orbital_angular_rate(orbit);
}

Vec3 propagate(const OrbitSpec& orbit, double t) {
  const double a = orbital_radius_km(orbit);
  const double u = orbit.initial_anomaly_deg * kDegToRad +
                   orbital_angular_rate(orbit) * (t - orbit.epoch_s);
  const double i = orbit.inclination_deg * kDegToRad;
  const double raan = orbit.raan_deg * kDegToRad;
  // Rotate the in-plane position (a cos u, a sin u, 0) by inclination about
  // x, then by RAAN about z.
  const double cu = std::cos(u), su = std::sin(u);
  const double ci = std::cos(i), si = std::sin(i);
  const double co = std::cos(raan), so = std::sin(raan);
  return Vec3{a * (co * cu - so * su * ci), a * (so * cu + co * su * ci),
              a * (su * si)};
}

Vec3 ground_station_eci(const GroundStationSpec& gs, double t) {
  const double lat = gs.latitude_deg * kDegToRad;
  const double lon = gs.longitude_deg * kDegToRad + kEarthRotationRadPerS * t;
  const double cl = std::cos(lat);
  return Vec3{kEarthRadiusKm * cl * std::cos(lon),
              kEarthRadiusKm * cl * std::sin(lon),
              kEarthRadiusKm * std::sin(lat)};
}

double elevation_deg(const Vec3& sat_position, const GroundStationSpec& gs,
                     double t) {
  const Vec3 site = ground_station_eci(gs, t);
  const Vec3 los = sat_position - site;
  const double los_norm = los.norm();
  if (los_norm == 0.0) return 90.0;
  // sin(elevation) = los_hat . zenith_hat; valid at the poles as well since
  // no east/north basis is needed.
  double s = dot(los, site) / (los_norm * site.norm());
  s = std::clamp(s, -1.0, 1.0);
  return std::asin(s) * kRadToDeg;
}

namespace {

double elevation_at(const OrbitSpec& orbit, const GroundStationSpec& gs,
                    double t) {
  return elevation_deg(propagate(orbit, t), gs, t);
}

// Bisects a rise/set crossing inside (lo, hi] where visible(lo) != visible(hi).
double refine_crossing(const OrbitSpec& orbit, const GroundStationSpec& gs,
                       double lo, double hi, bool lo_visible, double refine_s) {
  while (hi - lo > refine_s) {
    const double mid = 0.5 * (lo + hi);
    const bool mid_visible = elevation_at(orbit, gs, mid) >= gs.min_elevation_deg;
    if (mid_visible == lo_visible)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::vector<ContactWindow> contact_windows(const OrbitSpec& orbit,
                                           const GroundStationSpec& gs,
                                           double horizon_s, double step_s,
                                           double refine_s) {
  if (step_s <= 0.0) throw std::invalid_argument("step_s must be positive");
  if (horizon_s <= 0.0) throw std::invalid_argument("horizon_s must be positive");

  std::vector<ContactWindow> windows;
  bool visible = elevation_at(orbit, gs, 0.0) >= gs.min_elevation_deg;
  double window_start = visible ? 0.0 : -1.0;
  double prev = 0.0;
  for (double t = step_s; prev < horizon_s; t += step_s) {
    const double now = std::min(t, horizon_s);
    const bool now_visible = elevation_at(orbit, gs, now) >= gs.min_elevation_deg;
    if (now_visible != visible) {
      const double crossing =
          refine_crossing(orbit, gs, prev, now, visible, refine_s);
      if (now_visible) {
        window_start = crossing;
      } else {
        windows.push_back({window_start, crossing});
        window_start = -1.0;
      }
      visible = now_visible;
    }
    prev = now;
  }
  if (visible && window_start >= 0.0 && window_start < horizon_s)
    windows.push_back({window_start, horizon_s});
  return windows;
}

std::vector<ContactWindow> merge_windows(
    const std::vector<std::vector<ContactWindow>>& lists) {
  std::vector<ContactWindow> all;
  for (const auto& list : lists) all.insert(all.end(), list.begin(), list.end());
  std::sort(all.begin(), all.end(), [](const ContactWindow& a, const ContactWindow& b) {
    return a.start_s < b.start_s;
  });
  std::vector<ContactWindow> merged;
  for (const auto& w : all) {
    if (!merged.empty() && w.start_s <= merged.back().end_s)
      merged.back().end_s = std::max(merged.back().end_s, w.end_s);
    else
      merged.push_back(w);
  }
  return merged;
}

double contact_fraction(const std::vector<ContactWindow>& windows,
                        double horizon_s) {
  if (horizon_s <= 0.0) return 0.0;
  double total = 0.0;
  for (const auto& w : windows) total += w.duration();
  return total / horizon_s;
}

std::vector<std::vector<std::vector<ContactWindow>>> all_contact_windows(
    const std::vector<OrbitSpec>& sats,
    const std::vector<GroundStationSpec>& stations, double horizon_s,
    double step_s, double refine_s, int threads) {
  std::vector<std::vector<std::vector<ContactWindow>>> result(sats.size());
  const int n = int(sats.size());
  const int nt = resolve_threads(threads);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt)
#endif
  for (int s = 0; s < n; ++s) {
    result[std::size_t(s)].resize(stations.size());
    for (std::size_t g = 0; g < stations.size(); ++g)
      result[std::size_t(s)][g] =
          contact_windows(sats[std::size_t(s)], stations[g], horizon_s, step_s,
                          refine_s);
  }
  (void)nt;
  return result;
}

double mean_contact_fraction(const std::vector<OrbitSpec>& sats,
                             const std::vector<GroundStationSpec>& stations,
                             double mask_deg, double horizon_s, double step_s,
                             int threads) {
  std::vector<GroundStationSpec> masked = stations;
  for (auto& gs : masked) gs.min_elevation_deg = mask_deg;
  const auto windows =
      all_contact_windows(sats, masked, horizon_s, step_s, 0.1, threads);
  double sum = 0.0;
  for (const auto& per_station : windows)
    sum += contact_fraction(merge_windows(per_station), horizon_s);
  return sats.empty() ? 0.0 : sum / double(sats.size());
}

MaskCalibration calibrate_elevation_mask(
    const std::vector<OrbitSpec>& sats,
    const std::vector<GroundStationSpec>& stations, double target_fraction,
    double tolerance, double horizon_s, double step_s, int threads) {
  MaskCalibration cal;
  auto fraction_at = [&](double mask) {
    return mean_contact_fraction(sats, stations, mask, horizon_s, step_s,
                                 threads);
  };
  double lo = 0.0, hi = 89.0;
  cal.fraction_hi = fraction_at(lo);
  cal.fraction_lo = fraction_at(hi);
  if (target_fraction > cal.fraction_hi) {
    cal.reachable = false;
    cal.mask_deg = lo;
    cal.fraction = cal.fraction_hi;
    return cal;
  }
  if (target_fraction <= cal.fraction_lo) {
    // The 89 deg bound already meets or undershoots the target.
    cal.reachable = true;
    cal.mask_deg = hi;
    cal.fraction = cal.fraction_lo;
    return cal;
  }
  double f_mid = cal.fraction_hi;
  double mid = lo;
  for (int iter = 0; iter < 40; ++iter) {
    mid = 0.5 * (lo + hi);
    f_mid = fraction_at(mid);
    if (std::abs(f_mid - target_fraction) <= 0.5 * tolerance) break;
    if (f_mid > target_fraction)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-4) break;
  }
  cal.reachable = std::abs(f_mid - target_fraction) <= tolerance;
  cal.mask_deg = mid;
  cal.fraction = f_mid;
  return cal;
}

}  // namespace spaceverse
