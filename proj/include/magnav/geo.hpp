#pragma once

#include <Eigen/Core>

namespace magnav {

/// WGS-84 ellipsoid and the simplified earth constants used by the
/// navigation error model.
namespace earth {
inline constexpr double kSemiMajorAxis = 6378137.0;        // m
inline constexpr double kFlattening = 1.0 / 298.257223563;
inline constexpr double kEccentricitySq = kFlattening * (2.0 - kFlattening);
inline constexpr double kGravity = 9.80665;                // m/s^2
inline constexpr double kMeanRadius = 6371000.0;           // m, spherical model
inline constexpr double kRotationRate = 7.292115e-5;       // rad/s
}  // namespace earth

struct GeoPosition {
    double lat = 0.0;     // degrees, [-90, 90]
    double lon = 0.0;     // degrees, [-180, 180]
    double height = 0.0;  // metres above the reference surface
};

/// Throws ConfigError if lat/lon are outside their principal ranges.
void validate(const GeoPosition& g);

/// Equirectangular tangent-plane frame anchored at an origin.
///
/// Per-origin metre-per-degree scale factors are taken from the WGS-84
/// radii of curvature at the origin latitude; the mapping is linear, so
/// round trips are exact to floating point. Positions are (north, east)
/// metres. Adequate well beyond the few-hundred-km spans used here.
class LocalFrame {
public:
    static LocalFrame at(const GeoPosition& origin);

    Eigen::Vector2d to_local(const GeoPosition& g) const {
        return {(g.lat - origin_.lat) * m_per_deg_lat_, (g.lon - origin_.lon) * m_per_deg_lon_};
    }

    GeoPosition from_local(const Eigen::Vector2d& north_east, double height = 0.0) const {
        return {origin_.lat + north_east.x() / m_per_deg_lat_,
                origin_.lon + north_east.y() / m_per_deg_lon_, height};
    }

    const GeoPosition& origin() const { return origin_; }
    double metres_per_deg_lat() const { return m_per_deg_lat_; }
    double metres_per_deg_lon() const { return m_per_deg_lon_; }

private:
    GeoPosition origin_;
    double m_per_deg_lat_ = 0.0;
    double m_per_deg_lon_ = 0.0;
};

}  // namespace magnav
