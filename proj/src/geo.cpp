#include "magnav/geo.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "magnav/errors.hpp"

namespace magnav {

void validate(const GeoPosition& g) {
    if (!(g.lat >= -90.0 && g.lat <= 90.0)) {
        throw ConfigError("latitude " + std::to_string(g.lat) + " outside [-90, 90]");
    }
    if (!(g.lon >= -180.0 && g.lon <= 180.0)) {
        throw ConfigError("longitude " + std::to_string(g.lon) + " outside [-180, 180]");
    }
    if (!std::isfinite(g.height)) {
        throw ConfigError("non-finite height");
    }
}

LocalFrame LocalFrame::at(const GeoPosition& origin) {
    validate(origin);
    const double deg = std::numbers::pi / 180.0;
    const double phi = origin.lat * deg;
    const double s2 = std::sin(phi) * std::sin(phi);
    const double w = std::sqrt(1.0 - earth::kEccentricitySq * s2);
    // Meridional and prime-vertical radii of curvature at the origin.
    const double rm = earth::kSemiMajorAxis * (1.0 - earth::kEccentricitySq) / (w * w * w);
    const double rn = earth::kSemiMajorAxis / w;

    LocalFrame f;
    f.origin_ = origin;
    f.m_per_deg_lat_ = rm * deg;
    f.m_per_deg_lon_ = rn * std::cos(phi) * deg;
    return f;
}

}  // namespace magnav
