#include <doctest.h>

#include <cmath>
#include <vector>

#include "magnav/errors.hpp"
#include "magnav/map_quality.hpp"
#include "magnav/rng.hpp"

using magnav::MapGrid;
using magnav::SearchWindow;
using magnav::SweepParams;
using magnav::SyntheticMapSpec;

namespace {

MapGrid random_map(int n_rows, int n_cols, double cell, std::uint64_t seed,
                   double nodata = MapGrid::kDefaultNodata) {
    magnav::Rng rng(seed);
    std::vector<double> v(static_cast<std::size_t>(n_rows) * n_cols);
    for (auto& x : v) x = rng.uniform(-300.0, 300.0);
    return MapGrid({47.0, 9.0, 0.0}, cell, n_rows, n_cols, std::move(v), nodata);
}

// Brute-force feature variability, written independently of the library loop.
double mfv_cell(const MapGrid& map, const std::vector<std::pair<int, int>>& offs, int r, int c) {
    double sum = 0.0;
    int n = 0;
    for (const auto& [dr, dc] : offs) {
        const int rr = r + dr, cc = c + dc;
        if (rr < 0 || rr >= map.n_rows() || cc < 0 || cc >= map.n_cols()) continue;
        if (map.is_nodata(rr, cc)) continue;
        sum += std::pow(map.value(r, c) - map.value(rr, cc), 2);
        ++n;
    }
    return n > 0 ? sum / n : map.nodata();
}

}  // namespace

TEST_CASE("window offsets quantize the ellipse and reject degenerate windows") {
    const SearchWindow w = SearchWindow::circular(15.0);
    const auto offs = w.offsets(10.0);
    CHECK(offs.size() == 8);  // rook and diagonal neighbours at 10 and 14.1 m
    for (const auto& [dr, dc] : offs) {
        CHECK(std::hypot(dr * 10.0, dc * 10.0) <= 15.0 + 1e-9);
        CHECK((dr != 0 || dc != 0));
    }
    CHECK_THROWS_AS(SearchWindow::circular(5.0).offsets(10.0), magnav::ConfigError);
}

TEST_CASE("mfv of a constant map is zero") {
    std::vector<double> v(64, 123.4);
    const MapGrid map({0, 0, 0}, 10.0, 8, 8, v);
    const MapGrid raster = magnav::mfv(map, SearchWindow::circular(25.0));
    CHECK(raster.min_value() == 0.0);
    CHECK(raster.max_value() == 0.0);
    CHECK(raster.nodata_count() == 0);
}

TEST_CASE("mfv of an isolated spike is four a squared") {
    const double a = 7.0;
    std::vector<double> v(25, -a);
    v[2 * 5 + 2] = a;
    const MapGrid map({0, 0, 0}, 10.0, 5, 5, v);
    const MapGrid raster = magnav::mfv(map, SearchWindow::circular(15.0));
    CHECK(raster.value(2, 2) == doctest::Approx(4.0 * a * a));
}

TEST_CASE("mfv equals the brute-force double loop, edges truncated") {
    MapGrid map = random_map(10, 10, 20.0, 21, -9999.0);
    // Punch in a nodata hole away from the borders.
    std::vector<double> v = map.values();
    v[4 * 10 + 6] = -9999.0;
    map = MapGrid(map.origin(), map.cell_size(), 10, 10, std::move(v), -9999.0);

    const SearchWindow w = SearchWindow::circular(45.0);
    const auto offs = w.offsets(map.cell_size());
    const MapGrid raster = magnav::mfv(map, w);

    for (int r = 0; r < 10; ++r) {
        for (int c = 0; c < 10; ++c) {
            CAPTURE(r);
            CAPTURE(c);
            if (map.is_nodata(r, c)) {
                CHECK(raster.is_nodata(r, c));
            } else {
                CHECK(raster.value(r, c) == doctest::Approx(mfv_cell(map, offs, r, c)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("mfv shifts with neither offset nor sign, scales quadratically") {
    const MapGrid base = random_map(9, 9, 15.0, 3);
    const SearchWindow w = SearchWindow::circular(40.0);
    const MapGrid r0 = magnav::mfv(base, w);

    std::vector<double> shifted = base.values();
    for (auto& x : shifted) x += 5000.0;
    const MapGrid r1 = magnav::mfv(MapGrid(base.origin(), 15.0, 9, 9, shifted), w);

    std::vector<double> scaled = base.values();
    for (auto& x : scaled) x *= -2.5;
    const MapGrid r2 = magnav::mfv(MapGrid(base.origin(), 15.0, 9, 9, scaled), w);

    for (int r = 0; r < 9; ++r) {
        for (int c = 0; c < 9; ++c) {
            CHECK(r1.value(r, c) == doctest::Approx(r0.value(r, c)).epsilon(1e-6).scale(1.0));
            CHECK(r2.value(r, c) == doctest::Approx(6.25 * r0.value(r, c)).epsilon(1e-9));
        }
    }
}

TEST_CASE("normalization rescales to a unit maximum and keeps nodata") {
    MapGrid map = random_map(6, 6, 10.0, 11, -1.0);
    std::vector<double> v = map.values();
    for (auto& x : v) x = std::abs(x) + 1.0;  // strictly positive
    v[7] = -1.0;                              // nodata
    map = MapGrid(map.origin(), 10.0, 6, 6, std::move(v), -1.0);

    const MapGrid norm = magnav::normalized(map);
    CHECK(norm.max_value() == doctest::Approx(1.0));
    CHECK(norm.min_value() > 0.0);
    CHECK(norm.is_nodata(1, 1));
    for (int r = 0; r < 6; ++r) {
        for (int c = 0; c < 6; ++c) {
            if (map.is_nodata(r, c)) continue;
            CHECK(norm.value(r, c) == doctest::Approx(map.value(r, c) / map.max_value()));
        }
    }

    std::vector<double> zeros(16, 0.0);
    const MapGrid z({0, 0, 0}, 10.0, 4, 4, zeros);
    const MapGrid nz = magnav::normalized(z);
    CHECK(nz.max_value() == 0.0);
}

TEST_CASE("error map is near zero at vanishing noise on an injective map") {
    std::vector<double> v(64);
    for (int i = 0; i < 64; ++i) v[i] = 3.0 * i;
    const MapGrid map({0, 0, 0}, 50.0, 8, 8, v);
    const Eigen::Matrix2d prior_cov = 10000.0 * Eigen::Matrix2d::Identity();
    const MapGrid raster = magnav::pda_error_map(map, 1e-6, prior_cov, 9.21, 3.0, 20, 5);
    CHECK(raster.nodata_count() == 0);
    for (int r = 0; r < 8; ++r) {
        for (int c = 0; c < 8; ++c) {
            CHECK(raster.value(r, c) <= map.cell_size() / std::sqrt(2.0));
        }
    }
}

TEST_CASE("error map on a constant map matches an independent weight oracle") {
    std::vector<double> v(121, 50.0);
    const double cell = 30.0;
    const MapGrid map({0, 0, 0}, cell, 11, 11, v);
    const double ps = 60.0;
    const Eigen::Matrix2d prior_cov = ps * ps * Eigen::Matrix2d::Identity();
    const double gamma = 9.21, kappa = 3.0, sigma = 1.0;
    const MapGrid raster = magnav::pda_error_map(map, sigma, prior_cov, gamma, kappa, 4, 17);

    // All candidates share the same value and the same (clamped) R, so the
    // fix depends only on the prior geometry; noise draws do not matter.
    const double r_hi = gamma * ps * ps;  // flat map clamps to the window scale
    for (int r = 0; r < 11; ++r) {
        for (int c = 0; c < 11; ++c) {
            const Eigen::Vector2d truth = map.cell_center(r, c);
            Eigen::Vector2d num = Eigen::Vector2d::Zero();
            double den = 0.0;
            for (int rr = 0; rr < 11; ++rr) {
                for (int cc = 0; cc < 11; ++cc) {
                    const Eigen::Vector2d z = map.cell_center(rr, cc);
                    const Eigen::Vector2d d = z - truth;
                    if (d.squaredNorm() / (ps * ps) > gamma) continue;
                    const double s2 = ps * ps + r_hi;
                    const double w = std::exp(-0.5 * d.squaredNorm() / s2) / s2;
                    num += w * z;
                    den += w;
                }
            }
            const double expect = (num / den - truth).norm();
            CAPTURE(r);
            CAPTURE(c);
            CHECK(raster.value(r, c) == doctest::Approx(expect).epsilon(1e-9).scale(1.0));
        }
    }
}

TEST_CASE("error map is deterministic and keeps nodata holes") {
    MapGrid map = random_map(9, 9, 40.0, 31, -9999.0);
    std::vector<double> v = map.values();
    v[40] = -9999.0;
    map = MapGrid(map.origin(), 40.0, 9, 9, std::move(v), -9999.0);

    const Eigen::Matrix2d prior_cov = 6400.0 * Eigen::Matrix2d::Identity();
    const MapGrid a = magnav::pda_error_map(map, 30.0, prior_cov, 9.21, 3.0, 25, 42);
    const MapGrid b = magnav::pda_error_map(map, 30.0, prior_cov, 9.21, 3.0, 25, 42);
    CHECK(a.values() == b.values());
    CHECK(a.is_nodata(4, 4));

    const MapGrid c = magnav::pda_error_map(map, 30.0, prior_cov, 9.21, 3.0, 25, 43);
    CHECK(a.values() != c.values());
}

TEST_CASE("sweep is deterministic and counts its successful samples") {
    SyntheticMapSpec spec;
    spec.n_rows = 96;
    spec.n_cols = 96;
    spec.cell_size = 85.0;
    spec.amplitude = 150.0;
    spec.base_correlation_cells = 2.0;
    spec.seed = 9;
    const MapGrid map = magnav::synthetic_tmi_map(spec);

    SweepParams p;
    p.sigmas = {0.5, 5.0};
    p.factors = {1, 4};
    p.n_samples = 60;
    p.seed = 12;
    p.prior_sigma = 300.0;

    const auto a = magnav::noise_resolution_sweep(map, p);
    const auto b = magnav::noise_resolution_sweep(map, p);
    REQUIRE(a.size() == 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].sigma == b[i].sigma);
        CHECK(a[i].factor == b[i].factor);
        CHECK(a[i].mean_error == b[i].mean_error);
        CHECK(a[i].std_error == b[i].std_error);
        CHECK(a[i].n_samples == b[i].n_samples);
        CHECK(a[i].n_samples > 50);  // the value gate keeps the truth cell 99.7% of the time
        CHECK(a[i].mean_error >= 0.0);
    }
}

TEST_CASE("coarser grids cannot beat the original at fixed noise") {
    // Smooth relative to the search window: the level contour through each
    // sample point is thin and straight, so grid quantization is what
    // limits accuracy and the resolution ordering is visible.
    SyntheticMapSpec spec;
    spec.n_rows = 96;
    spec.n_cols = 96;
    spec.cell_size = 85.0;
    spec.amplitude = 150.0;
    spec.base_correlation_cells = 6.0;
    spec.octaves = 3;
    spec.persistence = 2.0;
    spec.seed = 4;
    const MapGrid map = magnav::synthetic_tmi_map(spec);

    SweepParams p;
    p.sigmas = {0.01, 1.0};
    p.factors = {1, 6};
    p.n_samples = 300;
    p.seed = 77;
    p.prior_sigma = 200.0;
    const auto rows = magnav::noise_resolution_sweep(map, p);
    REQUIRE(rows.size() == 4);

    // Rows come out sigma-major: (s0 f1), (s0 f6), (s1 f1), (s1 f6).
    CHECK(rows[1].mean_error > rows[0].mean_error);
    CHECK(rows[3].mean_error > rows[2].mean_error);
    // Sub-cell accuracy on the original grid at tiny noise.
    CHECK(rows[0].mean_error < map.cell_size());
}

TEST_CASE("sweep rejects unusable configurations") {
    const MapGrid map = random_map(16, 16, 20.0, 2);
    SweepParams p;
    p.sigmas = {};
    p.factors = {1};
    CHECK_THROWS_AS(magnav::noise_resolution_sweep(map, p), magnav::ConfigError);
    p.sigmas = {1.0};
    p.factors = {};
    CHECK_THROWS_AS(magnav::noise_resolution_sweep(map, p), magnav::ConfigError);
    p.factors = {1};
    p.prior_sigma = 1000.0;  // margin swallows the whole 320 m map
    CHECK_THROWS_AS(magnav::noise_resolution_sweep(map, p), magnav::ConfigError);
}

TEST_CASE("synthetic map hits its requested moments and is reproducible") {
    SyntheticMapSpec spec;
    spec.n_rows = 128;
    spec.n_cols = 128;
    spec.cell_size = 100.0;
    spec.amplitude = 200.0;
    spec.seed = 1234;

    const MapGrid a = magnav::synthetic_tmi_map(spec);
    const MapGrid b = magnav::synthetic_tmi_map(spec);
    CHECK(a.values() == b.values());
    CHECK(a.n_rows() == 128);
    CHECK(a.cell_size() == 100.0);
    CHECK(a.nodata_count() == 0);

    double mean = 0.0;
    for (double v : a.values()) mean += v;
    mean /= static_cast<double>(a.values().size());
    double var = 0.0;
    for (double v : a.values()) var += (v - mean) * (v - mean);
    var /= static_cast<double>(a.values().size());
    CHECK(std::abs(mean) < 1e-8);
    CHECK(std::sqrt(var) == doctest::Approx(200.0).epsilon(1e-6));

    spec.seed = 99;
    const MapGrid c = magnav::synthetic_tmi_map(spec);
    CHECK(a.values() != c.values());
}

TEST_CASE("synthetic ramp tilts the field northwards") {
    SyntheticMapSpec spec;
    spec.n_rows = 64;
    spec.n_cols = 64;
    spec.cell_size = 100.0;
    spec.amplitude = 10.0;
    spec.ramp_north = 500.0;  // nT per km, dwarfs the stochastic part
    spec.seed = 6;
    const MapGrid map = magnav::synthetic_tmi_map(spec);

    double south = 0.0, north = 0.0;
    for (int c = 0; c < 64; ++c) {
        south += map.value(0, c);
        north += map.value(63, c);
    }
    // 63 cells apart = 6.3 km; the ramp alone contributes 3150 nT.
    CHECK((north - south) / 64.0 > 2000.0);
}

TEST_CASE("larger correlation lengths produce smoother fields") {
    SyntheticMapSpec rough;
    rough.n_rows = 96;
    rough.n_cols = 96;
    rough.amplitude = 100.0;
    rough.base_correlation_cells = 1.0;
    rough.octaves = 1;
    rough.seed = 8;
    SyntheticMapSpec smooth = rough;
    smooth.base_correlation_cells = 8.0;

    const SearchWindow w = SearchWindow::circular(200.0);
    const MapGrid mr = magnav::mfv(magnav::synthetic_tmi_map(rough), w);
    const MapGrid ms = magnav::mfv(magnav::synthetic_tmi_map(smooth), w);

    auto mean_of = [](const MapGrid& g) {
        double m = 0.0;
        for (double v : g.values()) m += v;
        return m / static_cast<double>(g.values().size());
    };
    CHECK(mean_of(ms) < 0.5 * mean_of(mr));
}
