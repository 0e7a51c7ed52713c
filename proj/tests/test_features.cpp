#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bedrec/errors.hpp"
#include "bedrec/features.hpp"
#include "bedrec/rng.hpp"
#include "test_util.hpp"

using namespace bedrec;

namespace {

// Independent index-by-index stencil oracle for the finite differences.
std::pair<std::vector<double>, std::vector<double>> gradient_oracle(const RasterGrid& g) {
    std::vector<double> gx(g.cell_count()), gy(g.cell_count());
    for (int r = 0; r < g.height; ++r) {
        for (int c = 0; c < g.width; ++c) {
            const std::size_t i = g.index(r, c);
            const int cl = c == 0 ? 0 : c - 1;
            const int cr = c == g.width - 1 ? g.width - 1 : c + 1;
            gx[i] = (g.at(r, cr) - g.at(r, cl)) / static_cast<double>(cr - cl);
            const int ru = r == 0 ? 0 : r - 1;
            const int rd = r == g.height - 1 ? g.height - 1 : r + 1;
            gy[i] = (g.at(rd, c) - g.at(ru, c)) / static_cast<double>(rd - ru);
        }
    }
    return {gx, gy};
}

// Gauss-Jordan normal-equations oracle for the trend fit, coded separately
// from the Cholesky path in the library.
std::vector<double> trend_oracle(const RasterGrid& g, int degree) {
    std::vector<std::pair<int, int>> exps;
    for (int i = 0; i <= degree; ++i) {
        for (int j = 0; j + i <= degree; ++j) exps.emplace_back(i, j);
    }
    const std::size_t m = exps.size();
    std::vector<double> normal(m * m, 0.0), rhs(m, 0.0), row(m);
    for (int r = 0; r < g.height; ++r) {
        const double y = g.height > 1 ? 2.0 * r / (g.height - 1) - 1.0 : 0.0;
        for (int c = 0; c < g.width; ++c) {
            if (!g.valid(r, c)) continue;
            const double x = g.width > 1 ? 2.0 * c / (g.width - 1) - 1.0 : 0.0;
            for (std::size_t t = 0; t < m; ++t) {
                row[t] = std::pow(x, exps[t].first) * std::pow(y, exps[t].second);
            }
            for (std::size_t i = 0; i < m; ++i) {
                rhs[i] += row[i] * g.at(r, c);
                for (std::size_t j = 0; j < m; ++j) normal[i * m + j] += row[i] * row[j];
            }
        }
    }
    // Gauss-Jordan with partial pivoting.
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t pivot = col;
        for (std::size_t r2 = col + 1; r2 < m; ++r2) {
            if (std::abs(normal[r2 * m + col]) > std::abs(normal[pivot * m + col])) pivot = r2;
        }
        for (std::size_t j = 0; j < m; ++j) std::swap(normal[col * m + j], normal[pivot * m + j]);
        std::swap(rhs[col], rhs[pivot]);
        const double d = normal[col * m + col];
        for (std::size_t j = 0; j < m; ++j) normal[col * m + j] /= d;
        rhs[col] /= d;
        for (std::size_t r2 = 0; r2 < m; ++r2) {
            if (r2 == col) continue;
            const double f = normal[r2 * m + col];
            for (std::size_t j = 0; j < m; ++j) normal[r2 * m + j] -= f * normal[col * m + j];
            rhs[r2] -= f * rhs[col];
        }
    }
    return rhs;
}

RegionDataset tiny_region(int h, int w, std::uint64_t seed) {
    RegionDataset region;
    for (std::size_t f = 0; f < region.features.size(); ++f) {
        region.features[f] = testutil::random_grid(h, w, seed + f, -3.0, 3.0);
    }
    region.ref_bed = testutil::random_grid(h, w, seed + 50, -100.0, 100.0);
    region.radar_values = RasterGrid(h, w, 0.0);
    region.radar_mask.assign(region.radar_values.cell_count(), 0);
    return region;
}

}  // namespace

TEST_CASE("standardize maps {1,3} to {-1,1}") {
    RasterGrid g(1, 2);
    g.values = {1.0, 3.0};
    StandardizeResult res = standardize(g);
    CHECK(res.mean == doctest::Approx(2.0));
    CHECK(res.stddev == doctest::Approx(1.0));
    CHECK(res.field.values[0] == doctest::Approx(-1.0));
    CHECK(res.field.values[1] == doctest::Approx(1.0));
}

TEST_CASE("standardize guards degenerate spread") {
    RasterGrid g(3, 3, 7.0);
    StandardizeResult res = standardize(g);
    CHECK(res.stddev == 1.0);
    for (double v : res.field.values) CHECK(v == 0.0);
}

TEST_CASE("standardize output has mean 0 and std 1 over valid cells") {
    RasterGrid g = testutil::random_grid(12, 9, 3, -40.0, 90.0);
    g.valid_mask[5] = 0;
    g.valid_mask[61] = 0;
    StandardizeResult res = standardize(g);
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < g.cell_count(); ++i) {
        if (!g.valid_mask[i]) continue;
        sum += res.field.values[i];
        sq += res.field.values[i] * res.field.values[i];
        ++n;
    }
    const double mean = sum / static_cast<double>(n);
    CHECK(std::abs(mean) < 1e-10);
    CHECK(std::abs(std::sqrt(sq / static_cast<double>(n) - mean * mean) - 1.0) < 1e-10);
}

TEST_CASE("standardize with no valid cells raises EmptyInputError") {
    RasterGrid g(2, 2, 1.0);
    std::fill(g.valid_mask.begin(), g.valid_mask.end(), 0);
    CHECK_THROWS_AS(standardize(g), EmptyInputError);
}

TEST_CASE("gradients of a constant field vanish") {
    RasterGrid g(5, 6, 3.5);
    Gradients grad = compute_gradients(g);
    for (double v : grad.gx.values) CHECK(v == 0.0);
    for (double v : grad.gy.values) CHECK(v == 0.0);
}

TEST_CASE("gradients of a column ramp are unit in x, zero in y") {
    RasterGrid g(4, 5);
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 5; ++c) g.at(r, c) = static_cast<double>(c);
    }
    Gradients grad = compute_gradients(g);
    for (double v : grad.gx.values) CHECK(v == doctest::Approx(1.0));
    for (double v : grad.gy.values) CHECK(v == 0.0);
}

TEST_CASE("gradients match the stencil oracle exactly on a random 8x8 field") {
    RasterGrid g = testutil::random_grid(8, 8, 17, -5.0, 5.0);
    Gradients grad = compute_gradients(g);
    const auto [gx, gy] = gradient_oracle(g);
    for (std::size_t i = 0; i < g.cell_count(); ++i) {
        CHECK(grad.gx.values[i] == gx[i]);
        CHECK(grad.gy.values[i] == gy[i]);
    }
}

TEST_CASE("degenerate grid shapes raise ShapeError") {
    CHECK_THROWS_AS(compute_gradients(RasterGrid(1, 8, 0.0)), ShapeError);
    CHECK_THROWS_AS(compute_gradients(RasterGrid(8, 1, 0.0)), ShapeError);
}

TEST_CASE("gradient operator is linear") {
    RasterGrid f = testutil::random_grid(7, 7, 23);
    RasterGrid g = testutil::random_grid(7, 7, 29);
    const double a = 2.5, b = -0.75;
    RasterGrid combo(7, 7);
    for (std::size_t i = 0; i < combo.cell_count(); ++i) {
        combo.values[i] = a * f.values[i] + b * g.values[i];
    }
    Gradients gf = compute_gradients(f);
    Gradients gg = compute_gradients(g);
    Gradients gc = compute_gradients(combo);
    for (std::size_t i = 0; i < combo.cell_count(); ++i) {
        CHECK(gc.gx.values[i] ==
              doctest::Approx(a * gf.gx.values[i] + b * gg.gx.values[i]).epsilon(1e-12));
        CHECK(gc.gy.values[i] ==
              doctest::Approx(a * gf.gy.values[i] + b * gg.gy.values[i]).epsilon(1e-12));
    }
}

TEST_CASE("fit_trend recovers an exact degree-2 polynomial") {
    RasterGrid g(12, 10);
    const CoordScale scale = make_coord_scale(12, 10);
    for (int r = 0; r < 12; ++r) {
        for (int c = 0; c < 10; ++c) {
            const double x = scale.x(c);
            const double y = scale.y(r);
            g.at(r, c) = 1.0 + 2.0 * x + 3.0 * y + 0.5 * x * x;
        }
    }
    TrendFit fit = fit_trend(g, 2);
    for (int r = 0; r < 12; ++r) {
        for (int c = 0; c < 10; ++c) {
            CHECK(std::abs(fit.surface.at(r, c) - g.at(r, c)) < 1e-8);
        }
    }
}

TEST_CASE("fit_trend on a constant field puts everything in beta00") {
    RasterGrid g(9, 9, 4.25);
    TrendFit fit = fit_trend(g, 2);
    CHECK(fit.model.coeffs[0] == doctest::Approx(4.25).epsilon(1e-12));
    for (std::size_t t = 1; t < fit.model.coeffs.size(); ++t) {
        CHECK(std::abs(fit.model.coeffs[t]) < 1e-10);
    }
}

TEST_CASE("fit_trend matches the normal-equations oracle on a noisy field") {
    RasterGrid g = testutil::random_grid(16, 16, 31, -2.0, 2.0);
    g.valid_mask[37] = 0;
    g.valid_mask[120] = 0;
    TrendFit fit = fit_trend(g, 2);
    const std::vector<double> expected = trend_oracle(g, 2);
    REQUIRE(fit.model.coeffs.size() == expected.size());
    for (std::size_t t = 0; t < expected.size(); ++t) {
        CHECK(fit.model.coeffs[t] ==
              doctest::Approx(expected[t]).epsilon(1e-8));
    }
}

TEST_CASE("fit_trend residual is orthogonal to the basis") {
    RasterGrid g = testutil::random_grid(14, 11, 41, -1.0, 1.0);
    TrendFit fit = fit_trend(g, 2);
    const CoordScale scale = fit.model.coord_scale;
    std::size_t n_valid = 0;
    std::vector<double> dots(trend_basis_size(2), 0.0);
    for (int r = 0; r < g.height; ++r) {
        for (int c = 0; c < g.width; ++c) {
            if (!g.valid(r, c)) continue;
            ++n_valid;
            const double resid = g.at(r, c) - fit.surface.at(r, c);
            const double x = scale.x(c);
            const double y = scale.y(r);
            std::size_t t = 0;
            for (int i = 0; i <= 2; ++i) {
                for (int j = 0; j + i <= 2; ++j) {
                    dots[t++] += std::pow(x, i) * std::pow(y, j) * resid;
                }
            }
        }
    }
    for (double d : dots) CHECK(std::abs(d) / static_cast<double>(n_valid) < 1e-6);
}

TEST_CASE("rank-deficient trend fits raise SingularFitError") {
    // All valid cells on a single row: the y-basis columns collapse.
    RasterGrid g(6, 8, 1.0);
    std::fill(g.valid_mask.begin(), g.valid_mask.end(), 0);
    for (int c = 0; c < 8; ++c) g.valid_mask[g.index(2, c)] = 1;
    CHECK_THROWS_AS(fit_trend(g, 2), SingularFitError);

    // Fewer valid cells than coefficients.
    RasterGrid tiny(4, 4, 1.0);
    std::fill(tiny.valid_mask.begin(), tiny.valid_mask.end(), 0);
    tiny.valid_mask[0] = tiny.valid_mask[5] = 1;
    CHECK_THROWS_AS(fit_trend(tiny, 2), SingularFitError);
}

TEST_CASE("feature stack channel counts and order follow the ablation flags") {
    RegionDataset region = tiny_region(12, 12, 100);

    FeatureStack full = build_feature_stack(region, true, true, 2);
    REQUIRE(full.channel_count() == 20);
    CHECK(full.channels[0] == "smb");
    CHECK(full.channels[4] == "dhdt");
    CHECK(full.channels[5] == "smb_gx");
    CHECK(full.channels[6] == "smb_gy");
    CHECK(full.channels[14] == "dhdt_gy");
    CHECK(full.channels[15] == "smb_trend");
    CHECK(full.channels[19] == "dhdt_trend");

    CHECK(build_feature_stack(region, false, false, 2).channel_count() == 5);
    CHECK(build_feature_stack(region, false, true, 2).channel_count() == 10);
    CHECK(build_feature_stack(region, true, false, 2).channel_count() == 15);
}

TEST_CASE("feature stack channels are finite on valid cells and raw channels standardized") {
    RegionDataset region = tiny_region(16, 16, 200);
    FeatureStack stack = build_feature_stack(region, true, true, 2);
    for (int ch = 0; ch < stack.channel_count(); ++ch) {
        for (std::size_t i = 0; i < stack.data[static_cast<std::size_t>(ch)].size(); ++i) {
            if (stack.valid_mask[i]) CHECK(std::isfinite(stack.data[static_cast<std::size_t>(ch)][i]));
        }
    }
    REQUIRE(stack.norm_stats.size() == 5);
    for (int f = 0; f < 5; ++f) {
        double sum = 0.0;
        for (double v : stack.data[static_cast<std::size_t>(f)]) sum += v;
        CHECK(std::abs(sum / static_cast<double>(stack.data[static_cast<std::size_t>(f)].size())) < 1e-9);
    }
}
