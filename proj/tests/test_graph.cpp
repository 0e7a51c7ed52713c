#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "bedrec/errors.hpp"
#include "bedrec/graph.hpp"
#include "test_util.hpp"

using namespace bedrec;

TEST_CASE("edge counts for the small fixed cases") {
    CHECK(build_grid_edges(1, 1).edges.empty());
    CHECK(build_grid_edges(2, 2).edges.size() == 8);
    CHECK(build_grid_edges(3, 3).edges.size() == 24);
}

TEST_CASE("edge set is symmetric, duplicate-free, and counts match for all H,W <= 32") {
    for (int h = 1; h <= 32; ++h) {
        for (int w = 1; w <= 32; ++w) {
            GridGraph g = build_grid_edges(h, w);
            const std::size_t expected =
                2 * (static_cast<std::size_t>(h) * (w - 1) + static_cast<std::size_t>(h - 1) * w);
            REQUIRE(g.edges.size() == expected);
            std::set<std::pair<int, int>> seen;
            for (const auto& [s, d] : g.edges) {
                REQUIRE(seen.insert({s, d}).second);  // no duplicates
            }
            for (const auto& [s, d] : g.edges) {
                REQUIRE(seen.count({d, s}) == 1);  // bidirectional
            }
        }
    }
}

TEST_CASE("normalized adjacency: single node gets self-loop weight 1") {
    GridGraph g = normalize_adjacency(build_grid_edges(1, 1));
    REQUIRE(g.self_weights.size() == 1);
    CHECK(g.self_weights[0] == 1.0);
}

TEST_CASE("normalized adjacency: two-node path has all weights 1/2") {
    GridGraph g = normalize_adjacency(build_grid_edges(1, 2));
    CHECK(g.self_weights[0] == doctest::Approx(0.5));
    CHECK(g.self_weights[1] == doctest::Approx(0.5));
    for (double w : g.edge_weights) CHECK(w == doctest::Approx(0.5));
}

TEST_CASE("normalized adjacency is symmetric with weights in (0,1]") {
    GridGraph g = normalize_adjacency(build_grid_edges(5, 7));
    std::map<std::pair<int, int>, double> weight;
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        weight[g.edges[e]] = g.edge_weights[e];
        CHECK(g.edge_weights[e] > 0.0);
        CHECK(g.edge_weights[e] <= 1.0);
    }
    for (const auto& [edge, w] : weight) {
        CHECK(w == weight.at({edge.second, edge.first}));
    }
    for (double w : g.self_weights) {
        CHECK(w > 0.0);
        CHECK(w <= 1.0);
    }
}

TEST_CASE("normalized adjacency row identity sums to 1") {
    // For D^{-1/2}(A+I)D^{-1/2}: sum_v w(u,v) * sqrt(deg(v)/deg(u)) = 1.
    GridGraph g = normalize_adjacency(build_grid_edges(6, 9));
    std::vector<double> degree(static_cast<std::size_t>(g.node_count), 1.0);
    for (const auto& [s, d] : g.edges) {
        (void)s;
        degree[static_cast<std::size_t>(d)] += 1.0;
    }
    std::vector<double> row_sum(static_cast<std::size_t>(g.node_count), 0.0);
    for (int u = 0; u < g.node_count; ++u) {
        row_sum[static_cast<std::size_t>(u)] = g.self_weights[static_cast<std::size_t>(u)] *
                                               std::sqrt(degree[static_cast<std::size_t>(u)] /
                                                         degree[static_cast<std::size_t>(u)]);
    }
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        const auto& [src, dst] = g.edges[e];
        row_sum[static_cast<std::size_t>(dst)] +=
            g.edge_weights[e] * std::sqrt(degree[static_cast<std::size_t>(src)] /
                                          degree[static_cast<std::size_t>(dst)]);
    }
    for (double s : row_sum) CHECK(std::abs(s - 1.0) < 1e-10);
}

TEST_CASE("patch extraction: paper geometry yields 74 offsets and 5476 patches") {
    const std::vector<Patch> patches = extract_patches(600, 600, 16, 8);
    CHECK(patches.size() == 5476);
    CHECK(patches.front() == Patch{0, 0, 16});
    CHECK(patches.back() == Patch{584, 584, 16});
}

TEST_CASE("whole-grid patch and boundary clamping") {
    CHECK(extract_patches(16, 16, 16, 8).size() == 1);

    const std::vector<Patch> patches = extract_patches(20, 20, 16, 8);
    REQUIRE(patches.size() == 4);
    std::set<int> offsets;
    for (const Patch& p : patches) {
        offsets.insert(p.row0);
        offsets.insert(p.col0);
    }
    CHECK(offsets == std::set<int>{0, 4});
}

TEST_CASE("patch list is row-major ordered and duplicate-free") {
    const std::vector<Patch> patches = extract_patches(40, 28, 16, 12);
    std::set<std::pair<int, int>> seen;
    for (const Patch& p : patches) {
        CHECK(p.row0 + p.size <= 40);
        CHECK(p.col0 + p.size <= 28);
        REQUIRE(seen.insert({p.row0, p.col0}).second);
    }
    for (std::size_t i = 1; i < patches.size(); ++i) {
        const bool ordered = patches[i - 1].row0 < patches[i].row0 ||
                             (patches[i - 1].row0 == patches[i].row0 &&
                              patches[i - 1].col0 < patches[i].col0);
        CHECK(ordered);
    }
}

TEST_CASE("oversized patch raises ShapeError") {
    CHECK_THROWS_AS(extract_patches(10, 30, 16, 8), ShapeError);
    CHECK_THROWS_AS(extract_patches(30, 30, 16, 0), ShapeError);
}

TEST_CASE("stitching averages overlapping patches and keeps exclusive cells") {
    std::vector<std::pair<Patch, std::vector<double>>> patches;
    patches.push_back({{0, 0, 2}, {1.0, 1.0, 1.0, 1.0}});
    patches.push_back({{0, 1, 2}, {3.0, 3.0, 3.0, 3.0}});
    RasterGrid out = stitch_predictions(patches, 2, 3);
    CHECK(out.at(0, 0) == 1.0);
    CHECK(out.at(0, 1) == 2.0);  // overlap
    CHECK(out.at(0, 2) == 3.0);
    CHECK(out.at(1, 1) == 2.0);
}

TEST_CASE("single whole-grid patch stitches to the identity") {
    RasterGrid g = testutil::random_grid(6, 6, 5);
    std::vector<std::pair<Patch, std::vector<double>>> patches;
    patches.push_back({{0, 0, 6}, g.values});
    RasterGrid out = stitch_predictions(patches, 6, 6);
    CHECK(out.values == g.values);
}

TEST_CASE("uncovered cells raise CoverageError") {
    std::vector<std::pair<Patch, std::vector<double>>> patches;
    patches.push_back({{0, 0, 2}, {1.0, 1.0, 1.0, 1.0}});
    CHECK_THROWS_AS(stitch_predictions(patches, 4, 4), CoverageError);
}

TEST_CASE("coverage counts for 600/16/8 are between 1 and 4") {
    // Brute-force coverage counting oracle.
    const std::vector<Patch> patches = extract_patches(600, 600, 16, 8);
    std::vector<std::uint32_t> counts(600 * 600, 0);
    for (const Patch& p : patches) {
        for (int r = 0; r < p.size; ++r) {
            for (int c = 0; c < p.size; ++c) {
                counts[static_cast<std::size_t>(p.row0 + r) * 600 + (p.col0 + c)]++;
            }
        }
    }
    std::uint32_t lo = counts[0], hi = counts[0];
    for (std::uint32_t v : counts) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(lo == 1);
    CHECK(hi == 4);
}

TEST_CASE("stitch of extract with the identity predictor reproduces the grid") {
    // Power-of-two coverage counts make the means exact.
    RasterGrid g = testutil::random_grid(24, 24, 77, -1000.0, 1000.0);
    const std::vector<Patch> patches = extract_patches(24, 24, 16, 8);
    std::vector<std::pair<Patch, std::vector<double>>> pairs;
    for (const Patch& p : patches) {
        std::vector<double> values(static_cast<std::size_t>(p.size) * p.size);
        for (int r = 0; r < p.size; ++r) {
            for (int c = 0; c < p.size; ++c) {
                values[static_cast<std::size_t>(r) * p.size + c] = g.at(p.row0 + r, p.col0 + c);
            }
        }
        pairs.emplace_back(p, std::move(values));
    }
    RasterGrid out = stitch_predictions(pairs, 24, 24);
    CHECK(out.values == g.values);

    // Odd coverage counts: equality within summation tolerance.
    RasterGrid g2 = testutil::random_grid(30, 30, 78, -1000.0, 1000.0);
    const std::vector<Patch> patches2 = extract_patches(30, 30, 12, 5);
    std::vector<std::pair<Patch, std::vector<double>>> pairs2;
    for (const Patch& p : patches2) {
        std::vector<double> values(static_cast<std::size_t>(p.size) * p.size);
        for (int r = 0; r < p.size; ++r) {
            for (int c = 0; c < p.size; ++c) {
                values[static_cast<std::size_t>(r) * p.size + c] = g2.at(p.row0 + r, p.col0 + c);
            }
        }
        pairs2.emplace_back(p, std::move(values));
    }
    RasterGrid out2 = stitch_predictions(pairs2, 30, 30);
    for (std::size_t i = 0; i < out2.cell_count(); ++i) {
        CHECK(out2.values[i] == doctest::Approx(g2.values[i]).epsilon(1e-12));
    }
}
