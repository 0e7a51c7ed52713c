#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bedrec/errors.hpp"
#include "bedrec/raster.hpp"
#include "bedrec/synth.hpp"
#include "test_util.hpp"

using namespace bedrec;
using testutil::TempDir;

TEST_CASE("generation is bitwise deterministic per seed") {
    SynthConfig cfg;
    cfg.seed = 99;
    SynthRegion a = generate_region(cfg);
    SynthRegion b = generate_region(cfg);
    CHECK(a.true_bed.values == b.true_bed.values);
    CHECK(a.region.ref_bed.values == b.region.ref_bed.values);
    for (std::size_t f = 0; f < a.region.features.size(); ++f) {
        CHECK(a.region.features[f].values == b.region.features[f].values);
    }
    REQUIRE(a.region.picks.picks.size() == b.region.picks.picks.size());
    for (std::size_t i = 0; i < a.region.picks.picks.size(); ++i) {
        CHECK(a.region.picks.picks[i].bed_elev == b.region.picks.picks[i].bed_elev);
    }

    cfg.seed = 100;
    SynthRegion c = generate_region(cfg);
    CHECK(a.true_bed.values != c.true_bed.values);
}

TEST_CASE("noiseless picks sample true_bed exactly") {
    SynthConfig cfg;
    cfg.seed = 3;
    cfg.noise_std = 0.0;
    SynthRegion synth = generate_region(cfg);
    const GridGeometry geom = synth.true_bed.geometry();
    for (const RadarPick& p : synth.region.picks.picks) {
        const int col = static_cast<int>(std::floor((p.x - geom.origin_x) / geom.cell_size + 0.5));
        const int row = static_cast<int>(std::floor((p.y - geom.origin_y) / geom.cell_size + 0.5));
        CHECK(p.bed_elev == synth.true_bed.at(row, col));
    }
}

TEST_CASE("radar coverage is within 20% of the track-length estimate") {
    SynthConfig cfg;
    cfg.seed = 17;
    SynthRegion synth = generate_region(cfg);
    std::size_t covered = 0;
    for (std::uint8_t m : synth.region.radar_mask) covered += m;
    const double fraction =
        static_cast<double>(covered) / static_cast<double>(synth.region.radar_mask.size());

    // Line-rasterization counting estimate: each near-horizontal track
    // touches about `width` cells (slope factor close to 1 at the
    // configured amplitudes), so coverage ~ track_count * width / cells.
    const double estimate = static_cast<double>(cfg.track_count) * cfg.width /
                            (static_cast<double>(cfg.height) * cfg.width);
    CHECK(fraction > 0.8 * estimate);
    CHECK(fraction < 1.2 * estimate * 1.1);  // arc length can exceed width slightly
}

TEST_CASE("default configuration yields roughly 15% coverage") {
    SynthConfig cfg;
    cfg.seed = 5;
    SynthRegion synth = generate_region(cfg);
    std::size_t covered = 0;
    for (std::uint8_t m : synth.region.radar_mask) covered += m;
    const double fraction =
        static_cast<double>(covered) / static_cast<double>(synth.region.radar_mask.size());
    CHECK(fraction > 0.10);
    CHECK(fraction < 0.20);
}

TEST_CASE("all rasters share one geometry") {
    SynthConfig cfg;
    cfg.seed = 31;
    cfg.height = 48;
    cfg.width = 40;
    SynthRegion synth = generate_region(cfg);
    const GridGeometry geom = synth.region.geometry();
    CHECK(geom.height == 48);
    CHECK(geom.width == 40);
    for (const RasterGrid& f : synth.region.features) {
        CHECK(f.geometry() == geom);
    }
    CHECK(synth.true_bed.geometry() == geom);
    CHECK(synth.region.radar_values.geometry() == geom);
}

TEST_CASE("true bed stays inside the amplitude-plus-trend envelope") {
    SynthConfig cfg;
    cfg.seed = 8;
    SynthRegion synth = generate_region(cfg);
    // Trend is bounded by |a0| + |ax| + |ay| <= 210; every bump by amp_max.
    const double bound = 210.0 + cfg.n_bumps * cfg.bump_amp_max;
    for (double v : synth.true_bed.values) {
        CHECK(std::abs(v) <= bound);
    }
}

TEST_CASE("degenerate configurations are rejected") {
    SynthConfig cfg;
    cfg.height = 16;
    CHECK_THROWS_AS(generate_region(cfg), ConfigError);
    cfg.height = 64;
    cfg.track_count = -1;
    CHECK_THROWS_AS(generate_region(cfg), ConfigError);
}

TEST_CASE("written region round-trips through load_region") {
    TempDir dir("synth_rt");
    SynthConfig cfg;
    cfg.seed = 12;
    SynthRegion synth = generate_region(cfg);
    const std::string manifest = write_region_dir(dir.path().string(), synth);

    RegionDataset loaded = load_region(manifest);
    CHECK(loaded.height() == cfg.height);
    CHECK(loaded.picks.picks.size() == synth.region.picks.picks.size());
    CHECK(loaded.radar_mask == synth.region.radar_mask);
    for (std::size_t i = 0; i < loaded.radar_mask.size(); ++i) {
        if (loaded.radar_mask[i]) {
            CHECK(loaded.radar_values.values[i] ==
                  doctest::Approx(synth.region.radar_values.values[i]).epsilon(1e-12));
        }
    }
    // The written true bed is readable alongside.
    RasterGrid truth = read_raster(dir.str("true_bed.npy"));
    CHECK(truth.values == synth.true_bed.values);
}
