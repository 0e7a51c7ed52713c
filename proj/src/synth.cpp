#include "bedrec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "bedrec/errors.hpp"
#include "bedrec/features.hpp"
#include "bedrec/rng.hpp"
#include "bedrec/smoothing.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace bedrec {

namespace {

// Smooth unit-variance random field: blurred white noise rescaled to
// mean 0, std 1.
std::vector<double> smooth_field(Rng& rng, int h, int w, double sigma) {
    std::vector<double> noise(static_cast<std::size_t>(h) * w);
    for (double& v : noise) v = rng.normal();
    std::vector<double> field = gaussian_blur(noise, h, w, sigma);
    double mean = 0.0;
    for (double v : field) mean += v;
    mean /= static_cast<double>(field.size());
    double var = 0.0;
    for (double v : field) var += (v - mean) * (v - mean);
    var /= static_cast<double>(field.size());
    const double scale = var > 1e-24 ? 1.0 / std::sqrt(var) : 1.0;
    for (double& v : field) v = (v - mean) * scale;
    return field;
}

RasterGrid make_grid(const SynthConfig& cfg, std::vector<double> values) {
    RasterGrid g(cfg.height, cfg.width);
    g.cell_size = cfg.cell_size;
    g.origin_x = cfg.origin_x;
    g.origin_y = cfg.origin_y;
    g.values = std::move(values);
    return g;
}

}  // namespace

SynthRegion generate_region(const SynthConfig& cfg) {
    if (cfg.height < 32 || cfg.width < 32) {
        throw ConfigError("generate_region: dimensions must be >= 32");
    }
    if (cfg.track_count < 0) throw ConfigError("generate_region: track_count must be >= 0");

    const int h = cfg.height;
    const int w = cfg.width;
    const std::size_t cells = static_cast<std::size_t>(h) * w;
    Rng rng(mix_seed(cfg.seed, {0xBED0}));

    // True bed: planar trend plus Gaussian hills and troughs.
    std::vector<double> bed(cells, 0.0);
    {
        const double a0 = rng.uniform(-50.0, 50.0);
        const double ax = rng.uniform(-80.0, 80.0);
        const double ay = rng.uniform(-80.0, 80.0);
        for (int r = 0; r < h; ++r) {
            const double yn = h > 1 ? 2.0 * r / (h - 1) - 1.0 : 0.0;
            for (int c = 0; c < w; ++c) {
                const double xn = w > 1 ? 2.0 * c / (w - 1) - 1.0 : 0.0;
                bed[static_cast<std::size_t>(r) * w + c] = a0 + ax * xn + ay * yn;
            }
        }
        for (int b = 0; b < cfg.n_bumps; ++b) {
            const double cr = rng.uniform(0.0, h - 1.0);
            const double cc = rng.uniform(0.0, w - 1.0);
            const double radius = rng.uniform(cfg.bump_radius_min, cfg.bump_radius_max);
            double amp = rng.uniform(cfg.bump_amp_min, cfg.bump_amp_max);
            if (rng.bernoulli(0.5)) amp = -amp;
            const double denom = 2.0 * radius * radius;
            for (int r = 0; r < h; ++r) {
                for (int c = 0; c < w; ++c) {
                    const double d2 = (r - cr) * (r - cr) + (c - cc) * (c - cc);
                    bed[static_cast<std::size_t>(r) * w + c] += amp * std::exp(-d2 / denom);
                }
            }
        }
    }

    // Ice thickness: positive, with broad structure plus a medium-scale
    // component, so surface elevation alone underdetermines the bed.
    std::vector<double> thickness = smooth_field(rng, h, w, std::min(h, w) / 4.0);
    {
        const std::vector<double> medium = smooth_field(rng, h, w, 3.0);
        for (std::size_t i = 0; i < cells; ++i) {
            thickness[i] = std::max(60.0, 400.0 + 120.0 * thickness[i] + 80.0 * medium[i]);
        }
    }

    std::vector<double> elv(cells);
    for (std::size_t i = 0; i < cells; ++i) elv[i] = bed[i] + thickness[i];

    SynthRegion out;
    out.true_bed = make_grid(cfg, bed);

    // Reference bed: truth plus spatially correlated bias, mimicking an
    // interpolation-based product's smooth errors.
    {
        std::vector<double> bias = smooth_field(rng, h, w, 6.0);
        std::vector<double> ref(cells);
        for (std::size_t i = 0; i < cells; ++i) ref[i] = bed[i] + cfg.ref_bias_std * bias[i];
        out.region.ref_bed = make_grid(cfg, std::move(ref));
    }

    // Velocity proportional to thickness-weighted surface slope (downhill),
    // plus mild noise so the channels are not perfectly redundant.
    {
        RasterGrid elv_grid = make_grid(cfg, elv);
        Gradients slope = compute_gradients(elv_grid);
        std::vector<double> vx(cells), vy(cells);
        std::vector<double> nx = smooth_field(rng, h, w, 5.0);
        std::vector<double> ny = smooth_field(rng, h, w, 5.0);
        for (std::size_t i = 0; i < cells; ++i) {
            vx[i] = -0.05 * thickness[i] * slope.gx.values[i] + 2.0 * nx[i];
            vy[i] = -0.05 * thickness[i] * slope.gy.values[i] + 2.0 * ny[i];
        }
        std::vector<double> smb = smooth_field(rng, h, w, 8.0);
        std::vector<double> dhdt = smooth_field(rng, h, w, 8.0);
        for (double& v : smb) v *= 0.4;
        for (double& v : dhdt) v *= 0.2;

        out.region.features[0] = make_grid(cfg, std::move(smb));
        out.region.features[1] = std::move(elv_grid);
        out.region.features[2] = make_grid(cfg, std::move(vx));
        out.region.features[3] = make_grid(cfg, std::move(vy));
        out.region.features[4] = make_grid(cfg, std::move(dhdt));
    }

    // Radar picks along sinusoidal flight lines; values read from the cell
    // the pick lands in, so noiseless picks match true_bed exactly.
    RadarPickSet picks;
    for (int t = 0; t < cfg.track_count; ++t) {
        const double base_row =
            std::clamp(cfg.track_spacing * (t + 0.5) + rng.uniform(-1.0, 1.0), 0.0, h - 1.0);
        const double amplitude = rng.uniform(1.0, 2.5);
        const double wavelength = rng.uniform(w / 3.0, static_cast<double>(w));
        const double phase = rng.uniform(0.0, 2.0 * M_PI);
        for (double xc = 0.0; xc <= w - 1.0; xc += 0.37) {
            const double yc = base_row + amplitude * std::sin(2.0 * M_PI * xc / wavelength + phase);
            if (yc < 0.0 || yc > h - 1.0) continue;
            const int row = static_cast<int>(std::floor(yc + 0.5));
            const int col = static_cast<int>(std::floor(xc + 0.5));
            RadarPick p;
            p.x = cfg.origin_x + cfg.cell_size * xc;
            p.y = cfg.origin_y + cfg.cell_size * yc;
            p.bed_elev = bed[static_cast<std::size_t>(row) * w + col];
            if (cfg.noise_std > 0.0) p.bed_elev += cfg.noise_std * rng.normal();
            picks.picks.push_back(p);
        }
    }

    RasterizedPicks rasterized = rasterize_picks(picks, out.true_bed.geometry());
    out.region.radar_values = std::move(rasterized.values);
    out.region.radar_mask = std::move(rasterized.mask);
    out.region.picks = std::move(rasterized.kept);
    out.region.dropped_pick_count = rasterized.dropped;
    return out;
}

std::string write_region_dir(const std::string& dir, const SynthRegion& synth) {
    fs::create_directories(dir);
    const fs::path base(dir);
    const RegionDataset& region = synth.region;
    for (std::size_t i = 0; i < region.features.size(); ++i) {
        write_raster(region.features[i],
                     (base / (std::string(RegionDataset::kFeatureNames[i]) + ".npy")).string());
    }
    write_raster(region.ref_bed, (base / "ref_bed.npy").string());
    write_raster(synth.true_bed, (base / "true_bed.npy").string());
    write_radar_csv(region.picks, (base / "radar.csv").string());

    const GridGeometry geom = region.geometry();
    json manifest = {{"smb", "smb.npy"},       {"elv", "elv.npy"},
                     {"vx", "vx.npy"},         {"vy", "vy.npy"},
                     {"dhdt", "dhdt.npy"},     {"ref_bed", "ref_bed.npy"},
                     {"radar_csv", "radar.csv"},
                     {"cell_size", geom.cell_size},
                     {"origin_x", geom.origin_x},
                     {"origin_y", geom.origin_y}};
    const std::string manifest_path = (base / "manifest.json").string();
    std::ofstream out(manifest_path, std::ios::trunc);
    if (!out) throw IoError("cannot write manifest: " + manifest_path);
    out << manifest.dump(2) << "\n";
    return manifest_path;
}

}  // namespace bedrec
