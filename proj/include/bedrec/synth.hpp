#pragma once

#include <cstdint>
#include <string>

#include "bedrec/raster.hpp"

namespace bedrec {

/// Deterministic synthetic-region generator. Defaults give a 64x64 region
/// with roughly 15% radar coverage from 9 sinusoidal flight lines.
struct SynthConfig {
    int height = 64;
    int width = 64;
    std::uint64_t seed = 0;
    int n_bumps = 12;
    double bump_amp_min = 80.0;    // meters (sign randomized: hills and troughs)
    double bump_amp_max = 260.0;
    double bump_radius_min = 2.5;  // cells
    double bump_radius_max = 7.0;
    int track_count = 9;
    double track_spacing = 7.0;    // cells between flight lines
    double noise_std = 6.0;        // radar pick noise, meters
    double ref_bias_std = 25.0;    // correlated reference-map error, meters
    double cell_size = 150.0;
    double origin_x = 0.0;
    double origin_y = 0.0;
};

struct SynthRegion {
    RegionDataset region;
    RasterGrid true_bed;
};

SynthRegion generate_region(const SynthConfig& config);

/// Writes the rasters, radar CSV, and a load_region-compatible manifest
/// (plus true_bed.npy for evaluation) into dir; returns the manifest path.
std::string write_region_dir(const std::string& dir, const SynthRegion& synth);

}  // namespace bedrec
