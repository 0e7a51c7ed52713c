#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace bedrec {

/// Grid placement shared by every raster in a region: cell_size is meters
/// per cell, (origin_x, origin_y) is the projected center of cell (0, 0).
/// Row r runs along +y, column c along +x.
struct GridGeometry {
    int height = 0;
    int width = 0;
    double cell_size = 1.0;
    double origin_x = 0.0;
    double origin_y = 0.0;

    bool operator==(const GridGeometry&) const = default;
};

/// H x W scalar field with validity mask. Cells with valid_mask 0 are
/// nodata and excluded from every statistic and loss.
struct RasterGrid {
    int height = 0;
    int width = 0;
    double cell_size = 1.0;
    double origin_x = 0.0;
    double origin_y = 0.0;
    std::vector<double> values;        // row-major, height*width
    std::vector<std::uint8_t> valid_mask;

    RasterGrid() = default;
    RasterGrid(int h, int w, double fill = 0.0);

    std::size_t cell_count() const { return values.size(); }
    std::size_t index(int r, int c) const {
        return static_cast<std::size_t>(r) * width + c;
    }
    double at(int r, int c) const { return values[index(r, c)]; }
    double& at(int r, int c) { return values[index(r, c)]; }
    bool valid(int r, int c) const { return valid_mask[index(r, c)] != 0; }

    GridGeometry geometry() const {
        return {height, width, cell_size, origin_x, origin_y};
    }
    void set_geometry(const GridGeometry& g);
    bool geometry_matches(const RasterGrid& other) const {
        return geometry() == other.geometry();
    }
};

struct RadarPick {
    double x = 0.0;
    double y = 0.0;
    double bed_elev = 0.0;
};

/// Sparse point observations of bed elevation. May be empty.
struct RadarPickSet {
    std::vector<RadarPick> picks;
};

/// A fully assembled sub-region: five covariate rasters, the reference bed
/// map, and radar picks rasterized onto the grid. All rasters share one
/// geometry. The raw picks are retained for the interpolation baselines.
struct RegionDataset {
    static constexpr std::array<const char*, 5> kFeatureNames = {
        "smb", "elv", "vx", "vy", "dhdt"};

    std::array<RasterGrid, 5> features;
    RasterGrid ref_bed;
    RasterGrid radar_values;            // valid exactly where radar_mask is set
    std::vector<std::uint8_t> radar_mask;
    RadarPickSet picks;                 // in-extent picks only
    std::size_t dropped_pick_count = 0;

    int height() const { return ref_bed.height; }
    int width() const { return ref_bed.width; }
    GridGeometry geometry() const { return ref_bed.geometry(); }
};

// ---------------------------------------------------------------------------
// Raster container: NPY v1.0 ('<f8', C-order) plus a JSON sidecar at
// "<path>.json" carrying cell_size / origin_x / origin_y. Invalid cells are
// stored as NaN.
// ---------------------------------------------------------------------------

RasterGrid read_raster(const std::string& path);
void write_raster(const RasterGrid& grid, const std::string& path);

/// Low-level NPY access used for raster payloads and model checkpoints.
struct NpyArray {
    std::vector<std::size_t> shape;
    std::vector<double> data;
};
NpyArray read_npy(const std::string& path);
void write_npy(const std::string& path, const std::vector<std::size_t>& shape,
               const std::vector<double>& data);

/// Radar pick CSV: header "x,y,bed_elev", one pick per line.
RadarPickSet read_radar_csv(const std::string& path);
void write_radar_csv(const RadarPickSet& picks, const std::string& path);

/// Per-cell mean rasterization of picks onto a grid. Picks outside the
/// extent are counted in dropped, not an error.
struct RasterizedPicks {
    RasterGrid values;
    std::vector<std::uint8_t> mask;
    std::size_t dropped = 0;
    RadarPickSet kept;
};
RasterizedPicks rasterize_picks(const RadarPickSet& picks, const GridGeometry& geom);

/// Loads a region from a JSON manifest listing the five feature rasters,
/// the reference bed raster, a radar CSV, and the grid geometry.
RegionDataset load_region(const std::string& manifest_path);

}  // namespace bedrec
