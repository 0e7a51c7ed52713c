#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bedrec/raster.hpp"

namespace bedrec {

/// Affine map taking (row, col) indices to [-1, 1] normalized coordinates.
struct CoordScale {
    double x_offset = 0.0;
    double x_scale = 0.0;
    double y_offset = 0.0;
    double y_scale = 0.0;

    double x(int col) const { return x_offset + x_scale * col; }
    double y(int row) const { return y_offset + y_scale * row; }
};

/// Bivariate polynomial trend of degree d. Coefficients are stored in
/// lexicographic (i, j) order over all i + j <= d, one per x^i * y^j term.
struct TrendModel {
    int degree = 2;
    std::vector<double> coeffs;
    CoordScale coord_scale;

    double evaluate(int row, int col) const;
};

inline std::size_t trend_basis_size(int degree) {
    return static_cast<std::size_t>((degree + 1) * (degree + 2) / 2);
}

CoordScale make_coord_scale(int height, int width);

struct StandardizeResult {
    RasterGrid field;
    double mean = 0.0;
    double stddev = 1.0;
};

/// Z-scores the valid cells (population std). Degenerate spread
/// (std < 1e-12) yields an all-zero field with std reported as 1.
StandardizeResult standardize(const RasterGrid& grid);

struct Gradients {
    RasterGrid gx;   // column direction
    RasterGrid gy;   // row direction
};

/// Central differences in the interior, one-sided at the borders,
/// in value-per-cell units.
Gradients compute_gradients(const RasterGrid& grid);

struct TrendFit {
    TrendModel model;
    RasterGrid surface;
};

/// Least-squares polynomial trend over valid cells on [-1, 1]-normalized
/// coordinates. Default degree 2.
TrendFit fit_trend(const RasterGrid& grid, int degree = 2);

/// Augmented node features: 5 standardized raw channels, then per-feature
/// (gx, gy) gradients, then per-feature trend surfaces.
struct FeatureStack {
    int height = 0;
    int width = 0;
    std::vector<std::string> channels;
    std::vector<std::vector<double>> data;              // per channel, row-major
    std::vector<std::pair<double, double>> norm_stats;  // (mean, std) per raw feature
    std::vector<std::uint8_t> valid_mask;

    int channel_count() const { return static_cast<int>(channels.size()); }
    RasterGrid channel_grid(int channel, const GridGeometry& geom) const;
};

FeatureStack build_feature_stack(const RegionDataset& region, bool use_gradients,
                                 bool use_trend, int degree = 2);

}  // namespace bedrec
