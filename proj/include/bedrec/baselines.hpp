#pragma once

#include <cstdint>
#include <vector>

#include "bedrec/raster.hpp"

namespace bedrec {

/// Exact k-nearest-neighbor index over pick coordinates (balanced k-d
/// tree). Query results are sorted ascending by distance, ties broken by
/// coordinates so results do not depend on pick insertion order.
class PointIndex {
public:
    explicit PointIndex(const RadarPickSet& picks);

    struct Neighbor {
        double dist = 0.0;
        std::size_t index = 0;  // into the pick set
    };
    std::vector<Neighbor> query(double x, double y, std::size_t k) const;
    std::size_t size() const { return points_.size(); }

private:
    struct Node {
        std::int32_t point = -1;
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::uint8_t axis = 0;
    };
    struct PointRec {
        double x, y;
        std::size_t index;
    };

    std::int32_t build(std::vector<std::size_t>& ids, std::size_t lo, std::size_t hi,
                       int depth);

    std::vector<PointRec> points_;
    std::vector<Node> nodes_;
    std::int32_t root_ = -1;
};

/// Inverse-distance weighting over the k nearest picks; a cell coinciding
/// with a pick (d < 1e-9 m) takes that pick's value exactly.
RasterGrid idw_predict(const RadarPickSet& picks, const GridGeometry& geom,
                       double power = 2.0, std::size_t k = 4000);

/// The "nearest neighbor" baseline: inverse-distance-weighted averaging of
/// the k nearest picks, i.e. IDW with power 1.
RasterGrid knn_weighted(const RadarPickSet& picks, const GridGeometry& geom,
                        std::size_t k = 10000);

/// Step 1 of GSGI: piecewise-linear interpolation over the Delaunay
/// triangulation of the picks; cells outside the convex hull take the
/// nearest pick's value. Exposed separately so the pre-blur surface can be
/// inspected.
RasterGrid gsgi_interpolate(const RadarPickSet& picks, const GridGeometry& geom);

/// Gaussian-smoothed grid interpolation: gsgi_interpolate followed by a
/// Gaussian blur (sigma in cells, truncated at 4 sigma, reflect padding).
RasterGrid gsgi(const RadarPickSet& picks, const GridGeometry& geom,
                double blur_sigma = 5.0);

}  // namespace bedrec
