#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "bedrec/raster.hpp"

namespace bedrec {

/// 4-neighbor grid graph. Edges are directed and stored both ways; after
/// normalize_adjacency the weights realize D^{-1/2} (A + I) D^{-1/2} with
/// one self-loop weight per node.
struct GridGraph {
    int height = 0;
    int width = 0;
    int node_count = 0;
    std::vector<std::pair<std::int32_t, std::int32_t>> edges;  // (src, dst)
    std::vector<double> edge_weights;   // aligned with edges
    std::vector<double> self_weights;   // per node

    bool normalized() const { return !self_weights.empty(); }
};

/// Node index = row * width + col; horizontal and vertical neighbor pairs
/// in both directions, no diagonals, no duplicates.
GridGraph build_grid_edges(int height, int width);

GridGraph normalize_adjacency(GridGraph graph);

/// Square window into a parent grid.
struct Patch {
    int row0 = 0;
    int col0 = 0;
    int size = 0;

    bool operator==(const Patch&) const = default;
};

/// Row-major list of size x size windows at stride offsets; a clamped final
/// offset is appended per axis when the stride does not tile the extent, so
/// the boundary is always covered.
std::vector<Patch> extract_patches(int height, int width, int size, int stride);

/// Unweighted per-cell mean of all covering patch predictions.
RasterGrid stitch_predictions(
    const std::vector<std::pair<Patch, std::vector<double>>>& patches, int height,
    int width);

/// out = A_hat * in for row-major node features (node_count x cols).
void propagate(const GridGraph& graph, const double* in, int cols, double* out);

}  // namespace bedrec
