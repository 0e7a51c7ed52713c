#include "bedrec/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "bedrec/errors.hpp"

namespace bedrec {

GridGraph build_grid_edges(int height, int width) {
    if (height < 1 || width < 1) throw ShapeError("build_grid_edges: empty grid");
    GridGraph g;
    g.height = height;
    g.width = width;
    g.node_count = height * width;
    g.edges.reserve(static_cast<std::size_t>(2) *
                    (height * (width - 1) + (height - 1) * width));
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            const std::int32_t u = static_cast<std::int32_t>(r) * width + c;
            if (c + 1 < width) {
                g.edges.emplace_back(u, u + 1);
                g.edges.emplace_back(u + 1, u);
            }
            if (r + 1 < height) {
                g.edges.emplace_back(u, u + width);
                g.edges.emplace_back(u + width, u);
            }
        }
    }
    return g;
}

GridGraph normalize_adjacency(GridGraph graph) {
    std::vector<int> degree(static_cast<std::size_t>(graph.node_count), 1);  // self-loop
    for (const auto& [src, dst] : graph.edges) {
        (void)src;
        ++degree[static_cast<std::size_t>(dst)];
    }
    graph.self_weights.resize(static_cast<std::size_t>(graph.node_count));
    for (int u = 0; u < graph.node_count; ++u) {
        graph.self_weights[static_cast<std::size_t>(u)] =
            1.0 / static_cast<double>(degree[static_cast<std::size_t>(u)]);
    }
    graph.edge_weights.resize(graph.edges.size());
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
        const auto& [src, dst] = graph.edges[e];
        graph.edge_weights[e] =
            1.0 / std::sqrt(static_cast<double>(degree[static_cast<std::size_t>(src)]) *
                            static_cast<double>(degree[static_cast<std::size_t>(dst)]));
    }
    return graph;
}

namespace {

std::vector<int> axis_offsets(int extent, int size, int stride) {
    std::vector<int> offsets;
    for (int o = 0; o + size <= extent; o += stride) offsets.push_back(o);
    if (offsets.empty() || offsets.back() != extent - size) {
        offsets.push_back(extent - size);
    }
    return offsets;
}

}  // namespace

std::vector<Patch> extract_patches(int height, int width, int size, int stride) {
    if (size < 1 || size > std::min(height, width)) {
        throw ShapeError("extract_patches: size " + std::to_string(size) +
                         " exceeds grid extent " + std::to_string(height) + "x" +
                         std::to_string(width));
    }
    if (stride < 1) throw ShapeError("extract_patches: stride must be >= 1");
    const std::vector<int> rows = axis_offsets(height, size, stride);
    const std::vector<int> cols = axis_offsets(width, size, stride);
    std::vector<Patch> out;
    out.reserve(rows.size() * cols.size());
    for (int r : rows) {
        for (int c : cols) out.push_back({r, c, size});
    }
    return out;
}

RasterGrid stitch_predictions(
    const std::vector<std::pair<Patch, std::vector<double>>>& patches, int height,
    int width) {
    RasterGrid out(height, width, 0.0);
    std::vector<std::uint32_t> counts(out.cell_count(), 0);
    for (const auto& [patch, values] : patches) {
        if (patch.row0 < 0 || patch.col0 < 0 || patch.row0 + patch.size > height ||
            patch.col0 + patch.size > width) {
            throw ShapeError("stitch_predictions: patch outside grid");
        }
        if (values.size() != static_cast<std::size_t>(patch.size) * patch.size) {
            throw ShapeError("stitch_predictions: patch value count mismatch");
        }
        for (int r = 0; r < patch.size; ++r) {
            const std::size_t base = out.index(patch.row0 + r, patch.col0);
            const std::size_t src = static_cast<std::size_t>(r) * patch.size;
            for (int c = 0; c < patch.size; ++c) {
                out.values[base + c] += values[src + c];
                ++counts[base + c];
            }
        }
    }
    for (std::size_t i = 0; i < out.cell_count(); ++i) {
        if (counts[i] == 0) {
            throw CoverageError("stitch_predictions: cell " + std::to_string(i) +
                                " not covered by any patch");
        }
        out.values[i] /= static_cast<double>(counts[i]);
    }
    return out;
}

void propagate(const GridGraph& graph, const double* in, int cols, double* out) {
    const std::size_t n = static_cast<std::size_t>(graph.node_count);
    for (std::size_t u = 0; u < n; ++u) {
        const double w = graph.self_weights[u];
        const double* src = in + u * cols;
        double* dst = out + u * cols;
        for (int j = 0; j < cols; ++j) dst[j] = w * src[j];
    }
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
        const auto& [s, d] = graph.edges[e];
        const double w = graph.edge_weights[e];
        const double* src = in + static_cast<std::size_t>(s) * cols;
        double* dst = out + static_cast<std::size_t>(d) * cols;
        for (int j = 0; j < cols; ++j) dst[j] += w * src[j];
    }
}

}  // namespace bedrec
