#include "bedrec/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "bedrec/errors.hpp"
#include "bedrec/smoothing.hpp"

namespace bedrec {

namespace {

constexpr double kCoincidentDist = 1e-9;  // meters

double cell_center_x(const GridGeometry& g, int col) {
    return g.origin_x + g.cell_size * col;
}
double cell_center_y(const GridGeometry& g, int row) {
    return g.origin_y + g.cell_size * row;
}

}  // namespace

// ---------------------------------------------------------------------------
// PointIndex (k-d tree)
// ---------------------------------------------------------------------------

PointIndex::PointIndex(const RadarPickSet& picks) {
    points_.reserve(picks.picks.size());
    for (std::size_t i = 0; i < picks.picks.size(); ++i) {
        points_.push_back({picks.picks[i].x, picks.picks[i].y, i});
    }
    if (points_.empty()) return;
    std::vector<std::size_t> ids(points_.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    nodes_.reserve(points_.size());
    root_ = build(ids, 0, ids.size(), 0);
}

std::int32_t PointIndex::build(std::vector<std::size_t>& ids, std::size_t lo,
                               std::size_t hi, int depth) {
    if (lo >= hi) return -1;
    const int axis = depth % 2;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(ids.begin() + lo, ids.begin() + mid, ids.begin() + hi,
                     [&](std::size_t a, std::size_t b) {
                         const PointRec& pa = points_[a];
                         const PointRec& pb = points_[b];
                         // Total order keeps the tree independent of input order.
                         if (axis == 0) {
                             return pa.x != pb.x ? pa.x < pb.x
                                                 : (pa.y != pb.y ? pa.y < pb.y
                                                                 : pa.index < pb.index);
                         }
                         return pa.y != pb.y ? pa.y < pb.y
                                             : (pa.x != pb.x ? pa.x < pb.x
                                                             : pa.index < pb.index);
                     });
    Node node;
    node.point = static_cast<std::int32_t>(ids[mid]);
    node.axis = static_cast<std::uint8_t>(axis);
    const std::int32_t self = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(node);
    const std::int32_t left = build(ids, lo, mid, depth + 1);
    const std::int32_t right = build(ids, mid + 1, hi, depth + 1);
    nodes_[static_cast<std::size_t>(self)].left = left;
    nodes_[static_cast<std::size_t>(self)].right = right;
    return self;
}

std::vector<PointIndex::Neighbor> PointIndex::query(double x, double y,
                                                    std::size_t k) const {
    std::vector<Neighbor> out;
    if (points_.empty() || k == 0) return out;
    k = std::min(k, points_.size());

    // Max-heap on (distance, tie-break coords) of the best k so far.
    struct HeapEntry {
        double dist;
        double px, py;
        std::size_t index;
    };
    auto worse = [](const HeapEntry& a, const HeapEntry& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        if (a.px != b.px) return a.px < b.px;
        if (a.py != b.py) return a.py < b.py;
        return a.index < b.index;
    };
    std::vector<HeapEntry> heap;
    heap.reserve(k + 1);

    auto visit = [&](auto&& self, std::int32_t node_id) -> void {
        if (node_id < 0) return;
        const Node& node = nodes_[static_cast<std::size_t>(node_id)];
        const PointRec& p = points_[static_cast<std::size_t>(node.point)];
        const double dx = x - p.x;
        const double dy = y - p.y;
        const HeapEntry entry{std::sqrt(dx * dx + dy * dy), p.x, p.y, p.index};
        if (heap.size() < k || worse(entry, heap.front())) {
            heap.push_back(entry);
            std::push_heap(heap.begin(), heap.end(), worse);
            if (heap.size() > k) {
                std::pop_heap(heap.begin(), heap.end(), worse);
                heap.pop_back();
            }
        }
        const double delta = node.axis == 0 ? dx : dy;
        const std::int32_t near = delta <= 0.0 ? node.left : node.right;
        const std::int32_t far = delta <= 0.0 ? node.right : node.left;
        self(self, near);
        if (heap.size() < k || std::abs(delta) <= heap.front().dist) {
            self(self, far);
        }
    };
    visit(visit, root_);

    std::sort(heap.begin(), heap.end(), worse);
    out.reserve(heap.size());
    for (const HeapEntry& e : heap) out.push_back({e.dist, e.index});
    return out;
}

// ---------------------------------------------------------------------------
// IDW / weighted kNN
// ---------------------------------------------------------------------------

namespace {

RasterGrid weighted_knn_impl(const RadarPickSet& picks, const GridGeometry& geom,
                             double power, std::size_t k) {
    if (picks.picks.empty()) throw EmptyInputError("interpolation requires at least 1 pick");
    const PointIndex index(picks);
    RasterGrid out(geom.height, geom.width, 0.0);
    out.set_geometry(geom);
    for (int r = 0; r < geom.height; ++r) {
        const double y = cell_center_y(geom, r);
        for (int c = 0; c < geom.width; ++c) {
            const double x = cell_center_x(geom, c);
            const auto neighbors = index.query(x, y, k);
            if (neighbors.front().dist < kCoincidentDist) {
                out.at(r, c) = picks.picks[neighbors.front().index].bed_elev;
                continue;
            }
            double weight_sum = 0.0;
            double value_sum = 0.0;
            for (const auto& nb : neighbors) {
                const double w = 1.0 / std::pow(nb.dist, power);
                weight_sum += w;
                value_sum += w * picks.picks[nb.index].bed_elev;
            }
            out.at(r, c) = value_sum / weight_sum;
        }
    }
    return out;
}

}  // namespace

RasterGrid idw_predict(const RadarPickSet& picks, const GridGeometry& geom, double power,
                       std::size_t k) {
    return weighted_knn_impl(picks, geom, power, k);
}

RasterGrid knn_weighted(const RadarPickSet& picks, const GridGeometry& geom,
                        std::size_t k) {
    return weighted_knn_impl(picks, geom, 1.0, k);
}

// ---------------------------------------------------------------------------
// GSGI: Delaunay (Bowyer-Watson) + barycentric interpolation + blur
// ---------------------------------------------------------------------------

namespace {

struct Vec2 {
    double x, y;
};

struct Triangle {
    int a, b, c;     // indices into the point list (super-triangle verts < 0 shifted)
    bool alive = true;
};

double orient2d(const Vec2& pa, const Vec2& pb, const Vec2& pc) {
    return (pb.x - pa.x) * (pc.y - pa.y) - (pb.y - pa.y) * (pc.x - pa.x);
}

// > 0 when pd lies inside the circumcircle of counterclockwise (pa, pb, pc).
double incircle(const Vec2& pa, const Vec2& pb, const Vec2& pc, const Vec2& pd) {
    const double adx = pa.x - pd.x, ady = pa.y - pd.y;
    const double bdx = pb.x - pd.x, bdy = pb.y - pd.y;
    const double cdx = pc.x - pd.x, cdy = pc.y - pd.y;
    const double ad2 = adx * adx + ady * ady;
    const double bd2 = bdx * bdx + bdy * bdy;
    const double cd2 = cdx * cdx + cdy * cdy;
    return adx * (bdy * cd2 - cdy * bd2) - ady * (bdx * cd2 - cdx * bd2) +
           ad2 * (bdx * cdy - cdx * bdy);
}

struct Delaunay {
    std::vector<Vec2> points;             // picks then 3 super vertices
    std::vector<Triangle> triangles;
    std::size_t real_count = 0;

    bool is_super(int v) const { return static_cast<std::size_t>(v) >= real_count; }
};

Delaunay triangulate(const std::vector<Vec2>& input) {
    Delaunay d;
    d.points = input;
    d.real_count = input.size();

    double min_x = input[0].x, max_x = input[0].x;
    double min_y = input[0].y, max_y = input[0].y;
    for (const Vec2& p : input) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    const double span = std::max({max_x - min_x, max_y - min_y, 1.0});
    const double cx = 0.5 * (min_x + max_x);
    const double cy = 0.5 * (min_y + max_y);
    d.points.push_back({cx - 20.0 * span, cy - 10.0 * span});
    d.points.push_back({cx + 20.0 * span, cy - 10.0 * span});
    d.points.push_back({cx, cy + 20.0 * span});
    const int s0 = static_cast<int>(d.real_count);
    d.triangles.push_back({s0, s0 + 1, s0 + 2});

    for (std::size_t pi = 0; pi < d.real_count; ++pi) {
        const Vec2& p = d.points[pi];
        // Collect triangles whose circumcircle contains p.
        std::vector<std::size_t> bad;
        for (std::size_t t = 0; t < d.triangles.size(); ++t) {
            Triangle& tri = d.triangles[t];
            if (!tri.alive) continue;
            Vec2 pa = d.points[static_cast<std::size_t>(tri.a)];
            Vec2 pb = d.points[static_cast<std::size_t>(tri.b)];
            Vec2 pc = d.points[static_cast<std::size_t>(tri.c)];
            double sign = orient2d(pa, pb, pc);
            double det = incircle(pa, pb, pc, p);
            if (sign < 0.0) det = -det;
            if (det > 0.0) bad.push_back(t);
        }
        // Boundary of the cavity: edges that appear exactly once.
        std::vector<std::pair<int, int>> boundary;
        auto toggle_edge = [&boundary](int a, int b) {
            for (std::size_t i = 0; i < boundary.size(); ++i) {
                if ((boundary[i].first == b && boundary[i].second == a) ||
                    (boundary[i].first == a && boundary[i].second == b)) {
                    boundary.erase(boundary.begin() + static_cast<std::ptrdiff_t>(i));
                    return;
                }
            }
            boundary.emplace_back(a, b);
        };
        for (std::size_t t : bad) {
            Triangle& tri = d.triangles[t];
            tri.alive = false;
            toggle_edge(tri.a, tri.b);
            toggle_edge(tri.b, tri.c);
            toggle_edge(tri.c, tri.a);
        }
        for (const auto& [a, b] : boundary) {
            d.triangles.push_back({a, b, static_cast<int>(pi)});
        }
    }
    // Drop triangles using super vertices.
    for (Triangle& tri : d.triangles) {
        if (tri.alive && (d.is_super(tri.a) || d.is_super(tri.b) || d.is_super(tri.c))) {
            tri.alive = false;
        }
    }
    return d;
}

// Uniform grid over triangle bounding boxes for point location.
struct TriangleLocator {
    const Delaunay& d;
    double min_x, min_y, cell;
    int nx, ny;
    std::vector<std::vector<std::size_t>> buckets;

    explicit TriangleLocator(const Delaunay& del) : d(del) {
        min_x = std::numeric_limits<double>::infinity();
        min_y = std::numeric_limits<double>::infinity();
        double max_x = -std::numeric_limits<double>::infinity();
        double max_y = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < d.real_count; ++i) {
            min_x = std::min(min_x, d.points[i].x);
            max_x = std::max(max_x, d.points[i].x);
            min_y = std::min(min_y, d.points[i].y);
            max_y = std::max(max_y, d.points[i].y);
        }
        std::size_t alive = 0;
        for (const Triangle& t : d.triangles) alive += t.alive ? 1 : 0;
        const int target = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(alive))));
        nx = ny = target;
        cell = std::max({(max_x - min_x) / nx, (max_y - min_y) / ny,
                         std::numeric_limits<double>::min()});
        nx = std::max(1, static_cast<int>((max_x - min_x) / cell) + 1);
        ny = std::max(1, static_cast<int>((max_y - min_y) / cell) + 1);
        buckets.resize(static_cast<std::size_t>(nx) * ny);
        for (std::size_t t = 0; t < d.triangles.size(); ++t) {
            const Triangle& tri = d.triangles[t];
            if (!tri.alive) continue;
            const Vec2& pa = d.points[static_cast<std::size_t>(tri.a)];
            const Vec2& pb = d.points[static_cast<std::size_t>(tri.b)];
            const Vec2& pc = d.points[static_cast<std::size_t>(tri.c)];
            const int x0 = clamp_x(std::min({pa.x, pb.x, pc.x}));
            const int x1 = clamp_x(std::max({pa.x, pb.x, pc.x}));
            const int y0 = clamp_y(std::min({pa.y, pb.y, pc.y}));
            const int y1 = clamp_y(std::max({pa.y, pb.y, pc.y}));
            for (int gy = y0; gy <= y1; ++gy) {
                for (int gx = x0; gx <= x1; ++gx) {
                    buckets[static_cast<std::size_t>(gy) * nx + gx].push_back(t);
                }
            }
        }
    }

    int clamp_x(double x) const {
        return std::clamp(static_cast<int>((x - min_x) / cell), 0, nx - 1);
    }
    int clamp_y(double y) const {
        return std::clamp(static_cast<int>((y - min_y) / cell), 0, ny - 1);
    }

    // Barycentric interpolation at (x, y); false when outside the hull.
    bool interpolate(double x, double y, const std::vector<double>& values,
                     double& out) const {
        if (x < min_x - 1e-9 || y < min_y - 1e-9) return false;
        const int gx = clamp_x(x);
        const int gy = clamp_y(y);
        const Vec2 p{x, y};
        for (std::size_t t : buckets[static_cast<std::size_t>(gy) * nx + gx]) {
            const Triangle& tri = d.triangles[t];
            const Vec2& pa = d.points[static_cast<std::size_t>(tri.a)];
            const Vec2& pb = d.points[static_cast<std::size_t>(tri.b)];
            const Vec2& pc = d.points[static_cast<std::size_t>(tri.c)];
            const double area = orient2d(pa, pb, pc);
            if (area == 0.0) continue;
            double wa = orient2d(pb, pc, p) / area;
            double wb = orient2d(pc, pa, p) / area;
            double wc = orient2d(pa, pb, p) / area;
            const double eps = -1e-12;
            if (wa >= eps && wb >= eps && wc >= eps) {
                out = wa * values[static_cast<std::size_t>(tri.a)] +
                      wb * values[static_cast<std::size_t>(tri.b)] +
                      wc * values[static_cast<std::size_t>(tri.c)];
                return true;
            }
        }
        return false;
    }
};

}  // namespace

RasterGrid gsgi_interpolate(const RadarPickSet& picks, const GridGeometry& geom) {
    if (picks.picks.size() < 3) {
        throw TriangulationError("GSGI requires at least 3 picks");
    }
    // Deduplicate coincident picks (cell-mean style: average their values).
    std::vector<Vec2> points;
    std::vector<double> values;
    {
        std::vector<std::size_t> order(picks.picks.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const RadarPick& pa = picks.picks[a];
            const RadarPick& pb = picks.picks[b];
            return pa.x != pb.x ? pa.x < pb.x : pa.y < pb.y;
        });
        std::size_t i = 0;
        while (i < order.size()) {
            std::size_t j = i;
            double sum = 0.0;
            while (j < order.size() && picks.picks[order[j]].x == picks.picks[order[i]].x &&
                   picks.picks[order[j]].y == picks.picks[order[i]].y) {
                sum += picks.picks[order[j]].bed_elev;
                ++j;
            }
            points.push_back({picks.picks[order[i]].x, picks.picks[order[i]].y});
            values.push_back(sum / static_cast<double>(j - i));
            i = j;
        }
    }
    if (points.size() < 3) {
        throw TriangulationError("GSGI requires at least 3 distinct pick locations");
    }
    bool collinear = true;
    for (std::size_t i = 2; i < points.size() && collinear; ++i) {
        if (std::abs(orient2d(points[0], points[1], points[i])) > 0.0) collinear = false;
    }
    if (collinear) throw TriangulationError("GSGI picks are collinear");

    const Delaunay tri = triangulate(points);
    const TriangleLocator locator(tri);

    RadarPickSet dedup;
    dedup.picks.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        dedup.picks.push_back({points[i].x, points[i].y, values[i]});
    }
    const PointIndex nearest(dedup);

    RasterGrid out(geom.height, geom.width, 0.0);
    out.set_geometry(geom);
    for (int r = 0; r < geom.height; ++r) {
        const double y = cell_center_y(geom, r);
        for (int c = 0; c < geom.width; ++c) {
            const double x = cell_center_x(geom, c);
            const auto nb = nearest.query(x, y, 1);
            if (nb.front().dist < kCoincidentDist) {
                out.at(r, c) = dedup.picks[nb.front().index].bed_elev;
                continue;
            }
            double v;
            if (locator.interpolate(x, y, values, v)) {
                out.at(r, c) = v;
            } else {
                out.at(r, c) = dedup.picks[nb.front().index].bed_elev;
            }
        }
    }
    return out;
}

RasterGrid gsgi(const RadarPickSet& picks, const GridGeometry& geom, double blur_sigma) {
    RasterGrid surface = gsgi_interpolate(picks, geom);
    surface.values = gaussian_blur(surface.values, geom.height, geom.width, blur_sigma);
    return surface;
}

}  // namespace bedrec
