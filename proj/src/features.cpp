#include "bedrec/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "bedrec/errors.hpp"

namespace bedrec {

namespace {

constexpr double kStdGuard = 1e-12;

// Monomial exponents in lexicographic (i, j) order, i + j <= degree.
std::vector<std::pair<int, int>> basis_exponents(int degree) {
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i <= degree; ++i) {
        for (int j = 0; j + i <= degree; ++j) out.emplace_back(i, j);
    }
    return out;
}

// Cholesky solve of the (small) symmetric positive-definite normal system.
// Throws SingularFitError with a crude condition estimate when a pivot
// collapses.
std::vector<double> solve_normal_system(std::vector<double> m, std::vector<double> rhs,
                                        std::size_t n) {
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, m[i * n + i]);
    const double tol = std::max(max_diag, 1.0) * 1e-13;

    std::vector<double> chol(n * n, 0.0);
    double min_pivot = std::numeric_limits<double>::infinity();
    double max_pivot = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double d = m[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= chol[j * n + k] * chol[j * n + k];
        if (d <= tol) {
            const double cond = (min_pivot > 0.0 && std::isfinite(min_pivot))
                                    ? max_diag / std::max(d, 0.0)
                                    : std::numeric_limits<double>::infinity();
            throw SingularFitError("trend normal system is rank-deficient (condition ~" +
                                   std::to_string(cond) + ")");
        }
        d = std::sqrt(d);
        chol[j * n + j] = d;
        min_pivot = std::min(min_pivot, d);
        max_pivot = std::max(max_pivot, d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = m[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= chol[i * n + k] * chol[j * n + k];
            chol[i * n + j] = s / d;
        }
    }
    // forward then back substitution
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = rhs[i];
        for (std::size_t k = 0; k < i; ++k) s -= chol[i * n + k] * y[k];
        y[i] = s / chol[i * n + i];
    }
    std::vector<double> x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= chol[k * n + ii] * x[k];
        x[ii] = s / chol[ii * n + ii];
    }
    return x;
}

}  // namespace

CoordScale make_coord_scale(int height, int width) {
    CoordScale s;
    if (width > 1) {
        s.x_scale = 2.0 / (width - 1);
        s.x_offset = -1.0;
    }
    if (height > 1) {
        s.y_scale = 2.0 / (height - 1);
        s.y_offset = -1.0;
    }
    return s;
}

double TrendModel::evaluate(int row, int col) const {
    const double x = coord_scale.x(col);
    const double y = coord_scale.y(row);
    double acc = 0.0;
    std::size_t t = 0;
    for (int i = 0; i <= degree; ++i) {
        for (int j = 0; j + i <= degree; ++j) {
            acc += coeffs[t++] * std::pow(x, i) * std::pow(y, j);
        }
    }
    return acc;
}

StandardizeResult standardize(const RasterGrid& grid) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < grid.cell_count(); ++i) {
        if (grid.valid_mask[i]) {
            sum += grid.values[i];
            ++n;
        }
    }
    if (n == 0) throw EmptyInputError("standardize: no valid cells");
    const double mean = sum / static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < grid.cell_count(); ++i) {
        if (grid.valid_mask[i]) {
            const double d = grid.values[i] - mean;
            var += d * d;
        }
    }
    const double std_raw = std::sqrt(var / static_cast<double>(n));

    StandardizeResult out;
    out.field = grid;
    out.mean = mean;
    if (std_raw < kStdGuard) {
        out.stddev = 1.0;
        for (std::size_t i = 0; i < grid.cell_count(); ++i) out.field.values[i] = 0.0;
    } else {
        out.stddev = std_raw;
        for (std::size_t i = 0; i < grid.cell_count(); ++i) {
            out.field.values[i] =
                grid.valid_mask[i] ? (grid.values[i] - mean) / std_raw : 0.0;
        }
    }
    return out;
}

Gradients compute_gradients(const RasterGrid& grid) {
    if (grid.height < 2 || grid.width < 2) {
        throw ShapeError("compute_gradients: grid must be at least 2x2");
    }
    Gradients out;
    out.gx = grid;
    out.gy = grid;
    const int h = grid.height;
    const int w = grid.width;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double gx;
            if (c == 0) {
                gx = grid.at(r, 1) - grid.at(r, 0);
            } else if (c == w - 1) {
                gx = grid.at(r, w - 1) - grid.at(r, w - 2);
            } else {
                gx = (grid.at(r, c + 1) - grid.at(r, c - 1)) / 2.0;
            }
            double gy;
            if (r == 0) {
                gy = grid.at(1, c) - grid.at(0, c);
            } else if (r == h - 1) {
                gy = grid.at(h - 1, c) - grid.at(h - 2, c);
            } else {
                gy = (grid.at(r + 1, c) - grid.at(r - 1, c)) / 2.0;
            }
            out.gx.at(r, c) = gx;
            out.gy.at(r, c) = gy;
        }
    }
    return out;
}

TrendFit fit_trend(const RasterGrid& grid, int degree) {
    if (degree < 0) throw ConfigError("fit_trend: degree must be non-negative");
    const std::size_t m = trend_basis_size(degree);
    std::size_t n_valid = 0;
    for (std::uint8_t v : grid.valid_mask) n_valid += v;
    if (n_valid < m) {
        throw SingularFitError("fit_trend: " + std::to_string(n_valid) +
                               " valid cells cannot determine " + std::to_string(m) +
                               " coefficients");
    }

    const CoordScale scale = make_coord_scale(grid.height, grid.width);
    const auto exps = basis_exponents(degree);

    // Accumulate B^T B and B^T f over valid cells.
    std::vector<double> normal(m * m, 0.0);
    std::vector<double> rhs(m, 0.0);
    std::vector<double> row(m);
    for (int r = 0; r < grid.height; ++r) {
        const double y = scale.y(r);
        for (int c = 0; c < grid.width; ++c) {
            if (!grid.valid(r, c)) continue;
            const double x = scale.x(c);
            for (std::size_t t = 0; t < m; ++t) {
                row[t] = std::pow(x, exps[t].first) * std::pow(y, exps[t].second);
            }
            const double f = grid.at(r, c);
            for (std::size_t i = 0; i < m; ++i) {
                rhs[i] += row[i] * f;
                for (std::size_t j = 0; j <= i; ++j) normal[i * m + j] += row[i] * row[j];
            }
        }
    }
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) normal[i * m + j] = normal[j * m + i];
    }

    TrendFit out;
    out.model.degree = degree;
    out.model.coord_scale = scale;
    out.model.coeffs = solve_normal_system(std::move(normal), std::move(rhs), m);

    out.surface = grid;
    std::fill(out.surface.valid_mask.begin(), out.surface.valid_mask.end(), 1);
    for (int r = 0; r < grid.height; ++r) {
        for (int c = 0; c < grid.width; ++c) {
            out.surface.at(r, c) = out.model.evaluate(r, c);
        }
    }
    return out;
}

RasterGrid FeatureStack::channel_grid(int channel, const GridGeometry& geom) const {
    RasterGrid g(height, width);
    g.set_geometry(geom);
    g.values = data[static_cast<std::size_t>(channel)];
    g.valid_mask = valid_mask;
    return g;
}

FeatureStack build_feature_stack(const RegionDataset& region, bool use_gradients,
                                 bool use_trend, int degree) {
    FeatureStack stack;
    stack.height = region.height();
    stack.width = region.width();
    const std::size_t cells = static_cast<std::size_t>(stack.height) * stack.width;

    // Joint validity: a node is usable only where every covariate is valid.
    stack.valid_mask.assign(cells, 1);
    for (const RasterGrid& f : region.features) {
        for (std::size_t i = 0; i < cells; ++i) {
            if (!f.valid_mask[i]) stack.valid_mask[i] = 0;
        }
    }

    std::array<RasterGrid, 5> standardized;
    for (std::size_t f = 0; f < region.features.size(); ++f) {
        StandardizeResult res = standardize(region.features[f]);
        stack.norm_stats.emplace_back(res.mean, res.stddev);
        standardized[f] = std::move(res.field);
        stack.channels.emplace_back(RegionDataset::kFeatureNames[f]);
        stack.data.push_back(standardized[f].values);
    }
    if (use_gradients) {
        for (std::size_t f = 0; f < standardized.size(); ++f) {
            Gradients g = compute_gradients(standardized[f]);
            stack.channels.push_back(std::string(RegionDataset::kFeatureNames[f]) + "_gx");
            stack.data.push_back(std::move(g.gx.values));
            stack.channels.push_back(std::string(RegionDataset::kFeatureNames[f]) + "_gy");
            stack.data.push_back(std::move(g.gy.values));
        }
    }
    if (use_trend) {
        for (std::size_t f = 0; f < standardized.size(); ++f) {
            TrendFit fit = fit_trend(standardized[f], degree);
            stack.channels.push_back(std::string(RegionDataset::kFeatureNames[f]) + "_trend");
            stack.data.push_back(std::move(fit.surface.values));
        }
    }
    return stack;
}

}  // namespace bedrec
