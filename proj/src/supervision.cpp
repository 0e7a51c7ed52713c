#include "bedrec/supervision.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "bedrec/errors.hpp"

namespace bedrec {

namespace {

constexpr std::int64_t kFar = std::int64_t{1} << 60;

// Column pass: for every cell, distance (in rows) to the nearest true cell
// in its own column, plus that row. kFar when the column has none.
void column_pass(const std::vector<std::uint8_t>& mask, int h, int w,
                 std::vector<std::int64_t>& row_dist, std::vector<std::int32_t>& row_site) {
    for (int c = 0; c < w; ++c) {
        int last = -1;
        for (int r = 0; r < h; ++r) {
            const std::size_t i = static_cast<std::size_t>(r) * w + c;
            if (mask[i]) last = r;
            if (last >= 0) {
                row_dist[i] = r - last;
                row_site[i] = last;
            } else {
                row_dist[i] = kFar;
                row_site[i] = -1;
            }
        }
        last = -1;
        for (int r = h - 1; r >= 0; --r) {
            const std::size_t i = static_cast<std::size_t>(r) * w + c;
            if (mask[i]) last = r;
            if (last >= 0 && last - r < row_dist[i]) {
                row_dist[i] = last - r;
                row_site[i] = last;
            }
        }
    }
}

}  // namespace

SiteTransform nearest_site_transform(const std::vector<std::uint8_t>& mask, int height,
                                     int width) {
    if (height < 1 || width < 1 ||
        mask.size() != static_cast<std::size_t>(height) * width) {
        throw ShapeError("nearest_site_transform: mask shape mismatch");
    }
    const std::size_t cells = mask.size();
    SiteTransform out;
    out.distances.assign(cells, std::numeric_limits<double>::infinity());
    out.site.assign(cells, -1);

    std::vector<std::int64_t> row_dist(cells);
    std::vector<std::int32_t> row_site(cells);
    column_pass(mask, height, width, row_dist, row_site);

    // Row pass: lower envelope of parabolas (c - c')^2 + f(c') over the
    // columns with a finite column distance. Integer arithmetic keeps the
    // squared distances exact.
    std::vector<std::int32_t> v(static_cast<std::size_t>(width));
    std::vector<double> z(static_cast<std::size_t>(width) + 1);
    std::vector<std::int64_t> f(static_cast<std::size_t>(width));
    for (int r = 0; r < height; ++r) {
        const std::size_t base = static_cast<std::size_t>(r) * width;
        int m = 0;  // number of candidate columns
        for (int c = 0; c < width; ++c) {
            const std::int64_t d = row_dist[base + c];
            if (d < kFar) {
                f[m] = d * d;
                v[m] = c;
                ++m;
            }
        }
        if (m == 0) continue;

        // Build the lower envelope over candidates (indices into f/v).
        std::vector<int> hull(static_cast<std::size_t>(m));
        auto intersect = [&](int q, int p) {
            return (static_cast<double>(f[q] - f[p]) +
                    static_cast<double>(std::int64_t(v[q]) * v[q] -
                                        std::int64_t(v[p]) * v[p])) /
                   (2.0 * (v[q] - v[p]));
        };
        int k = 0;
        hull[0] = 0;
        z[0] = -std::numeric_limits<double>::infinity();
        z[1] = std::numeric_limits<double>::infinity();
        for (int q = 1; q < m; ++q) {
            double s = intersect(q, hull[k]);
            while (s <= z[k]) {
                --k;
                s = intersect(q, hull[k]);
            }
            ++k;
            hull[k] = q;
            z[k] = s;
            z[k + 1] = std::numeric_limits<double>::infinity();
        }

        int ki = 0;
        for (int c = 0; c < width; ++c) {
            while (z[ki + 1] < c) ++ki;
            const int p = hull[ki];
            const std::int64_t dc = c - v[p];
            const std::int64_t d2 = dc * dc + f[p];
            out.distances[base + c] = std::sqrt(static_cast<double>(d2));
            out.site[base + c] =
                static_cast<std::int32_t>(row_site[base + v[p]]) * width + v[p];
        }
    }
    return out;
}

std::vector<double> euclidean_distance_transform(const std::vector<std::uint8_t>& mask,
                                                 int height, int width) {
    return nearest_site_transform(mask, height, width).distances;
}

ConfidenceMap confidence_from_distance(const std::vector<double>& distances, double sigma) {
    if (sigma <= 0.0) throw ConfigError("confidence_from_distance: sigma must be > 0");
    ConfidenceMap out;
    out.sigma = sigma;
    out.distances = distances;
    out.confidences.resize(distances.size());
    const double denom = 2.0 * sigma * sigma;
    for (std::size_t i = 0; i < distances.size(); ++i) {
        const double d = distances[i];
        out.confidences[i] = std::isinf(d) ? 0.0 : std::exp(-(d * d) / denom);
    }
    return out;
}

LossTerms loss_terms(const std::vector<double>& mean_pred,
                     const std::vector<std::vector<double>>& passes,
                     const std::vector<double>& radar_values,
                     const std::vector<std::uint8_t>& radar_mask,
                     const std::vector<double>& confidences,
                     const std::vector<double>& ref_values,
                     const std::vector<std::uint8_t>& valid_mask,
                     const std::vector<std::uint8_t>& eval_mask) {
    const std::size_t n = mean_pred.size();
    if (radar_values.size() != n || radar_mask.size() != n || confidences.size() != n ||
        ref_values.size() != n || valid_mask.size() != n || eval_mask.size() != n) {
        throw ShapeError("loss_terms: input arrays disagree in length");
    }
    if (passes.empty()) throw ShapeError("loss_terms: need at least one pass");
    for (const auto& p : passes) {
        if (p.size() != n) throw ShapeError("loss_terms: pass length mismatch");
    }

    LossTerms out;
    double radar_sum = 0.0;
    double ref_sum = 0.0;
    double var_sum = 0.0;
    const double n_passes = static_cast<double>(passes.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (!eval_mask[i] || !valid_mask[i]) continue;
        if (radar_mask[i]) {
            const double e = mean_pred[i] - radar_values[i];
            radar_sum += confidences[i] * e * e;
            ++out.radar_count;
        } else {
            const double e = mean_pred[i] - ref_values[i];
            ref_sum += e * e;
            ++out.ref_count;
        }
        // Variance around the first pass: identical algebra, and exactly
        // zero when the passes coincide bitwise (dropout disabled).
        const double base = passes[0][i];
        double dev_mean = 0.0;
        for (const auto& p : passes) dev_mean += p[i] - base;
        dev_mean /= n_passes;
        double var = 0.0;
        for (const auto& p : passes) {
            const double d = (p[i] - base) - dev_mean;
            var += d * d;
        }
        var_sum += var / n_passes;
        ++out.cell_count;
    }
    if (out.radar_count > 0) out.radar = radar_sum / static_cast<double>(out.radar_count);
    if (out.ref_count > 0) out.ref = ref_sum / static_cast<double>(out.ref_count);
    if (out.cell_count > 0) out.unc = var_sum / static_cast<double>(out.cell_count);
    return out;
}

double balanced_total(const LossTerms& terms, const BalancerState& balancer,
                      bool include_ref) {
    const std::array<double, 3> losses = {terms.radar, terms.ref, terms.unc};
    double total = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
        if (k == 1 && !include_ref) continue;
        const double s = balancer.log_sigma[k];
        total += 0.5 * std::exp(-2.0 * s) * losses[k] + s;
    }
    return total;
}

std::array<double, 3> balancer_gradients(const LossTerms& terms,
                                         const BalancerState& balancer, bool include_ref) {
    const std::array<double, 3> losses = {terms.radar, terms.ref, terms.unc};
    std::array<double, 3> g{0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < 3; ++k) {
        if (k == 1 && !include_ref) continue;
        g[k] = -std::exp(-2.0 * balancer.log_sigma[k]) * losses[k] + 1.0;
    }
    return g;
}

DilatedSupervision dilate_radar(const std::vector<double>& radar_values,
                                const std::vector<std::uint8_t>& radar_mask, int height,
                                int width, double radius, double sigma) {
    if (sigma <= 0.0) throw ConfigError("dilate_radar: sigma must be > 0");
    const SiteTransform st = nearest_site_transform(radar_mask, height, width);
    const ConfidenceMap conf = confidence_from_distance(st.distances, sigma);

    DilatedSupervision out;
    out.values = radar_values;
    out.mask = radar_mask;
    out.confidences.assign(radar_values.size(), 0.0);
    for (std::size_t i = 0; i < radar_values.size(); ++i) {
        if (radar_mask[i]) {
            out.confidences[i] = 1.0;
        } else if (radius > 0.0 && st.site[i] >= 0 && st.distances[i] <= radius) {
            out.mask[i] = 1;
            out.values[i] = radar_values[static_cast<std::size_t>(st.site[i])];
            out.confidences[i] = conf.confidences[i];
        }
    }
    return out;
}

}  // namespace bedrec
