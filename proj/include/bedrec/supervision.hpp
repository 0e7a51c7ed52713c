#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace bedrec {

/// Per-cell distance to the nearest radar-observed cell and the resulting
/// exponential-decay confidence exp(-d^2 / (2 sigma^2)).
struct ConfidenceMap {
    std::vector<double> distances;
    std::vector<double> confidences;
    double sigma = 0.0;
};

/// Exact Euclidean distance (cell units) from every cell to the nearest
/// true cell. All-false mask yields +inf everywhere.
std::vector<double> euclidean_distance_transform(const std::vector<std::uint8_t>& mask,
                                                 int height, int width);

/// Distance transform that also reports the nearest true cell's index
/// (-1 when the mask is empty).
struct SiteTransform {
    std::vector<double> distances;
    std::vector<std::int32_t> site;
};
SiteTransform nearest_site_transform(const std::vector<std::uint8_t>& mask, int height,
                                     int width);

ConfidenceMap confidence_from_distance(const std::vector<double>& distances, double sigma);

/// The three hybrid-loss components plus the cell counts they averaged over.
struct LossTerms {
    double radar = 0.0;
    double ref = 0.0;
    double unc = 0.0;
    std::size_t radar_count = 0;
    std::size_t ref_count = 0;
    std::size_t cell_count = 0;
};

/// L_radar: confidence-weighted MSE on radar cells; L_ref: MSE against the
/// reference bed on non-radar valid cells; L_unc: mean population variance
/// across the stochastic passes. All restricted to eval_mask; empty sets
/// contribute 0 with count 0.
LossTerms loss_terms(const std::vector<double>& mean_pred,
                     const std::vector<std::vector<double>>& passes,
                     const std::vector<double>& radar_values,
                     const std::vector<std::uint8_t>& radar_mask,
                     const std::vector<double>& confidences,
                     const std::vector<double>& ref_values,
                     const std::vector<std::uint8_t>& valid_mask,
                     const std::vector<std::uint8_t>& eval_mask);

/// Learnable log-sigma weights of the loss balancer, order (radar, ref, unc).
struct BalancerState {
    std::array<double, 3> log_sigma{0.0, 0.0, 0.0};
};

/// Total = sum_k exp(-2 s_k)/2 * L_k + s_k over the active terms.
double balanced_total(const LossTerms& terms, const BalancerState& balancer,
                      bool include_ref = true);

/// d total / d s_k = -exp(-2 s_k) * L_k + 1 per active term, 0 otherwise.
std::array<double, 3> balancer_gradients(const LossTerms& terms,
                                         const BalancerState& balancer,
                                         bool include_ref = true);

/// Optional supervision dilation: extends the radar set to all cells within
/// `radius` (cell units) of an observed cell, copying the nearest cell's
/// value and assigning the decayed confidence. radius <= 0 returns the
/// inputs unchanged with confidence 1 on the mask.
struct DilatedSupervision {
    std::vector<double> values;
    std::vector<double> confidences;
    std::vector<std::uint8_t> mask;
};
DilatedSupervision dilate_radar(const std::vector<double>& radar_values,
                                const std::vector<std::uint8_t>& radar_mask, int height,
                                int width, double radius, double sigma);

}  // namespace bedrec
