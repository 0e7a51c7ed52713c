#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bedrec/raster.hpp"

namespace bedrec {

struct PointwiseMetrics {
    double mae = 0.0;
    double rmse = 0.0;
    double r2 = 0.0;  // NaN sentinel when the reference has zero variance
};

PointwiseMetrics pointwise_metrics(const std::vector<double>& pred,
                                   const std::vector<double>& ref,
                                   const std::vector<std::uint8_t>& mask);

/// Mean SSIM over all fully interior 11x11 Gaussian windows (sigma 1.5,
/// K1 = 0.01, K2 = 0.03).
double ssim(const std::vector<double>& pred, const std::vector<double>& ref, int height,
            int width, double data_range);

/// SSIM split into its luminance and contrast-structure factors (window
/// means of each), used by shift-invariance checks.
struct SsimStats {
    double ssim = 0.0;
    double mean_luminance = 0.0;
    double mean_contrast_structure = 0.0;
};
SsimStats ssim_stats(const std::vector<double>& pred, const std::vector<double>& ref,
                     int height, int width, double data_range);

/// 10 log10(L^2 / MSE); +inf when MSE is zero.
double psnr(const std::vector<double>& pred, const std::vector<double>& ref,
            const std::vector<std::uint8_t>& mask, double data_range);

struct MetricsReport {
    double mae = 0.0;
    double rmse = 0.0;
    double r2 = 0.0;
    double ssim = 0.0;
    double psnr = 0.0;
    std::size_t cell_count = 0;
    double data_range = 0.0;
};

/// Full report of one prediction against a reference. Pointwise metrics and
/// PSNR honor the mask; SSIM is window-structured and computed over the full
/// grid. data_range defaults to the reference max - min over masked cells
/// (pass a positive override to pin it).
MetricsReport compute_report(const RasterGrid& pred, const RasterGrid& ref,
                             const std::vector<std::uint8_t>& mask,
                             double data_range_override = 0.0);

/// Flat JSON object with the report's seven fields. Non-finite values are
/// serialized as the strings "inf" / "-inf" and r2's NaN sentinel as null.
std::string metrics_to_json(const MetricsReport& report, int indent = 2);

}  // namespace bedrec
