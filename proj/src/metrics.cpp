#include "bedrec/metrics.hpp"

#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "bedrec/errors.hpp"

namespace bedrec {

namespace {

constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

// Normalized 11x11 Gaussian window.
const std::vector<double>& gaussian_window() {
    static const std::vector<double> w = [] {
        std::vector<double> out(kWindow * kWindow);
        const int half = kWindow / 2;
        double sum = 0.0;
        for (int r = 0; r < kWindow; ++r) {
            for (int c = 0; c < kWindow; ++c) {
                const double dr = r - half;
                const double dc = c - half;
                const double v = std::exp(-(dr * dr + dc * dc) / (2.0 * kWindowSigma * kWindowSigma));
                out[static_cast<std::size_t>(r) * kWindow + c] = v;
                sum += v;
            }
        }
        for (double& v : out) v /= sum;
        return out;
    }();
    return w;
}

}  // namespace

PointwiseMetrics pointwise_metrics(const std::vector<double>& pred,
                                   const std::vector<double>& ref,
                                   const std::vector<std::uint8_t>& mask) {
    if (pred.size() != ref.size() || pred.size() != mask.size()) {
        throw ShapeError("pointwise_metrics: array lengths disagree");
    }
    std::size_t n = 0;
    double ref_sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (mask[i]) {
            ref_sum += ref[i];
            ++n;
        }
    }
    if (n < 2) throw EmptyInputError("pointwise_metrics: need at least 2 masked cells");
    const double ref_mean = ref_sum / static_cast<double>(n);

    double abs_sum = 0.0;
    double sq_sum = 0.0;
    double ref_var_sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!mask[i]) continue;
        const double e = pred[i] - ref[i];
        abs_sum += std::abs(e);
        sq_sum += e * e;
        const double d = ref[i] - ref_mean;
        ref_var_sum += d * d;
    }
    PointwiseMetrics out;
    out.mae = abs_sum / static_cast<double>(n);
    out.rmse = std::sqrt(sq_sum / static_cast<double>(n));
    out.r2 = ref_var_sum > 0.0 ? 1.0 - sq_sum / ref_var_sum
                               : std::numeric_limits<double>::quiet_NaN();
    return out;
}

SsimStats ssim_stats(const std::vector<double>& pred, const std::vector<double>& ref,
                     int height, int width, double data_range) {
    if (height < kWindow || width < kWindow) {
        throw ShapeError("ssim: image smaller than the 11x11 window");
    }
    if (pred.size() != static_cast<std::size_t>(height) * width || pred.size() != ref.size()) {
        throw ShapeError("ssim: image shape mismatch");
    }
    const std::vector<double>& w = gaussian_window();
    const double c1 = (kK1 * data_range) * (kK1 * data_range);
    const double c2 = (kK2 * data_range) * (kK2 * data_range);

    double ssim_sum = 0.0;
    double lum_sum = 0.0;
    double cs_sum = 0.0;
    std::size_t windows = 0;
    for (int r0 = 0; r0 + kWindow <= height; ++r0) {
        for (int c0 = 0; c0 + kWindow <= width; ++c0) {
            double mx = 0.0, my = 0.0;
            for (int r = 0; r < kWindow; ++r) {
                const std::size_t base = static_cast<std::size_t>(r0 + r) * width + c0;
                const std::size_t wbase = static_cast<std::size_t>(r) * kWindow;
                for (int c = 0; c < kWindow; ++c) {
                    mx += w[wbase + c] * pred[base + c];
                    my += w[wbase + c] * ref[base + c];
                }
            }
            double vx = 0.0, vy = 0.0, cov = 0.0;
            for (int r = 0; r < kWindow; ++r) {
                const std::size_t base = static_cast<std::size_t>(r0 + r) * width + c0;
                const std::size_t wbase = static_cast<std::size_t>(r) * kWindow;
                for (int c = 0; c < kWindow; ++c) {
                    const double dx = pred[base + c] - mx;
                    const double dy = ref[base + c] - my;
                    vx += w[wbase + c] * dx * dx;
                    vy += w[wbase + c] * dy * dy;
                    cov += w[wbase + c] * dx * dy;
                }
            }
            const double lum = (2.0 * mx * my + c1) / (mx * mx + my * my + c1);
            const double cs = (2.0 * cov + c2) / (vx + vy + c2);
            ssim_sum += lum * cs;
            lum_sum += lum;
            cs_sum += cs;
            ++windows;
        }
    }
    SsimStats out;
    out.ssim = ssim_sum / static_cast<double>(windows);
    out.mean_luminance = lum_sum / static_cast<double>(windows);
    out.mean_contrast_structure = cs_sum / static_cast<double>(windows);
    return out;
}

double ssim(const std::vector<double>& pred, const std::vector<double>& ref, int height,
            int width, double data_range) {
    return ssim_stats(pred, ref, height, width, data_range).ssim;
}

double psnr(const std::vector<double>& pred, const std::vector<double>& ref,
            const std::vector<std::uint8_t>& mask, double data_range) {
    if (pred.size() != ref.size() || pred.size() != mask.size()) {
        throw ShapeError("psnr: array lengths disagree");
    }
    double sq_sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!mask[i]) continue;
        const double e = pred[i] - ref[i];
        sq_sum += e * e;
        ++n;
    }
    if (n == 0) throw EmptyInputError("psnr: no masked cells");
    const double mse = sq_sum / static_cast<double>(n);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(data_range * data_range / mse);
}

MetricsReport compute_report(const RasterGrid& pred, const RasterGrid& ref,
                             const std::vector<std::uint8_t>& mask,
                             double data_range_override) {
    if (pred.height != ref.height || pred.width != ref.width) {
        throw ShapeError("compute_report: grid shape mismatch");
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ref.cell_count(); ++i) {
        if (!mask[i]) continue;
        lo = std::min(lo, ref.values[i]);
        hi = std::max(hi, ref.values[i]);
    }
    MetricsReport out;
    out.data_range = data_range_override > 0.0 ? data_range_override : hi - lo;
    if (out.data_range <= 0.0) out.data_range = 1.0;  // degenerate reference

    const PointwiseMetrics pw = pointwise_metrics(pred.values, ref.values, mask);
    out.mae = pw.mae;
    out.rmse = pw.rmse;
    out.r2 = pw.r2;
    out.ssim = ssim(pred.values, ref.values, pred.height, pred.width, out.data_range);
    out.psnr = psnr(pred.values, ref.values, mask, out.data_range);
    for (std::uint8_t m : mask) out.cell_count += m;
    return out;
}

std::string metrics_to_json(const MetricsReport& report, int indent) {
    nlohmann::json j;
    auto number_or_sentinel = [](double v) -> nlohmann::json {
        if (std::isnan(v)) return nullptr;
        if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
        return v;
    };
    j["mae"] = number_or_sentinel(report.mae);
    j["rmse"] = number_or_sentinel(report.rmse);
    j["r2"] = number_or_sentinel(report.r2);
    j["ssim"] = number_or_sentinel(report.ssim);
    j["psnr"] = number_or_sentinel(report.psnr);
    j["cell_count"] = report.cell_count;
    j["data_range"] = number_or_sentinel(report.data_range);
    return j.dump(indent) + "\n";
}

}  // namespace bedrec
