#include "bedrec/smoothing.hpp"

#include <cmath>

#include "bedrec/errors.hpp"

namespace bedrec {

namespace {

// Reflect index into [0, n) with edge repetition (scipy 'reflect').
int reflect(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

}  // namespace

std::vector<double> gaussian_kernel(double sigma, double truncate) {
    if (sigma <= 0.0) throw ConfigError("gaussian_kernel: sigma must be > 0");
    const int radius = static_cast<int>(truncate * sigma + 0.5);
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        kernel[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (double& v : kernel) v /= sum;
    return kernel;
}

std::vector<double> gaussian_blur(const std::vector<double>& values, int height, int width,
                                  double sigma, double truncate) {
    if (values.size() != static_cast<std::size_t>(height) * width) {
        throw ShapeError("gaussian_blur: value count mismatch");
    }
    const std::vector<double> kernel = gaussian_kernel(sigma, truncate);
    const int radius = static_cast<int>(kernel.size() / 2);

    std::vector<double> tmp(values.size());
    for (int r = 0; r < height; ++r) {
        const std::size_t base = static_cast<std::size_t>(r) * width;
        for (int c = 0; c < width; ++c) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                acc += kernel[static_cast<std::size_t>(k + radius)] *
                       values[base + static_cast<std::size_t>(reflect(c + k, width))];
            }
            tmp[base + static_cast<std::size_t>(c)] = acc;
        }
    }
    std::vector<double> out(values.size());
    for (int c = 0; c < width; ++c) {
        for (int r = 0; r < height; ++r) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                acc += kernel[static_cast<std::size_t>(k + radius)] *
                       tmp[static_cast<std::size_t>(reflect(r + k, height)) * width + c];
            }
            out[static_cast<std::size_t>(r) * width + c] = acc;
        }
    }
    return out;
}

}  // namespace bedrec
