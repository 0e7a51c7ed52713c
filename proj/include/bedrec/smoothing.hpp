#pragma once

#include <vector>

namespace bedrec {

/// Normalized 1-D Gaussian kernel with radius floor(truncate * sigma + 0.5).
std::vector<double> gaussian_kernel(double sigma, double truncate = 4.0);

/// Separable Gaussian blur with reflect padding (edge value included:
/// d c b a | a b c d | d c b a).
std::vector<double> gaussian_blur(const std::vector<double>& values, int height, int width,
                                  double sigma, double truncate = 4.0);

}  // namespace bedrec
