#include "styler/metrics.hpp"

#include <cmath>
#include <limits>

#include "styler/spatial_ops.hpp"

namespace styler {

double mean_squared_error(const Plane& a, const Plane& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidInput("metric inputs differ in size");
  return (a - b).square().mean();
}

double psnr(const Plane& a, const Plane& b, double peak) {
  const double mse = mean_squared_error(a, b);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double mssim(const Plane& a, const Plane& b, double peak) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidInput("metric inputs differ in size");
  Eigen::VectorXd window(11);
  for (int i = -5; i <= 5; ++i) window[i + 5] = std::exp(-0.5 * i * i / (1.5 * 1.5));
  window /= window.sum();
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  const Plane mu_a = convolve_separable(a, window);
  const Plane mu_b = convolve_separable(b, window);
  const Plane var_a = convolve_separable(a * a, window) - mu_a.square();
  const Plane var_b = convolve_separable(b * b, window) - mu_b.square();
  const Plane cov = convolve_separable(a * b, window) - mu_a * mu_b;
  const Plane ssim = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                     ((mu_a.square() + mu_b.square() + c1) * (var_a + var_b + c2));
  return ssim.mean();
}

double total_variation(const Plane& u) {
  const Eigen::Index h = u.rows(), w = u.cols();
  double tv = 0.0;
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x) {
      const double dx = x + 1 < w ? u(y, x + 1) - u(y, x) : 0.0;
      const double dy = y + 1 < h ? u(y + 1, x) - u(y, x) : 0.0;
      tv += std::sqrt(dx * dx + dy * dy);
    }
  return tv;
}

}  // namespace styler
