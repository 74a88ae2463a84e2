#include "sparseadv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sparseadv {

double mse(const ImageTensor& a, const ImageTensor& b) {
  require_same_shape(a, b);
  const double n = static_cast<double>(a.pixel_count());
  return (a.pixels - b.pixels).squaredNorm() / n;
}

double psnr(double mse_value, double peak) {
  if (mse_value < 0.0) throw DomainError("mse must be nonnegative");
  if (mse_value == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse_value);
}

QualityReport quality(const ImageTensor& original,
                      const ImageTensor& adversarial, double peak) {
  QualityReport q;
  q.peak = peak;
  q.mse = mse(original, adversarial);
  q.psnr_db = psnr(q.mse, peak);
  return q;
}

double predicted_directed_mse(const Eigen::VectorXd& si_hat,
                              const Eigen::VectorXd& sj_hat, double delta,
                              std::int64_t n) {
  if (si_hat.size() != sj_hat.size()) {
    throw ShapeError("sparse vectors have different lengths");
  }
  if (std::abs(si_hat.norm() - 1.0) > 1e-9 ||
      std::abs(sj_hat.norm() - 1.0) > 1e-9) {
    throw DomainError("inputs must be unit-norm sparse vectors");
  }
  if (n <= 0) throw DomainError("pixel count must be positive");
  // Inner product of unit vectors lies in [-1, 1]; rounding can spill a few
  // ulps past the ends, which would make the result marginally negative.
  const double ip = std::clamp(si_hat.dot(sj_hat), -1.0, 1.0);
  return 2.0 * delta * delta / static_cast<double>(n) * (1.0 - ip);
}

double predicted_directed_mse(const SparseVector& si_hat,
                              const SparseVector& sj_hat, double delta) {
  if (!si_hat.same_shape(sj_hat)) {
    throw ShapeError("sparse vectors have different shapes");
  }
  return predicted_directed_mse(si_hat.coeffs, sj_hat.coeffs, delta,
                                si_hat.size());
}

}  // namespace sparseadv
