#ifndef SPARSEADV_METRICS_HPP
#define SPARSEADV_METRICS_HPP

#include <cstdint>

#include "sparseadv/dct.hpp"
#include "sparseadv/image.hpp"

namespace sparseadv {

struct QualityReport {
  double mse = 0.0;
  double psnr_db = 0.0;  // +infinity when mse == 0
  double peak = 1.0;
};

// Mean squared pixel error over all channels.
double mse(const ImageTensor& a, const ImageTensor& b);

// 10*log10(peak^2/mse); +infinity at mse == 0, DomainError for negative mse.
double psnr(double mse_value, double peak = 1.0);

QualityReport quality(const ImageTensor& original,
                      const ImageTensor& adversarial, double peak = 1.0);

// Closed-form pixel-domain MSE of the directed perturbation
//   (2 * delta^2 / n) * (1 - <si_hat, sj_hat>)
// for unit-norm sparse vectors, where n is the total pixel count. The value
// always lies in [0, 4*delta^2/n]. Inputs must be unit vectors within 1e-9.
double predicted_directed_mse(const Eigen::VectorXd& si_hat,
                              const Eigen::VectorXd& sj_hat, double delta,
                              std::int64_t n);
double predicted_directed_mse(const SparseVector& si_hat,
                              const SparseVector& sj_hat, double delta);

}  // namespace sparseadv

#endif  // SPARSEADV_METRICS_HPP
