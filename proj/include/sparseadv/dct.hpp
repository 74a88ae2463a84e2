#ifndef SPARSEADV_DCT_HPP
#define SPARSEADV_DCT_HPP

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <memory>

#include "sparseadv/image.hpp"

namespace sparseadv {

// Sparse-domain coefficients of an image, channel-major like the pixel
// layout, with the original dims kept around for inversion.
struct SparseVector {
  int channels = 0;
  int height = 0;
  int width = 0;
  Eigen::VectorXd coeffs;

  SparseVector() = default;
  SparseVector(int c, int h, int w)
      : channels(c),
        height(h),
        width(w),
        coeffs(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(c) * h * w)) {}

  Eigen::Index size() const { return coeffs.size(); }
  Eigen::Index plane() const {
    return static_cast<Eigen::Index>(height) * width;
  }
  auto channel(int c) { return coeffs.segment(c * plane(), plane()); }
  auto channel(int c) const { return coeffs.segment(c * plane(), plane()); }

  bool same_shape(const SparseVector& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

// Orthonormal 1-D cosine dictionary over the raster-ordered pixel vector.
// Column j (0-based) holds the basis vector
//   d[i][j] = a_j * cos(pi * (2i+1) * j / (2n)),   a_0 = sqrt(1/n),
//                                                  a_j = sqrt(2/n) otherwise,
// so frequency grows monotonically with the column index. Columns synthesize
// (x = D s); analysis is the transpose product (s = D^T x).
class DctDictionary {
 public:
  static constexpr std::size_t kDefaultByteCeiling = std::size_t{1} << 30;

  // Throws SizeError when n == 0 or the dense matrix would exceed the
  // ceiling.
  explicit DctDictionary(int n, std::size_t byte_ceiling = kDefaultByteCeiling);

  // Process-wide cache; dictionaries are immutable and shared freely across
  // threads.
  static std::shared_ptr<const DctDictionary> cached(
      int n, std::size_t byte_ceiling = kDefaultByteCeiling);

  int n() const { return n_; }
  const Eigen::MatrixXd& matrix() const { return entries_; }
  Eigen::MatrixXd::ConstColXpr column(int j) const { return entries_.col(j); }

 private:
  int n_;
  Eigen::MatrixXd entries_;
};

// Analysis: s = D^T x, per channel. Requires dict.n() == h*w.
SparseVector forward(const ImageTensor& img, const DctDictionary& dict);

// Synthesis: x = D s, per channel. The result is not clipped.
ImageTensor inverse(const SparseVector& s, const DctDictionary& dict);

}  // namespace sparseadv

#endif  // SPARSEADV_DCT_HPP
