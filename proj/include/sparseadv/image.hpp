#ifndef SPARSEADV_IMAGE_HPP
#define SPARSEADV_IMAGE_HPP

#include <Eigen/Core>
#include <cstdint>

#include "sparseadv/error.hpp"

namespace sparseadv {

// Pixel data in channel-major raster order, one length h*w vector per
// channel. Values are nominally in [0,1]; tensors produced by inverse
// transforms may leave that range until clip() is applied.
struct ImageTensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  Eigen::VectorXd pixels;

  ImageTensor() = default;
  ImageTensor(int c, int h, int w)
      : channels(c),
        height(h),
        width(w),
        pixels(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(c) * h * w)) {}

  Eigen::Index pixel_count() const { return pixels.size(); }
  Eigen::Index plane() const {
    return static_cast<Eigen::Index>(height) * width;
  }

  auto channel(int c) { return pixels.segment(c * plane(), plane()); }
  auto channel(int c) const { return pixels.segment(c * plane(), plane()); }

  bool same_shape(const ImageTensor& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

inline void require_same_shape(const ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b)) throw ShapeError("image shapes differ");
}

// Projects every pixel onto [0,1]. Idempotent.
inline ImageTensor clip(ImageTensor img) {
  img.pixels = img.pixels.cwiseMax(0.0).cwiseMin(1.0);
  return img;
}

}  // namespace sparseadv

#endif  // SPARSEADV_IMAGE_HPP
