#include "sparseadv/dct.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <string>

namespace sparseadv {

DctDictionary::DctDictionary(int n, std::size_t byte_ceiling) : n_(n) {
  if (n <= 0) throw SizeError("dictionary size must be positive");
  const std::size_t bytes =
      static_cast<std::size_t>(n) * static_cast<std::size_t>(n) * sizeof(double);
  if (bytes > byte_ceiling) {
    throw SizeError("dictionary of size " + std::to_string(n) + " needs " +
                    std::to_string(bytes) + " bytes, ceiling is " +
                    std::to_string(byte_ceiling));
  }
  entries_.resize(n, n);
  const double pi = std::acos(-1.0);
  const double a0 = std::sqrt(1.0 / n);
  const double a = std::sqrt(2.0 / n);
  for (int j = 0; j < n; ++j) {
    const double amp = (j == 0) ? a0 : a;
    for (int i = 0; i < n; ++i) {
      entries_(i, j) = amp * std::cos(pi * (2.0 * i + 1.0) * j / (2.0 * n));
    }
  }
}

std::shared_ptr<const DctDictionary> DctDictionary::cached(
    int n, std::size_t byte_ceiling) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const DctDictionary>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  auto dict = std::make_shared<const DctDictionary>(n, byte_ceiling);
  cache.emplace(n, dict);
  return dict;
}

SparseVector forward(const ImageTensor& img, const DctDictionary& dict) {
  if (img.plane() != dict.n()) {
    throw ShapeError("dictionary size " + std::to_string(dict.n()) +
                     " does not match channel length " +
                     std::to_string(img.plane()));
  }
  SparseVector s(img.channels, img.height, img.width);
  for (int c = 0; c < img.channels; ++c) {
    s.channel(c) = dict.matrix().transpose() * img.channel(c);
  }
  return s;
}

ImageTensor inverse(const SparseVector& s, const DctDictionary& dict) {
  if (s.plane() != dict.n()) {
    throw ShapeError("dictionary size " + std::to_string(dict.n()) +
                     " does not match channel length " +
                     std::to_string(s.plane()));
  }
  ImageTensor img(s.channels, s.height, s.width);
  for (int c = 0; c < s.channels; ++c) {
    img.channel(c) = dict.matrix() * s.channel(c);
  }
  return img;
}

}  // namespace sparseadv
