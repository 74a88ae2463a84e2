#ifndef SPARSEADV_DATASET_HPP
#define SPARSEADV_DATASET_HPP

#include <string>
#include <vector>

#include "sparseadv/image.hpp"

namespace sparseadv {

struct DatasetHandle {
  std::vector<ImageTensor> images;
  std::vector<int> labels;
  int num_classes = 0;
  std::string source;  // provenance: path(s) the data came from
  std::string format;  // "idx", "pnm", "synthetic"

  std::size_t size() const { return images.size(); }
};

// Checks |images| == |labels|, labels within [0, num_classes), uniform
// dimensions. Throws ParseError on violation.
void validate(const DatasetHandle& ds);

// IDX ubyte pair (big-endian): images magic 0x00000803 with dims
// (count, rows, cols), labels magic 0x00000801. Pixels are scaled by 1/255.
DatasetHandle load_idx(const std::string& images_path,
                       const std::string& labels_path);

// Writes the dataset back out as an IDX pair, quantizing each pixel to
// round(p * 255). Lossless for data that came from IDX files.
void save_idx(const DatasetHandle& ds, const std::string& images_path,
              const std::string& labels_path);

// Binary PNM (P5 grayscale / P6 color, maxval 255) plus a manifest CSV of
// `filename,label` rows. Every PNM file in the directory must appear in the
// manifest, and all images must agree on dimensions.
DatasetHandle load_pnm(const std::string& dir_path,
                       const std::string& manifest_path);

}  // namespace sparseadv

#endif  // SPARSEADV_DATASET_HPP
