#ifndef SPARSEADV_SYNTH_HPP
#define SPARSEADV_SYNTH_HPP

#include <cstdint>

#include "sparseadv/dataset.hpp"

namespace sparseadv {

// Deterministic MNIST-format benchmark data: 28x28 grayscale, 10 classes,
// 8-bit quantized pixels. Each class mixes a shared smooth background with
// class-keyed low-frequency offsets and mid-frequency signatures, plus
// per-sample jitter and occasional cross-class contamination, so a
// nearest-centroid model separates the classes well but not perfectly.
struct SynthConfig {
  int classes = 10;
  int height = 28;
  int width = 28;
  int train_per_class = 100;
  int test_per_class = 50;
  std::uint64_t seed = 0x5eedD15C;
};

struct SynthDataset {
  DatasetHandle train;
  DatasetHandle test;
};

// Sample i of a class is a pure function of (seed, split, class, i), so
// growing a split extends it without disturbing existing samples.
SynthDataset make_synthetic_dataset(const SynthConfig& config);

}  // namespace sparseadv

#endif  // SPARSEADV_SYNTH_HPP
