#include "sparseadv/synth.hpp"

#include <cmath>

#include "sparseadv/dct.hpp"
#include "sparseadv/rng.hpp"

namespace sparseadv {

namespace {

// Coefficient-domain layout of the generated patterns. The shared background
// sits at the lowest indices, class signatures in the middle band, and the
// top band stays empty apart from quantization noise, mirroring how energy
// falls off in natural photographs.
constexpr int kBackgroundIdx[3] = {1, 2, 4};
constexpr double kBackgroundAmp[3] = {3.2, 2.4, 1.8};
constexpr int kTweakIdx[3] = {3, 5, 6};
constexpr double kTweakSpread = 0.95;
constexpr double kDcBase = 14.0;
constexpr double kDcJitter = 0.5;
constexpr double kBackgroundJitter = 0.18;
constexpr double kSignatureAmpA = 2.3;
constexpr double kSignatureAmpB = 2.0;
constexpr double kSignatureJitter = 0.65;
constexpr double kContaminationScale = 0.9;
constexpr int kBroadNoiseCount = 30;
constexpr double kBroadNoiseAmp = 0.34;
constexpr int kHighNoiseCount = 6;
constexpr double kHighNoiseAmp = 0.12;

int signature_index_a(int cls) { return 260 + 26 * cls; }
int signature_index_b(int cls) { return 300 + 26 * cls; }

struct ClassProfile {
  double tweak[3];
  double sig_a;
  double sig_b;
};

ClassProfile class_profile(std::uint64_t seed, int cls) {
  NormalSampler rng(derive_stream(splitmix64(seed ^ 0xc1a55e5ULL),
                                  static_cast<std::uint64_t>(cls)));
  ClassProfile p{};
  for (double& t : p.tweak) {
    t = kTweakSpread * (2.0 * rng.uniform01() - 1.0);
  }
  p.sig_a = kSignatureAmpA;
  p.sig_b = kSignatureAmpB;
  return p;
}

ImageTensor make_sample(const SynthConfig& cfg, const DctDictionary& dict,
                        int split, int cls, int index) {
  const std::uint64_t stream =
      (static_cast<std::uint64_t>(split) << 40) |
      (static_cast<std::uint64_t>(cls) << 24) |
      static_cast<std::uint64_t>(index);
  NormalSampler rng(derive_stream(cfg.seed, stream));

  const int n = cfg.height * cfg.width;
  SparseVector coef(1, cfg.height, cfg.width);

  coef.coeffs[0] = kDcBase + kDcJitter * rng.next();
  for (int t = 0; t < 3; ++t) {
    coef.coeffs[kBackgroundIdx[t]] =
        kBackgroundAmp[t] * (1.0 + kBackgroundJitter * rng.next());
  }

  const ClassProfile own = class_profile(cfg.seed, cls);
  for (int t = 0; t < 3; ++t) {
    coef.coeffs[kTweakIdx[t]] += own.tweak[t] * (1.0 + 0.3 * rng.next());
  }
  coef.coeffs[signature_index_a(cls)] +=
      own.sig_a * (1.0 + kSignatureJitter * rng.next());
  coef.coeffs[signature_index_b(cls)] +=
      own.sig_b * (1.0 + kSignatureJitter * rng.next());

  // Occasional blend-in of another class's signature puts a slice of every
  // class near a decision boundary, the way ambiguous digits would be.
  const int other =
      static_cast<int>(rng.uniform01() * cfg.classes) % cfg.classes;
  if (other != cls) {
    const double u = rng.uniform01();
    const double w = kContaminationScale * u * u;
    const ClassProfile theirs = class_profile(cfg.seed, other);
    coef.coeffs[signature_index_a(other)] += w * theirs.sig_a;
    coef.coeffs[signature_index_b(other)] += w * theirs.sig_b;
    for (int t = 0; t < 3; ++t) {
      coef.coeffs[kTweakIdx[t]] += w * theirs.tweak[t];
    }
  }

  for (int t = 0; t < kBroadNoiseCount; ++t) {
    const int idx = 1 + static_cast<int>(rng.uniform01() * 540.0) % 540;
    coef.coeffs[idx] += kBroadNoiseAmp * rng.next();
  }
  for (int t = 0; t < kHighNoiseCount; ++t) {
    const int idx = 560 + static_cast<int>(rng.uniform01() * 224.0) % 224;
    coef.coeffs[idx] += kHighNoiseAmp * rng.next();
  }

  ImageTensor img = clip(inverse(coef, dict));
  // 8-bit quantization, so IDX save/load reproduces the tensors exactly.
  for (Eigen::Index p = 0; p < n; ++p) {
    img.pixels[p] = std::lround(img.pixels[p] * 255.0) / 255.0;
  }
  return img;
}

DatasetHandle make_split(const SynthConfig& cfg, const DctDictionary& dict,
                         int split, int per_class) {
  DatasetHandle ds;
  ds.format = "synthetic";
  ds.source = "synthetic(seed=" + std::to_string(cfg.seed) + ")";
  ds.num_classes = cfg.classes;
  ds.images.reserve(static_cast<std::size_t>(per_class) * cfg.classes);
  for (int i = 0; i < per_class; ++i) {
    for (int cls = 0; cls < cfg.classes; ++cls) {
      ds.images.push_back(make_sample(cfg, dict, split, cls, i));
      ds.labels.push_back(cls);
    }
  }
  return ds;
}

}  // namespace

SynthDataset make_synthetic_dataset(const SynthConfig& config) {
  if (config.classes < 2 || config.classes > 10) {
    throw RangeError("synthetic dataset supports 2..10 classes");
  }
  if (config.height != 28 || config.width != 28) {
    throw RangeError("synthetic dataset is 28x28 only");
  }
  auto dict = DctDictionary::cached(config.height * config.width);
  SynthDataset out;
  out.train = make_split(config, *dict, 0, config.train_per_class);
  out.test = make_split(config, *dict, 1, config.test_per_class);
  return out;
}

}  // namespace sparseadv
