#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "sparseadv/attacks.hpp"
#include "sparseadv/metrics.hpp"
#include "support/test_oracles.hpp"

using namespace sparseadv;

namespace {

ImageTensor random_image(int c, int h, int w, std::uint64_t seed, double lo,
                         double hi) {
  ImageTensor img(c, h, w);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> uni(lo, hi);
  for (Eigen::Index i = 0; i < img.pixel_count(); ++i) img.pixels[i] = uni(gen);
  return img;
}

ImageTensor constant_image(int c, int h, int w, double v) {
  ImageTensor img(c, h, w);
  img.pixels.setConstant(v);
  return img;
}

// Flips to label 1 for any image that is not bitwise the remembered one.
class FlipExceptBase final : public Oracle {
 public:
  explicit FlipExceptBase(ImageTensor base) : base_(std::move(base)) {}
  int num_classes() const override { return 2; }

 protected:
  OracleVerdict predict(const ImageTensor& img) const override {
    const bool same = (img.pixels - base_.pixels).cwiseAbs().maxCoeff() == 0.0;
    return OracleVerdict{same ? 0 : 1, {}};
  }

 private:
  ImageTensor base_;
};

bool results_identical(const AttackResult& a, const AttackResult& b) {
  if (a.outcome != b.outcome || a.queries_used != b.queries_used ||
      a.original_label != b.original_label ||
      a.adversarial_label != b.adversarial_label ||
      a.final_mse != b.final_mse || a.final_psnr != b.final_psnr ||
      a.preclip_mse != b.preclip_mse ||
      a.preclip_mse_trace != b.preclip_mse_trace) {
    return false;
  }
  if (a.adversarial_image.has_value() != b.adversarial_image.has_value()) {
    return false;
  }
  if (a.adversarial_image &&
      (a.adversarial_image->pixels - b.adversarial_image->pixels)
              .cwiseAbs()
              .maxCoeff() != 0.0) {
    return false;
  }
  return true;
}

}  // namespace

TEST_CASE("every candidate hits the MSE budget pre-clip") {
  const auto dict = DctDictionary::cached(784);
  const ImageTensor img = random_image(1, 28, 28, 11, 0.0, 1.0);
  const testing::ConstantOracle oracle(0, 2);
  AttackConfig cfg;
  cfg.strategy = Strategy::kLaS;
  cfg.k = 8;
  cfg.mse_budget = 0.001;
  cfg.query_budget = 40;
  cfg.rng_seed = 7;
  const AttackResult result =
      random_query_attack(img, 0, oracle, cfg, *dict);
  CHECK(result.outcome == Outcome::kBudgetExhausted);
  CHECK(result.queries_used == 40);
  REQUIRE(result.preclip_mse_trace.size() == 40);
  for (const double m : result.preclip_mse_trace) {
    CHECK(std::abs(m - 0.001) <= 1e-9);
    // norm of the pixel perturbation: sqrt(784 * 0.001) ~ 0.88544
    CHECK(std::sqrt(m * 784.0) == doctest::Approx(0.88544).epsilon(1e-3));
  }
}

TEST_CASE("seeded attacks are bitwise reproducible") {
  const auto dict = DctDictionary::cached(64);
  const ImageTensor img = random_image(1, 8, 8, 3, 0.0, 1.0);
  const testing::ConstantOracle oracle(0, 2);
  AttackConfig cfg;
  cfg.k = 4;
  cfg.query_budget = 25;
  cfg.rng_seed = 99;
  const AttackResult a = random_query_attack(img, 0, oracle, cfg, *dict, 5);
  const AttackResult b = random_query_attack(img, 0, oracle, cfg, *dict, 5);
  CHECK(results_identical(a, b));

  // A different stream draws different noise.
  const AttackResult c = random_query_attack(img, 0, oracle, cfg, *dict, 6);
  CHECK(a.preclip_mse_trace != c.preclip_mse_trace);
}

TEST_CASE("far-apart centroids exhaust the budget") {
  // Centroid distance 0.8*sqrt(784) = 22.4 dwarfs the 0.885 perturbation
  // norm, so no in-budget candidate can cross the decision boundary.
  const ImageTensor c0 = constant_image(1, 28, 28, 0.1);
  const ImageTensor c1 = constant_image(1, 28, 28, 0.9);
  const CentroidOracle oracle(train_centroid({c0, c1}, {0, 1}));
  const auto dict = DctDictionary::cached(784);
  AttackConfig cfg;
  cfg.k = 8;
  cfg.mse_budget = 0.001;
  cfg.query_budget = 30;
  cfg.rng_seed = 1;
  const AttackResult result = random_query_attack(c0, 0, oracle, cfg, *dict);
  CHECK(result.outcome == Outcome::kBudgetExhausted);
  CHECK(result.queries_used == cfg.query_budget);
  CHECK(!result.adversarial_label.has_value());
  CHECK(!result.adversarial_image.has_value());
}

TEST_CASE("successful runs satisfy the success contract") {
  const auto dict = DctDictionary::cached(64);
  const ImageTensor img = random_image(1, 8, 8, 21, 0.3, 0.7);
  const FlipExceptBase oracle(img);
  AttackConfig cfg;
  cfg.k = 4;
  cfg.mse_budget = 0.001;
  cfg.query_budget = 10;
  cfg.rng_seed = 13;
  const AttackResult result = random_query_attack(img, 0, oracle, cfg, *dict);
  REQUIRE(result.outcome == Outcome::kSuccess);
  CHECK(result.queries_used == 1);
  CHECK(result.adversarial_label.value() == 1);
  CHECK(result.adversarial_label.value() != result.original_label);
  CHECK(result.final_mse <= cfg.mse_budget);
  CHECK(result.final_mse > 0.0);
  REQUIRE(result.adversarial_image.has_value());
  CHECK(mse(img, *result.adversarial_image) == result.final_mse);
}

TEST_CASE("random perturbation lives on the selected support only") {
  const auto dict = DctDictionary::cached(64);
  // Mid-gray interior keeps the candidate inside [0,1], so no clipping and
  // the adversarial image is exactly original + D*noise.
  const ImageTensor img = random_image(1, 8, 8, 31, 0.35, 0.65);
  const FlipExceptBase oracle(img);
  AttackConfig cfg;
  cfg.strategy = Strategy::kLoF;
  cfg.k = 5;
  cfg.mse_budget = 0.001;
  cfg.query_budget = 4;
  cfg.rng_seed = 4;
  const AttackResult result = random_query_attack(img, 0, oracle, cfg, *dict);
  REQUIRE(result.outcome == Outcome::kSuccess);

  ImageTensor delta = *result.adversarial_image;
  delta.pixels -= img.pixels;
  const SparseVector coeffs = forward(delta, *dict);
  for (int i = 5; i < 64; ++i) {
    CHECK(std::abs(coeffs.coeffs[i]) <= 1e-12);
  }
  double on_support = 0.0;
  for (int i = 0; i < 5; ++i) on_support += std::abs(coeffs.coeffs[i]);
  CHECK(on_support > 0.0);
}

TEST_CASE("clip policies agree when nothing clips") {
  const auto dict = DctDictionary::cached(64);
  const ImageTensor img = random_image(1, 8, 8, 41, 0.35, 0.65);
  const testing::ConstantOracle oracle(0, 2);
  AttackConfig cfg;
  cfg.k = 4;
  cfg.query_budget = 15;
  cfg.rng_seed = 77;
  cfg.clip_policy = ClipPolicy::kClipAndMeasurePostclip;
  const AttackResult a = random_query_attack(img, 0, oracle, cfg, *dict);
  cfg.clip_policy = ClipPolicy::kRejectIfPostclipExceeds;
  const AttackResult b = random_query_attack(img, 0, oracle, cfg, *dict);
  CHECK(results_identical(a, b));
}

TEST_CASE("invalid configs are rejected") {
  const auto dict = DctDictionary::cached(4);
  const ImageTensor img = random_image(1, 2, 2, 1, 0.0, 1.0);
  const testing::ConstantOracle oracle(0, 2);
  AttackConfig cfg;
  cfg.k = 2;
  cfg.mse_budget = 0.0;
  CHECK_THROWS_AS(random_query_attack(img, 0, oracle, cfg, *dict), RangeError);
  cfg.mse_budget = 0.001;
  cfg.query_budget = 0;
  CHECK_THROWS_AS(random_query_attack(img, 0, oracle, cfg, *dict), RangeError);
  cfg.query_budget = 1;
  cfg.k = 5;  // > N
  CHECK_THROWS_AS(random_query_attack(img, 0, oracle, cfg, *dict), RangeError);
}

TEST_CASE("directed attack reproduces the two-pixel hand example") {
  const auto dict = DctDictionary::cached(2);
  // s_i = [2, 0]  ->  x = 2 * column 0
  SparseVector si(1, 1, 2);
  si.coeffs << 2.0, 0.0;
  const ImageTensor img = inverse(si, *dict);
  // Candidate with s_hat_j = [0, 1].
  SparseVector sj(1, 1, 2);
  sj.coeffs << 0.0, 1.0;
  const ImageTensor other = inverse(sj, *dict);

  auto candidates = std::make_shared<CandidateSet>(
      std::vector<ImageTensor>{other}, std::vector<int>{1});
  DirectedConfig cfg;
  cfg.delta = 0.1;
  cfg.k = 1;
  cfg.candidates = candidates;
  const testing::ConstantOracle oracle(0, 2);
  const AttackResult result = directed_attack(img, 0, oracle, cfg, *dict);

  // d = [1, -1], delta = 0.1: squared pixel error 0.02, MSE 0.01.
  CHECK(result.directed_candidate == 0);
  CHECK(result.preclip_mse == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(result.predicted_mse == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(result.queries_used == 1);
  CHECK(result.outcome == Outcome::kBudgetExhausted);
}

TEST_CASE("delta zero leaves the image unchanged and fails") {
  const auto dict = DctDictionary::cached(64);
  const ImageTensor img = random_image(1, 8, 8, 51, 0.1, 0.9);
  const ImageTensor other = random_image(1, 8, 8, 52, 0.1, 0.9);
  auto candidates = std::make_shared<CandidateSet>(
      std::vector<ImageTensor>{other}, std::vector<int>{1});
  DirectedConfig cfg;
  cfg.delta = 0.0;
  cfg.k = 4;
  cfg.candidates = candidates;
  const testing::ConstantOracle oracle(0, 2);
  const AttackResult result = directed_attack(img, 0, oracle, cfg, *dict);
  CHECK(result.outcome == Outcome::kBudgetExhausted);
  CHECK(result.preclip_mse <= 1e-18);
  CHECK(result.final_mse <= 1e-18);
}

TEST_CASE("the most correlated cross-class candidate wins; ties to lowest") {
  const auto dict = DctDictionary::cached(16);
  SparseVector si(1, 4, 4);
  si.coeffs.setZero();
  si.coeffs[0] = 10.0;
  si.coeffs[1] = 3.0;
  const ImageTensor img = inverse(si, *dict);

  auto make_candidate = [&](std::initializer_list<std::pair<int, double>> cs) {
    SparseVector s(1, 4, 4);
    s.coeffs.setZero();
    for (const auto& [idx, v] : cs) s.coeffs[idx] = v;
    return inverse(s, *dict);
  };
  // Candidate 0: same-class lookalike (must be skipped).
  // Candidate 1: correlated cross-class. Candidate 2: orthogonal cross-class.
  std::vector<ImageTensor> images = {
      make_candidate({{0, 10.0}, {1, 3.0}}),
      make_candidate({{0, 9.0}, {1, 4.0}}),
      make_candidate({{2, 7.0}, {3, 7.0}}),
  };
  auto candidates = std::make_shared<CandidateSet>(
      std::move(images), std::vector<int>{0, 1, 1});
  DirectedConfig cfg;
  cfg.delta = 0.2;
  cfg.k = 2;
  cfg.candidates = candidates;
  const testing::ConstantOracle oracle(0, 2);
  const AttackResult result = directed_attack(img, 0, oracle, cfg, *dict);
  CHECK(result.directed_candidate == 1);

  // Duplicate the winner at a later index: the earlier one must keep winning.
  std::vector<ImageTensor> dup = {candidates->image(1), candidates->image(1),
                                  candidates->image(2)};
  auto tied = std::make_shared<CandidateSet>(std::move(dup),
                                             std::vector<int>{1, 1, 1});
  cfg.candidates = tied;
  const AttackResult tie_result = directed_attack(img, 0, oracle, cfg, *dict);
  CHECK(tie_result.directed_candidate == 0);
}

TEST_CASE("measured pre-clip MSE equals the closed form across draws") {
  const auto dict = DctDictionary::cached(64);
  std::mt19937_64 gen(61);
  std::uniform_real_distribution<double> uni(0.05, 0.95);
  const testing::ConstantOracle oracle(0, 2);
  for (int trial = 0; trial < 25; ++trial) {
    ImageTensor img(1, 8, 8);
    ImageTensor other(1, 8, 8);
    for (int i = 0; i < 64; ++i) {
      img.pixels[i] = uni(gen);
      other.pixels[i] = uni(gen);
    }
    auto candidates = std::make_shared<CandidateSet>(
        std::vector<ImageTensor>{other}, std::vector<int>{1});
    DirectedConfig cfg;
    cfg.delta = 0.05 + 4.0 * std::generate_canonical<double, 53>(gen);
    cfg.k = 1 + static_cast<int>(gen() % 16);
    cfg.candidates = candidates;
    const AttackResult r = directed_attack(img, 0, oracle, cfg, *dict);
    CHECK(std::abs(r.preclip_mse - r.predicted_mse) <= 1e-9);
  }
}

TEST_CASE("directed support covers at most 2k indices per channel") {
  const auto dict = DctDictionary::cached(64);
  const ImageTensor img = random_image(1, 8, 8, 71, 0.35, 0.65);
  const ImageTensor other = random_image(1, 8, 8, 72, 0.35, 0.65);
  auto candidates = std::make_shared<CandidateSet>(
      std::vector<ImageTensor>{other}, std::vector<int>{1});
  DirectedConfig cfg;
  cfg.delta = 0.05;  // small enough that nothing clips
  cfg.k = 6;
  cfg.candidates = candidates;
  const FlipExceptBase oracle(img);
  const AttackResult result = directed_attack(img, 0, oracle, cfg, *dict);
  REQUIRE(result.outcome == Outcome::kSuccess);
  ImageTensor delta = *result.adversarial_image;
  delta.pixels -= img.pixels;
  const SparseVector coeffs = forward(delta, *dict);
  int support = 0;
  for (int i = 0; i < 64; ++i) support += std::abs(coeffs.coeffs[i]) > 1e-12;
  CHECK(support <= 2 * cfg.k);
  CHECK(support > 0);
}

TEST_CASE("pre-clip distortion grows strictly with delta") {
  const auto dict = DctDictionary::cached(64);
  const ImageTensor img = random_image(1, 8, 8, 81, 0.1, 0.9);
  const ImageTensor other = random_image(1, 8, 8, 82, 0.1, 0.9);
  auto candidates = std::make_shared<CandidateSet>(
      std::vector<ImageTensor>{other}, std::vector<int>{1});
  const testing::ConstantOracle oracle(0, 2);
  double previous = -1.0;
  for (double delta : {0.2, 0.4, 0.8, 1.6, 3.2}) {
    DirectedConfig cfg;
    cfg.delta = delta;
    cfg.k = 8;
    cfg.candidates = candidates;
    const AttackResult r = directed_attack(img, 0, oracle, cfg, *dict);
    CHECK(r.preclip_mse > previous);
    previous = r.preclip_mse;
  }
}

TEST_CASE("no cross-class candidate means a degenerate outcome") {
  const auto dict = DctDictionary::cached(16);
  const ImageTensor img = random_image(1, 4, 4, 91, 0.1, 0.9);
  auto candidates = std::make_shared<CandidateSet>(
      std::vector<ImageTensor>{img}, std::vector<int>{0});
  DirectedConfig cfg;
  cfg.delta = 1.0;
  cfg.k = 2;
  cfg.candidates = candidates;
  const testing::ConstantOracle oracle(0, 2);
  const AttackResult result = directed_attack(img, 0, oracle, cfg, *dict);
  CHECK(result.outcome == Outcome::kDegenerate);
  CHECK(result.queries_used == 0);
}
