#ifndef SPARSEADV_ATTACKS_HPP
#define SPARSEADV_ATTACKS_HPP

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "sparseadv/dct.hpp"
#include "sparseadv/image.hpp"
#include "sparseadv/oracle.hpp"
#include "sparseadv/selection.hpp"

namespace sparseadv {

// What to do about pixels pushed outside [0,1] by a perturbation. Candidates
// are always clipped before querying; the policies differ in how a candidate
// whose post-clip MSE exceeds the budget is handled. Clipping is a projection
// onto the pixel box, so for in-range originals the post-clip MSE can only
// shrink; the reject policy exists for pipelines whose originals are not.
enum class ClipPolicy { kClipAndMeasurePostclip, kRejectIfPostclipExceeds };

struct AttackConfig {
  Strategy strategy = Strategy::kLaS;
  int k = 8;  // per-channel component count
  double mse_budget = 0.001;
  std::uint64_t query_budget = 100;
  std::uint64_t rng_seed = 0;
  ClipPolicy clip_policy = ClipPolicy::kClipAndMeasurePostclip;
};

enum class Outcome { kSuccess, kBudgetExhausted, kDegenerate };

const char* to_string(Outcome o);

struct AttackResult {
  Outcome outcome = Outcome::kBudgetExhausted;
  std::uint64_t queries_used = 0;
  int original_label = -1;
  std::optional<int> adversarial_label;
  // Post-clip quality against the legitimate image. A run that never built
  // a candidate has zero perturbation, hence infinite PSNR.
  double final_mse = 0.0;
  double final_psnr = std::numeric_limits<double>::infinity();
  double preclip_mse = 0.0;  // of the final candidate
  double predicted_mse = 0.0;  // directed attack only; closed-form value
  int directed_candidate = -1;  // index of the most correlated candidate
  std::optional<ImageTensor> adversarial_image;
  std::vector<double> preclip_mse_trace;  // one entry per generated candidate
};

// Repeatedly perturbs the k selected components with fresh Gaussian noise,
// rescaled so the pre-clip pixel MSE equals cfg.mse_budget exactly, until the
// oracle's label changes or the query budget runs out. The caller must have
// verified that the oracle labels `img` as `original_label`; that check is
// not charged here. `rng_stream` keys the noise stream (campaigns pass the
// image index).
AttackResult random_query_attack(const ImageTensor& img, int original_label,
                                 const Oracle& oracle, const AttackConfig& cfg,
                                 const DctDictionary& dict,
                                 std::uint64_t rng_stream = 0);

// Labeled images available to the attacker. Normalized top-k sparse vectors
// are computed on first use and cached per k, so sweeps over many images pay
// the transform cost once.
class CandidateSet {
 public:
  CandidateSet(std::vector<ImageTensor> images, std::vector<int> labels);

  std::size_t size() const { return images_.size(); }
  int label(std::size_t i) const { return labels_[i]; }
  const ImageTensor& image(std::size_t i) const { return images_[i]; }
  const std::vector<int>& labels() const { return labels_; }

  // Column i holds normalize_topk(forward(image i), k). Shared, immutable.
  const Eigen::MatrixXd& normalized_topk(int k,
                                         const DctDictionary& dict) const;

 private:
  std::vector<ImageTensor> images_;
  std::vector<int> labels_;
  mutable std::mutex mu_;
  mutable std::map<int, std::shared_ptr<const Eigen::MatrixXd>> cache_;
  mutable std::vector<std::shared_ptr<const Eigen::MatrixXd>> retained_;
};

struct DirectedConfig {
  double delta = 1.0;
  int k = 8;  // per-channel count for the top-k extraction
  std::shared_ptr<const CandidateSet> candidates;
};

// Moves the image's sparse vector toward the most correlated normalized
// top-k candidate of a different class, scaled by delta, then issues exactly
// one query. Correlation ties break to the lowest candidate index. Returns
// outcome kDegenerate when no candidate has a different label.
AttackResult directed_attack(const ImageTensor& img, int original_label,
                             const Oracle& oracle, const DirectedConfig& cfg,
                             const DctDictionary& dict);

}  // namespace sparseadv

#endif  // SPARSEADV_ATTACKS_HPP
