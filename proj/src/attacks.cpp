#include "sparseadv/attacks.hpp"

#include <cmath>

#include "sparseadv/metrics.hpp"
#include "sparseadv/rng.hpp"

namespace sparseadv {

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::kSuccess:
      return "success";
    case Outcome::kBudgetExhausted:
      return "budget_exhausted";
    case Outcome::kDegenerate:
      return "degenerate";
  }
  return "?";
}

namespace {

// Keeps the rescaled noise a hair below the exact budget so the measured
// pre- and post-clip MSE stay on the admissible side of the threshold under
// floating-point rounding. The shortfall (2e-10 relative) is far inside the
// 1e-9 budget-equality tolerance.
constexpr double kBudgetUnderShoot = 1e-10;

// x + D*delta for a coefficient delta supported on mask indices only. The
// orthonormal columns make ||result - x||_2 == ||delta||_2, so the pixel MSE
// of the candidate is exactly ||delta||^2 / pixel_count.
ImageTensor add_sparse_delta(const ImageTensor& img, const DctDictionary& dict,
                             const std::vector<std::vector<int>>& indices,
                             const std::vector<std::vector<double>>& values) {
  ImageTensor out = img;
  for (int c = 0; c < img.channels; ++c) {
    auto channel = out.channel(c);
    const auto& idx = indices[static_cast<std::size_t>(c)];
    const auto& val = values[static_cast<std::size_t>(c)];
    for (std::size_t t = 0; t < idx.size(); ++t) {
      channel += val[t] * dict.column(idx[t]);
    }
  }
  return out;
}

void finish_with_quality(AttackResult& result, const ImageTensor& original,
                         const ImageTensor& candidate) {
  result.final_mse = mse(original, candidate);
  result.final_psnr = psnr(result.final_mse);
}

}  // namespace

AttackResult random_query_attack(const ImageTensor& img, int original_label,
                                 const Oracle& oracle, const AttackConfig& cfg,
                                 const DctDictionary& dict,
                                 std::uint64_t rng_stream) {
  if (cfg.mse_budget <= 0.0) throw RangeError("mse_budget must be positive");
  if (cfg.query_budget == 0) throw RangeError("query_budget must be positive");

  const SparseVector coeffs = forward(img, dict);
  const SelectionMask mask = select(coeffs, cfg.strategy, cfg.k);
  const double target_norm =
      std::sqrt(static_cast<double>(img.pixel_count()) * cfg.mse_budget) *
      (1.0 - kBudgetUnderShoot);

  NormalSampler sampler(derive_stream(cfg.rng_seed, rng_stream));
  QueryLedger ledger(cfg.query_budget);

  AttackResult result;
  result.original_label = original_label;

  std::vector<std::vector<double>> noise(
      static_cast<std::size_t>(img.channels));
  for (auto& v : noise) v.resize(static_cast<std::size_t>(cfg.k));

  ImageTensor last_candidate;
  // The reject policy cannot starve on in-range originals (clipping only
  // shrinks the error), but cap the draws so it cannot spin if it ever does.
  const std::uint64_t max_draws = cfg.query_budget * 4 + 64;
  for (std::uint64_t draw = 0; !ledger.exhausted() && draw < max_draws;
       ++draw) {
    double norm_sq = 0.0;
    for (auto& channel_noise : noise) {
      for (auto& v : channel_noise) {
        v = sampler.next();
        norm_sq += v * v;
      }
    }
    if (norm_sq == 0.0) continue;
    const double scale = target_norm / std::sqrt(norm_sq);
    for (auto& channel_noise : noise) {
      for (auto& v : channel_noise) v *= scale;
    }

    const ImageTensor raw = add_sparse_delta(img, dict, mask.indices, noise);
    const double preclip = mse(img, raw);
    result.preclip_mse_trace.push_back(preclip);
    result.preclip_mse = preclip;

    const ImageTensor candidate = clip(raw);
    const double postclip = mse(img, candidate);
    if (cfg.clip_policy == ClipPolicy::kRejectIfPostclipExceeds &&
        postclip > cfg.mse_budget) {
      continue;  // discarded before the oracle sees it; no query spent
    }

    const OracleVerdict verdict = classify(oracle, candidate, ledger);
    last_candidate = candidate;
    if (verdict.label != original_label && postclip <= cfg.mse_budget) {
      result.outcome = Outcome::kSuccess;
      result.adversarial_label = verdict.label;
      result.adversarial_image = candidate;
      result.queries_used = ledger.used();
      finish_with_quality(result, img, candidate);
      return result;
    }
  }

  result.outcome = Outcome::kBudgetExhausted;
  result.queries_used = ledger.used();
  if (last_candidate.pixel_count() > 0) {
    finish_with_quality(result, img, last_candidate);
  }
  return result;
}

CandidateSet::CandidateSet(std::vector<ImageTensor> images,
                           std::vector<int> labels)
    : images_(std::move(images)), labels_(std::move(labels)) {
  if (images_.size() != labels_.size()) {
    throw ShapeError("candidate image/label count mismatch");
  }
  for (const auto& img : images_) {
    if (!img.same_shape(images_.front())) {
      throw ShapeError("candidate images have mixed dimensions");
    }
  }
}

const Eigen::MatrixXd& CandidateSet::normalized_topk(
    int k, const DctDictionary& dict) const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(k);
    if (it != cache_.end()) return *it->second;
  }
  auto built = std::make_shared<Eigen::MatrixXd>(
      images_.empty() ? 0 : images_.front().pixel_count(),
      static_cast<Eigen::Index>(images_.size()));
  for (std::size_t i = 0; i < images_.size(); ++i) {
    const SparseVector hat = normalize_topk(forward(images_[i], dict), k);
    built->col(static_cast<Eigen::Index>(i)) = hat.coeffs;
  }
  std::lock_guard<std::mutex> lock(mu_);
  auto [it, inserted] = cache_.emplace(k, std::move(built));
  return *it->second;
}

AttackResult directed_attack(const ImageTensor& img, int original_label,
                             const Oracle& oracle, const DirectedConfig& cfg,
                             const DctDictionary& dict) {
  if (cfg.delta < 0.0) throw RangeError("delta must be nonnegative");
  if (!cfg.candidates) throw RangeError("candidate set is required");

  AttackResult result;
  result.original_label = original_label;

  const auto& candidates = *cfg.candidates;
  bool any_cross_class = false;
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    if (candidates.label(j) != original_label) {
      any_cross_class = true;
      break;
    }
  }
  if (!any_cross_class) {
    result.outcome = Outcome::kDegenerate;
    return result;
  }

  const Eigen::MatrixXd& hats = candidates.normalized_topk(cfg.k, dict);
  const SparseVector si_hat = normalize_topk(forward(img, dict), cfg.k);

  // Most correlated cross-class candidate; ties keep the lowest index.
  std::ptrdiff_t best = -1;
  double best_ip = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    if (candidates.label(j) == original_label) continue;
    const double ip =
        si_hat.coeffs.dot(hats.col(static_cast<Eigen::Index>(j)));
    if (ip > best_ip) {
      best_ip = ip;
      best = static_cast<std::ptrdiff_t>(j);
    }
  }

  result.directed_candidate = static_cast<int>(best);
  const Eigen::VectorXd difference =
      si_hat.coeffs - hats.col(static_cast<Eigen::Index>(best));
  result.predicted_mse = predicted_directed_mse(
      si_hat.coeffs, hats.col(static_cast<Eigen::Index>(best)), cfg.delta,
      img.pixel_count());

  // s_i - delta*d applied to the full sparse vector; in pixel space that is
  // x - delta * D d, and d is supported on at most 2k indices per channel.
  std::vector<std::vector<int>> indices(static_cast<std::size_t>(img.channels));
  std::vector<std::vector<double>> values(
      static_cast<std::size_t>(img.channels));
  const Eigen::Index plane = img.plane();
  for (int c = 0; c < img.channels; ++c) {
    for (Eigen::Index t = 0; t < plane; ++t) {
      const double v = difference[c * plane + t];
      if (v != 0.0) {
        indices[static_cast<std::size_t>(c)].push_back(static_cast<int>(t));
        values[static_cast<std::size_t>(c)].push_back(-cfg.delta * v);
      }
    }
  }

  const ImageTensor raw = add_sparse_delta(img, dict, indices, values);
  result.preclip_mse = mse(img, raw);
  result.preclip_mse_trace.push_back(result.preclip_mse);

  const ImageTensor candidate = clip(raw);
  QueryLedger ledger(1);
  const OracleVerdict verdict = classify(oracle, candidate, ledger);
  result.queries_used = ledger.used();
  finish_with_quality(result, img, candidate);
  if (verdict.label != original_label) {
    result.outcome = Outcome::kSuccess;
    result.adversarial_label = verdict.label;
    result.adversarial_image = candidate;
  } else {
    result.outcome = Outcome::kBudgetExhausted;
  }
  return result;
}

}  // namespace sparseadv
