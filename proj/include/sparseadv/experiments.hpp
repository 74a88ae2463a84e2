#ifndef SPARSEADV_EXPERIMENTS_HPP
#define SPARSEADV_EXPERIMENTS_HPP

#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include "sparseadv/attacks.hpp"
#include "sparseadv/dataset.hpp"
#include "sparseadv/oracle.hpp"

namespace sparseadv {

// Campaigns fan per-image jobs across a worker pool. Records carry stable
// image indices and are written into pre-sized slots, so the report bytes
// never depend on scheduling. threads == 0 means hardware concurrency; use 1
// when the oracle serializes requests per connection.

struct AttackRecord {
  int image_index = -1;
  Outcome outcome = Outcome::kBudgetExhausted;
  std::uint64_t queries = 0;
  int original_label = -1;
  int adversarial_label = -1;  // -1 when the label never changed
  double final_mse = 0.0;
  double final_psnr = std::numeric_limits<double>::infinity();
  double preclip_mse = 0.0;
  double predicted_mse = 0.0;  // directed runs only
};

// ---------------------------------------------------------------------------
// Component-retention ablation: keep round(fraction*N) components per
// strategy, reconstruct, and measure classifier accuracy per cell.

struct AblationConfig {
  std::vector<double> fractions;
  std::vector<Strategy> strategies;
  int threads = 0;
  std::uint64_t seed = 0;  // echoed into the report; the pipeline is
                           // deterministic either way
};

struct AblationCell {
  Strategy strategy = Strategy::kLaS;
  double fraction = 0.0;
  int k = 0;
  std::vector<int> predicted;  // per test image, stable order
  std::int64_t correct = 0;
  double accuracy = 0.0;
};

struct AblationReport {
  AblationConfig config;
  std::int64_t total = 0;
  std::vector<int> baseline_predicted;
  std::int64_t baseline_correct = 0;
  double baseline_accuracy = 0.0;
  std::vector<AblationCell> cells;
};

AblationReport run_ablation(const DatasetHandle& dataset, const Oracle& oracle,
                            const AblationConfig& config);

// ---------------------------------------------------------------------------
// Random-query campaign: one arm per config, identical except strategy.
// Samples the oracle misclassifies before any perturbation are excluded;
// that screening query is not charged to any attack ledger.

struct QueryCampaignArm {
  AttackConfig config;
  std::vector<AttackRecord> records;  // attacked images only
  std::int64_t successes = 0;
  std::int64_t successes_within_10 = 0;
  double success_rate = 0.0;
  double mean_queries_to_success = 0.0;    // over successes; 0 when none
  double median_queries_to_success = 0.0;  // over successes; 0 when none
  std::uint64_t total_queries = 0;         // summed ledgers, all runs
  std::map<std::uint64_t, std::int64_t> query_histogram;  // successes by count
};

struct QueryCampaignReport {
  std::uint64_t seed = 0;
  std::vector<int> excluded;  // image indices misclassified pre-attack
  std::int64_t attacked = 0;
  std::vector<QueryCampaignArm> arms;
};

QueryCampaignReport run_query_campaign(const DatasetHandle& dataset,
                                       const Oracle& oracle,
                                       const std::vector<AttackConfig>& arms,
                                       int threads = 0);

inline QueryCampaignReport run_query_campaign(const DatasetHandle& dataset,
                                              const Oracle& oracle,
                                              const AttackConfig& cfg_las,
                                              const AttackConfig& cfg_lof,
                                              int threads = 0) {
  return run_query_campaign(dataset, oracle, {cfg_las, cfg_lof}, threads);
}

// ---------------------------------------------------------------------------
// Directed sweep over a (delta, k) grid. Every test image is attacked with
// the dataset itself as the attacker's candidate pool; the per-cell rate
// counts final labels differing from the dataset label, so the delta == 0
// column reproduces the oracle's baseline error.

struct SweepConfig {
  std::vector<double> deltas;
  std::vector<int> ks;
  int threads = 0;
  std::uint64_t seed = 0;
};

struct SweepCell {
  double delta = 0.0;
  int k = 0;
  std::vector<AttackRecord> records;
  std::int64_t misclassified = 0;
  double misclassification_rate = 0.0;
  double mean_psnr = 0.0;          // post-clip; +inf at delta == 0
  double mean_preclip_psnr = 0.0;  // analytic trend column
};

struct SweepReport {
  SweepConfig config;
  std::int64_t total = 0;
  std::vector<SweepCell> cells;
};

SweepReport run_delta_sweep(const DatasetHandle& dataset, const Oracle& oracle,
                            const SweepConfig& config);

// ---------------------------------------------------------------------------
// LaS/LoF overlap: per image and k, how many of the k largest components
// fall outside the k lowest frequencies.

struct IntersectionConfig {
  std::vector<int> ks;
  int threads = 0;
  std::uint64_t seed = 0;
};

struct IntersectionRow {
  int k = 0;
  std::vector<std::int64_t> per_image;
  double mean = 0.0;
  std::int64_t min = 0;
  std::int64_t max = 0;
};

struct IntersectionReport {
  IntersectionConfig config;
  std::int64_t total = 0;
  std::vector<IntersectionRow> rows;
};

IntersectionReport run_intersection_study(const DatasetHandle& dataset,
                                          const IntersectionConfig& config);

}  // namespace sparseadv

#endif  // SPARSEADV_EXPERIMENTS_HPP
