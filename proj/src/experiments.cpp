#include "sparseadv/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>

#include "sparseadv/metrics.hpp"

namespace sparseadv {

namespace {

void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& fn) {
  int workers = threads > 0
                    ? threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  workers = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(workers), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::mutex error_mu;
  std::exception_ptr first_error;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// The process-wide cache retains every dictionary it hands out, so the
// reference stays valid.
const DctDictionary& dictionary_for(const DatasetHandle& dataset) {
  if (dataset.images.empty()) throw RangeError("dataset is empty");
  return *DctDictionary::cached(
      static_cast<int>(dataset.images.front().plane()));
}

AttackRecord to_record(int image_index, const AttackResult& result) {
  AttackRecord r;
  r.image_index = image_index;
  r.outcome = result.outcome;
  r.queries = result.queries_used;
  r.original_label = result.original_label;
  r.adversarial_label = result.adversarial_label.value_or(-1);
  r.final_mse = result.final_mse;
  r.final_psnr = result.final_psnr;
  r.preclip_mse = result.preclip_mse;
  r.predicted_mse = result.predicted_mse;
  return r;
}

double mean_of(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace

AblationReport run_ablation(const DatasetHandle& dataset, const Oracle& oracle,
                            const AblationConfig& config) {
  validate(dataset);
  if (config.fractions.empty() || config.strategies.empty()) {
    throw RangeError("ablation needs at least one fraction and strategy");
  }
  const DctDictionary& dict = dictionary_for(dataset);
  const int n = dict.n();
  const std::size_t count = dataset.size();

  AblationReport report;
  report.config = config;
  report.total = static_cast<std::int64_t>(count);
  report.baseline_predicted.assign(count, -1);

  parallel_for(count, config.threads, [&](std::size_t i) {
    QueryLedger ledger;
    report.baseline_predicted[i] =
        classify(oracle, dataset.images[i], ledger).label;
  });
  for (std::size_t i = 0; i < count; ++i) {
    if (report.baseline_predicted[i] == dataset.labels[i]) {
      report.baseline_correct += 1;
    }
  }
  report.baseline_accuracy =
      static_cast<double>(report.baseline_correct) / static_cast<double>(count);

  for (const Strategy strategy : config.strategies) {
    for (const double fraction : config.fractions) {
      if (fraction <= 0.0 || fraction > 1.0) {
        throw RangeError("retention fraction must lie in (0, 1]");
      }
      AblationCell cell;
      cell.strategy = strategy;
      cell.fraction = fraction;
      cell.k = std::clamp(static_cast<int>(std::lround(fraction * n)), 1, n);
      cell.predicted.assign(count, -1);

      parallel_for(count, config.threads, [&](std::size_t i) {
        const SparseVector coeffs = forward(dataset.images[i], dict);
        const SparseVector kept =
            keep_only(coeffs, select(coeffs, strategy, cell.k));
        const ImageTensor reconstructed = clip(inverse(kept, dict));
        QueryLedger ledger;
        cell.predicted[i] = classify(oracle, reconstructed, ledger).label;
      });

      for (std::size_t i = 0; i < count; ++i) {
        if (cell.predicted[i] == dataset.labels[i]) cell.correct += 1;
      }
      cell.accuracy =
          static_cast<double>(cell.correct) / static_cast<double>(count);
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

QueryCampaignReport run_query_campaign(const DatasetHandle& dataset,
                                       const Oracle& oracle,
                                       const std::vector<AttackConfig>& arms,
                                       int threads) {
  validate(dataset);
  if (arms.empty()) throw RangeError("campaign needs at least one arm");
  for (const auto& cfg : arms) {
    if (cfg.k != arms.front().k || cfg.mse_budget != arms.front().mse_budget ||
        cfg.query_budget != arms.front().query_budget ||
        cfg.rng_seed != arms.front().rng_seed ||
        cfg.clip_policy != arms.front().clip_policy) {
      throw RangeError("campaign arms must be identical except strategy");
    }
  }
  const DctDictionary& dict = dictionary_for(dataset);
  const std::size_t count = dataset.size();

  QueryCampaignReport report;
  report.seed = arms.front().rng_seed;

  // Screening pass: drop samples the oracle already gets wrong. Uncounted
  // toward any attack ledger, matching queries-to-fool semantics.
  std::vector<char> eligible(count, 0);
  parallel_for(count, threads, [&](std::size_t i) {
    QueryLedger ledger;
    eligible[i] =
        classify(oracle, dataset.images[i], ledger).label == dataset.labels[i];
  });
  std::vector<std::size_t> attacked_indices;
  for (std::size_t i = 0; i < count; ++i) {
    if (eligible[i]) {
      attacked_indices.push_back(i);
    } else {
      report.excluded.push_back(static_cast<int>(i));
    }
  }
  report.attacked = static_cast<std::int64_t>(attacked_indices.size());

  for (const auto& cfg : arms) {
    QueryCampaignArm arm;
    arm.config = cfg;
    arm.records.resize(attacked_indices.size());

    parallel_for(attacked_indices.size(), threads, [&](std::size_t slot) {
      const std::size_t i = attacked_indices[slot];
      const AttackResult result =
          random_query_attack(dataset.images[i], dataset.labels[i], oracle,
                              cfg, dict, static_cast<std::uint64_t>(i));
      arm.records[slot] = to_record(static_cast<int>(i), result);
    });

    std::vector<double> success_queries;
    for (const auto& r : arm.records) {
      arm.total_queries += r.queries;
      if (r.outcome == Outcome::kSuccess) {
        arm.successes += 1;
        if (r.queries <= 10) arm.successes_within_10 += 1;
        arm.query_histogram[r.queries] += 1;
        success_queries.push_back(static_cast<double>(r.queries));
      }
    }
    if (!arm.records.empty()) {
      arm.success_rate = static_cast<double>(arm.successes) /
                         static_cast<double>(arm.records.size());
    }
    if (!success_queries.empty()) {
      arm.mean_queries_to_success = mean_of(success_queries);
      std::sort(success_queries.begin(), success_queries.end());
      const std::size_t mid = success_queries.size() / 2;
      arm.median_queries_to_success =
          success_queries.size() % 2 == 1
              ? success_queries[mid]
              : 0.5 * (success_queries[mid - 1] + success_queries[mid]);
    }
    report.arms.push_back(std::move(arm));
  }
  return report;
}

SweepReport run_delta_sweep(const DatasetHandle& dataset, const Oracle& oracle,
                            const SweepConfig& config) {
  validate(dataset);
  if (config.deltas.empty() || config.ks.empty()) {
    throw RangeError("sweep needs at least one delta and one k");
  }
  const DctDictionary& dict = dictionary_for(dataset);
  const std::size_t count = dataset.size();

  auto candidates =
      std::make_shared<const CandidateSet>(dataset.images, dataset.labels);

  SweepReport report;
  report.config = config;
  report.total = static_cast<std::int64_t>(count);

  for (const int k : config.ks) {
    // Normalized candidate vectors for this k are built once and shared by
    // every (delta, image) pair.
    candidates->normalized_topk(k, dict);
    for (const double delta : config.deltas) {
      SweepCell cell;
      cell.delta = delta;
      cell.k = k;
      cell.records.resize(count);

      parallel_for(count, config.threads, [&](std::size_t i) {
        DirectedConfig attack_cfg;
        attack_cfg.delta = delta;
        attack_cfg.k = k;
        attack_cfg.candidates = candidates;
        const AttackResult result = directed_attack(
            dataset.images[i], dataset.labels[i], oracle, attack_cfg, dict);
        cell.records[i] = to_record(static_cast<int>(i), result);
      });

      std::vector<double> psnrs;
      std::vector<double> preclip_psnrs;
      psnrs.reserve(count);
      preclip_psnrs.reserve(count);
      for (const auto& r : cell.records) {
        if (r.outcome == Outcome::kSuccess) cell.misclassified += 1;
        psnrs.push_back(r.final_psnr);
        preclip_psnrs.push_back(psnr(r.preclip_mse));
      }
      cell.misclassification_rate =
          static_cast<double>(cell.misclassified) / static_cast<double>(count);
      cell.mean_psnr = mean_of(psnrs);
      cell.mean_preclip_psnr = mean_of(preclip_psnrs);
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

IntersectionReport run_intersection_study(const DatasetHandle& dataset,
                                          const IntersectionConfig& config) {
  validate(dataset);
  if (config.ks.empty()) throw RangeError("study needs at least one k");
  const DctDictionary& dict = dictionary_for(dataset);
  const std::size_t count = dataset.size();

  IntersectionReport report;
  report.config = config;
  report.total = static_cast<std::int64_t>(count);

  for (const int k : config.ks) {
    IntersectionRow row;
    row.k = k;
    row.per_image.assign(count, 0);
    parallel_for(count, config.threads, [&](std::size_t i) {
      const SparseVector coeffs = forward(dataset.images[i], dict);
      const SelectionMask las = select(coeffs, Strategy::kLaS, k);
      const SelectionMask lof = select(coeffs, Strategy::kLoF, k);
      row.per_image[i] = count_non_intersecting(las, lof);
    });
    double sum = 0.0;
    row.min = row.per_image.empty() ? 0 : row.per_image.front();
    row.max = row.min;
    for (const std::int64_t v : row.per_image) {
      sum += static_cast<double>(v);
      row.min = std::min(row.min, v);
      row.max = std::max(row.max, v);
    }
    row.mean = count == 0 ? 0.0 : sum / static_cast<double>(count);
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace sparseadv
