// Acceptance suite: every release criterion in one binary, one PASS/FAIL
// line each. Exits with the number of failed criteria.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sparseadv/attacks.hpp"
#include "sparseadv/experiments.hpp"
#include "sparseadv/metrics.hpp"
#include "sparseadv/report.hpp"
#include "sparseadv/synth.hpp"
#include "sparseadv/wire.hpp"
#include "support/test_oracles.hpp"

using namespace sparseadv;
using nlohmann::json;

namespace {

struct Criterion {
  bool ok = true;
  std::ostringstream detail;

  void require(bool condition, const std::string& what) {
    if (!condition) {
      ok = false;
      if (detail.tellp() > 0) detail << "; ";
      detail << "FAILED: " << what;
    }
  }

  void note(const std::string& text) {
    if (detail.tellp() > 0) detail << "; ";
    detail << text;
  }
};

int g_failures = 0;

void run_criterion(int number, const std::string& title,
                   const std::function<void(Criterion&)>& body) {
  Criterion c;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.ok = false;
    c.note(std::string("exception: ") + e.what());
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  std::printf("[%s] criterion %d: %s (%.2fs%s%s)\n", c.ok ? "PASS" : "FAIL",
              number, title.c_str(), seconds,
              c.detail.tellp() > 0 ? "; " : "", c.detail.str().c_str());
  std::fflush(stdout);
  if (!c.ok) ++g_failures;
}

json load_fixtures() {
  std::ifstream in(SPARSEADV_FIXTURES_PATH);
  if (!in) throw Error("missing fixtures file " SPARSEADV_FIXTURES_PATH);
  json j;
  in >> j;
  return j;
}

ImageTensor random_image(int h, int w, std::mt19937_64& gen) {
  ImageTensor img(1, h, w);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (Eigen::Index i = 0; i < img.pixel_count(); ++i) img.pixels[i] = uni(gen);
  return img;
}

// ---------------------------------------------------------------------- 1
void dictionary_exactness(Criterion& c) {
  std::mt19937_64 gen(1);
  double worst_gram = 0.0;
  double worst_roundtrip = 0.0;
  for (const int n : {4, 64, 784, 1024, 4096}) {
    const DctDictionary dict(n);
    Eigen::MatrixXd gram = dict.matrix().transpose() * dict.matrix();
    gram.diagonal().array() -= 1.0;
    const double gram_err = gram.cwiseAbs().maxCoeff();
    worst_gram = std::max(worst_gram, gram_err);
    c.require(gram_err <= 1e-9,
              "max|D^T D - I| for n=" + std::to_string(n) + " is " +
                  std::to_string(gram_err));

    int h = 1;
    for (int d = 2; d * d <= n; ++d) {
      if (n % d == 0) h = d;
    }
    const ImageTensor img = random_image(h, n / h, gen);
    const ImageTensor back = inverse(forward(img, dict), dict);
    const double rt = (back.pixels - img.pixels).cwiseAbs().maxCoeff();
    worst_roundtrip = std::max(worst_roundtrip, rt);
    c.require(rt <= 1e-9, "round-trip error for n=" + std::to_string(n));
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max gram err %.2e, max round-trip %.2e",
                worst_gram, worst_roundtrip);
  c.note(buf);
}

// ---------------------------------------------------------------------- 2
void directed_mse_identity(Criterion& c) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const int sizes[] = {64, 256, 784};
  int checked = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = sizes[trial % 3];
    const auto dict = DctDictionary::cached(n);
    const int h = n == 64 ? 8 : (n == 256 ? 16 : 28);
    const ImageTensor x = random_image(h, n / h, gen);
    const ImageTensor y = random_image(h, n / h, gen);
    const int k = 1 + static_cast<int>(gen() % 24);
    const double delta = 0.05 + 12.0 * uni(gen);

    const SparseVector s = forward(x, *dict);
    const SparseVector si_hat = normalize_topk(s, k);
    const SparseVector sj_hat = normalize_topk(forward(y, *dict), k);

    SparseVector moved = s;
    moved.coeffs -= delta * (si_hat.coeffs - sj_hat.coeffs);
    const ImageTensor adversarial = inverse(moved, *dict);  // pre-clip

    const double measured = mse(x, adversarial);
    const double formula = predicted_directed_mse(si_hat, sj_hat, delta);
    worst = std::max(worst, std::abs(measured - formula));
    c.require(std::abs(measured - formula) <= 1e-9,
              "identity off by " + std::to_string(measured - formula));
    c.require(formula >= 0.0 && formula <= 4.0 * delta * delta / n + 1e-15,
              "bound violated");
    ++checked;
    if (!c.ok) break;
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%d draws, worst |measured-formula| %.2e",
                checked, worst);
  c.note(buf);
}

// ---------------------------------------------------------------------- 3
void energy_optimality(Criterion& c) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> normal;
  int vectors = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const int n = 4 + static_cast<int>(gen() % 9);  // 4..12
    SparseVector s(1, 1, n);
    for (int i = 0; i < n; ++i) s.coeffs[i] = normal(gen);
    ++vectors;
    for (int k = 1; k <= n; ++k) {
      const SelectionMask las = select(s, Strategy::kLaS, k);
      double las_energy = 0.0;
      for (int i : las.indices[0]) las_energy += s.coeffs[i] * s.coeffs[i];
      for (unsigned bits = 0; bits < (1u << n); ++bits) {
        if (__builtin_popcount(bits) != k) continue;
        double energy = 0.0;
        for (int i = 0; i < n; ++i) {
          if (bits & (1u << i)) energy += s.coeffs[i] * s.coeffs[i];
        }
        if (las_energy < energy - 1e-12) {
          c.require(false, "subset beats LaS at n=" + std::to_string(n) +
                               " k=" + std::to_string(k));
          return;
        }
      }
    }
  }
  c.note(std::to_string(vectors) + " vectors, exhaustive subsets, all k");
}

// ---------------------------------------------------------------------- 4
void budget_discipline(Criterion& c) {
  SynthConfig cfg;
  const SynthDataset data = make_synthetic_dataset(cfg);
  const CentroidOracle centroid(
      train_centroid(data.train.images, data.train.labels));
  const auto dict = DctDictionary::cached(784);

  int runs = 0;
  int successes = 0;
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    AttackConfig acfg;
    acfg.strategy = i % 2 == 0 ? Strategy::kLaS : Strategy::kLoF;
    acfg.k = 8;
    acfg.mse_budget = 0.001;
    acfg.query_budget = 20;
    acfg.rng_seed = 4;
    acfg.clip_policy = i % 5 == 0 ? ClipPolicy::kRejectIfPostclipExceeds
                                  : ClipPolicy::kClipAndMeasurePostclip;

    QueryLedger counter_ledger;
    testing::CountingOracle counting(centroid, counter_ledger);
    const AttackResult result =
        random_query_attack(data.test.images[i], data.test.labels[i],
                            counting, acfg, *dict, i);
    ++runs;

    for (const double m : result.preclip_mse_trace) {
      if (std::abs(m - acfg.mse_budget) > 1e-9) {
        c.require(false, "pre-clip MSE " + std::to_string(m));
        return;
      }
    }
    if (result.outcome == Outcome::kSuccess) {
      ++successes;
      c.require(result.final_mse <= 0.001, "success exceeds the MSE rule");
      c.require(result.adversarial_label.has_value() &&
                    *result.adversarial_label != result.original_label,
                "success without a changed label");
      c.require(result.queries_used >= 1, "success with zero queries");
    }
    c.require(result.queries_used == counting.calls(),
              "ledger disagrees with observed oracle calls");
    if (!c.ok) return;
  }
  c.require(runs >= 500, "needs at least 500 runs");
  c.note(std::to_string(runs) + " runs, " + std::to_string(successes) +
         " successes, ledgers exact");
}

// ---------------------------------------------------------------------- 5
void query_campaign_direction(Criterion& c) {
  const json fx = load_fixtures().at("query_campaign");
  SynthConfig cfg;
  const SynthDataset data = make_synthetic_dataset(cfg);
  const CentroidOracle oracle(
      train_centroid(data.train.images, data.train.labels));

  AttackConfig las;
  las.strategy = Strategy::kLaS;
  las.k = fx.at("k").get<int>();
  las.mse_budget = fx.at("mse_budget").get<double>();
  las.query_budget = fx.at("query_budget").get<std::uint64_t>();
  las.rng_seed = fx.at("seed").get<std::uint64_t>();
  AttackConfig lof = las;
  lof.strategy = Strategy::kLoF;

  const QueryCampaignReport report =
      run_query_campaign(data.test, oracle, las, lof);
  c.require(report.attacked == fx.at("attacked").get<std::int64_t>(),
            "attacked count drifted");
  c.require(static_cast<std::int64_t>(report.excluded.size()) ==
                fx.at("excluded").get<std::int64_t>(),
            "excluded count drifted");

  const auto& arms_fx = fx.at("arms");
  for (std::size_t a = 0; a < report.arms.size(); ++a) {
    const auto& arm = report.arms[a];
    const auto& afx = arms_fx.at(a);
    c.require(std::string(to_string(arm.config.strategy)) ==
                  afx.at("strategy").get<std::string>(),
              "arm order drifted");
    c.require(arm.successes == afx.at("successes").get<std::int64_t>(),
              "successes drifted for " +
                  std::string(to_string(arm.config.strategy)));
    c.require(arm.successes_within_10 ==
                  afx.at("successes_within_10").get<std::int64_t>(),
              "within-10 count drifted");
    c.require(arm.total_queries == afx.at("total_queries").get<std::uint64_t>(),
              "total queries drifted");
  }
  c.require(report.arms[0].successes_within_10 >=
                report.arms[1].successes_within_10,
            "LaS is not ahead of LoF within 10 queries");
  c.note("LaS within-10 " + std::to_string(report.arms[0].successes_within_10) +
         " >= LoF within-10 " +
         std::to_string(report.arms[1].successes_within_10) +
         ", counts match fixtures");
}

// ---------------------------------------------------------------------- 6
void ablation_ordering(Criterion& c) {
  const json fx = load_fixtures().at("ablation");
  SynthConfig cfg;
  const SynthDataset data = make_synthetic_dataset(cfg);
  const CentroidOracle oracle(
      train_centroid(data.train.images, data.train.labels));

  AblationConfig acfg;
  acfg.fractions = {0.3, 0.5};
  acfg.strategies = {Strategy::kLaS, Strategy::kLoF, Strategy::kHiF};
  const AblationReport report = run_ablation(data.test, oracle, acfg);

  c.require(report.baseline_correct ==
                fx.at("baseline_correct").get<std::int64_t>(),
            "baseline drifted");
  const auto& cells_fx = fx.at("cells");
  double las30 = -1, lof30 = -1, hif30 = -1;
  for (std::size_t i = 0; i < report.cells.size(); ++i) {
    const auto& cell = report.cells[i];
    const auto& cfx = cells_fx.at(i);
    c.require(std::string(to_string(cell.strategy)) ==
                      cfx.at("strategy").get<std::string>() &&
                  cell.fraction == cfx.at("fraction").get<double>(),
              "cell order drifted");
    c.require(cell.correct == cfx.at("correct").get<std::int64_t>(),
              "cell count drifted at " +
                  std::string(to_string(cell.strategy)) + " " +
                  std::to_string(cell.fraction));
    if (cell.fraction == 0.3) {
      if (cell.strategy == Strategy::kLaS) las30 = cell.accuracy;
      if (cell.strategy == Strategy::kLoF) lof30 = cell.accuracy;
      if (cell.strategy == Strategy::kHiF) hif30 = cell.accuracy;
    }
    if (cell.fraction == 0.5 && cell.strategy == Strategy::kLaS) {
      c.require(std::abs(cell.accuracy - report.baseline_accuracy) <= 0.01,
                "50% LaS accuracy strays more than 1 point from baseline");
    }
  }
  c.require(las30 >= lof30, "LaS 30% below LoF 30%");
  c.require(lof30 >= hif30, "LoF 30% below HiF 30%");
  c.require(las30 - hif30 >= 0.20, "LaS-HiF gap below 20 points");
  char buf[96];
  std::snprintf(buf, sizeof(buf), "30%%: las %.3f >= lof %.3f >= hif %.3f",
                las30, lof30, hif30);
  c.note(buf);
}

// ---------------------------------------------------------------------- 7
void sweep_trend(Criterion& c) {
  const json fx = load_fixtures().at("sweep");
  SynthConfig cfg;
  const SynthDataset data = make_synthetic_dataset(cfg);
  const CentroidOracle oracle(
      train_centroid(data.train.images, data.train.labels));
  const auto dict = DctDictionary::cached(784);

  // Analytic part: for a fixed image, candidate pool, and k, the pre-clip
  // PSNR is strictly decreasing over a 6-point delta grid.
  auto candidates = std::make_shared<const CandidateSet>(data.test.images,
                                                         data.test.labels);
  const double grid[6] = {2.0, 4.0, 6.0, 8.0, 10.0, 12.0};
  for (std::size_t i = 0; i < 10; ++i) {
    double previous = std::numeric_limits<double>::infinity();
    int previous_candidate = -2;
    for (const double delta : grid) {
      DirectedConfig dcfg;
      dcfg.delta = delta;
      dcfg.k = 8;
      dcfg.candidates = candidates;
      const AttackResult r = directed_attack(
          data.test.images[i], data.test.labels[i], oracle, dcfg, *dict);
      const double p = psnr(r.preclip_mse);
      c.require(p + 1e-9 < previous,
                "pre-clip PSNR not strictly decreasing at image " +
                    std::to_string(i));
      if (previous_candidate != -2) {
        c.require(r.directed_candidate == previous_candidate,
                  "candidate changed across the delta grid");
      }
      previous = p;
      previous_candidate = r.directed_candidate;
    }
  }

  // Fixture part: the whole grid is pinned; corners must be ordered.
  SweepConfig scfg;
  scfg.deltas = fx.at("deltas").get<std::vector<double>>();
  scfg.ks = fx.at("ks").get<std::vector<int>>();
  const SweepReport report = run_delta_sweep(data.test, oracle, scfg);
  const auto& cells_fx = fx.at("cells");
  for (std::size_t i = 0; i < report.cells.size(); ++i) {
    c.require(report.cells[i].misclassified ==
                  cells_fx.at(i).at("misclassified").get<std::int64_t>(),
              "sweep cell drifted at index " + std::to_string(i));
  }
  const auto& first = report.cells.front();
  const auto& last = report.cells.back();
  c.require(last.misclassification_rate >= first.misclassification_rate,
            "rate at (delta_max, k_max) below rate at (delta_min, k_min)");
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "PSNR strictly falls on the delta grid; rate %.3f@(d=%g,k=%d) "
                ">= %.3f@(d=%g,k=%d)",
                last.misclassification_rate, last.delta, last.k,
                first.misclassification_rate, first.delta, first.k);
  c.note(buf);
}

// ---------------------------------------------------------------------- 8
void seed_determinism(Criterion& c) {
  SynthConfig cfg;
  cfg.train_per_class = 20;
  cfg.test_per_class = 6;
  const SynthDataset data = make_synthetic_dataset(cfg);
  const CentroidOracle oracle(
      train_centroid(data.train.images, data.train.labels));

  AttackConfig las;
  las.strategy = Strategy::kLaS;
  las.k = 8;
  las.query_budget = 15;
  las.rng_seed = 8;
  AttackConfig lof = las;
  lof.strategy = Strategy::kLoF;
  const std::string campaign_a =
      to_json(run_query_campaign(data.test, oracle, las, lof));
  const std::string campaign_b =
      to_json(run_query_campaign(data.test, oracle, las, lof));
  c.require(campaign_a == campaign_b, "campaign bytes differ across reruns");

  SweepConfig scfg;
  scfg.deltas = {0.0, 4.0, 8.0};
  scfg.ks = {8};
  scfg.seed = 8;
  c.require(to_json(run_delta_sweep(data.test, oracle, scfg)) ==
                to_json(run_delta_sweep(data.test, oracle, scfg)),
            "sweep bytes differ across reruns");

  AblationConfig acfg;
  acfg.fractions = {0.3};
  acfg.strategies = {Strategy::kLaS, Strategy::kHiF};
  acfg.seed = 8;
  c.require(to_json(run_ablation(data.test, oracle, acfg)) ==
                to_json(run_ablation(data.test, oracle, acfg)),
            "ablation bytes differ across reruns");

  IntersectionConfig icfg;
  icfg.ks = {8, 16};
  icfg.seed = 8;
  c.require(to_json(run_intersection_study(data.test, icfg)) ==
                to_json(run_intersection_study(data.test, icfg)),
            "intersection bytes differ across reruns");
  c.note("campaign, sweep, ablation, intersection all byte-identical");
}

// ---------------------------------------------------------------------- 9
void protocol_conformance(Criterion& c) {
  WireConfig wc;
  wc.endpoint = std::string("cmd:") + SPARSEADV_CLI_PATH +
                " oracle-serve-stub --classes 10";
  wc.classes = 10;
  {
    const ExternalOracle oracle(wc);
    QueryLedger ledger;
    for (int i = 0; i < 1000; ++i) {
      ImageTensor img(1, 2, 2);
      const double v = (i % 256) / 255.0;
      img.pixels << v, 0.5, 0.5, 0.5;
      const OracleVerdict verdict = classify(oracle, img, ledger);
      const int expected = static_cast<int>(std::lround(v * 9.0));
      if (verdict.label != expected) {
        c.require(false, "round trip " + std::to_string(i) +
                             " returned a wrong or reordered label");
        return;
      }
    }
    c.require(ledger.used() == 1000, "ledger missed round trips");
  }

  bool surfaced = false;
  try {
    WireConfig bad = wc;
    bad.endpoint += " --corrupt-at 5 --corrupt-mode badid";
    const ExternalOracle oracle(bad);
    QueryLedger ledger;
    for (int i = 0; i < 5; ++i) {
      ImageTensor img(1, 2, 2);
      img.pixels << 0.1, 0.2, 0.3, 0.4;
      classify(oracle, img, ledger);
    }
  } catch (const ProtocolError&) {
    surfaced = true;
  }
  c.require(surfaced, "corrupted response did not surface as an error");
  c.note("1000 in-order round trips, corruption surfaced as ProtocolError");
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  run_criterion(1, "dictionary exactness and round trip (n up to 4096, <30s)",
                [](Criterion& c) {
                  const auto start = std::chrono::steady_clock::now();
                  dictionary_exactness(c);
                  const double s = std::chrono::duration<double>(
                                       std::chrono::steady_clock::now() - start)
                                       .count();
                  c.require(s < 30.0, "over the 30s budget");
                });
  run_criterion(2, "directed MSE closed form matches measurement (<10s)",
                [](Criterion& c) {
                  const auto start = std::chrono::steady_clock::now();
                  directed_mse_identity(c);
                  const double s = std::chrono::duration<double>(
                                       std::chrono::steady_clock::now() - start)
                                       .count();
                  c.require(s < 10.0, "over the 10s budget");
                });
  run_criterion(3, "LaS maximizes retained energy (exhaustive, <5s)",
                [](Criterion& c) {
                  const auto start = std::chrono::steady_clock::now();
                  energy_optimality(c);
                  const double s = std::chrono::duration<double>(
                                       std::chrono::steady_clock::now() - start)
                                       .count();
                  c.require(s < 5.0, "over the 5s budget");
                });
  run_criterion(4, "random-attack budget discipline over 500 runs",
                budget_discipline);
  run_criterion(5, "LaS beats LoF within 10 queries; counts pinned (<3min)",
                [](Criterion& c) {
                  const auto start = std::chrono::steady_clock::now();
                  query_campaign_direction(c);
                  const double s = std::chrono::duration<double>(
                                       std::chrono::steady_clock::now() - start)
                                       .count();
                  c.require(s < 180.0, "over the 3min budget");
                });
  run_criterion(6, "retention ordering LaS >= LoF >= HiF, gap >= 20pts (<2min)",
                [](Criterion& c) {
                  const auto start = std::chrono::steady_clock::now();
                  ablation_ordering(c);
                  const double s = std::chrono::duration<double>(
                                       std::chrono::steady_clock::now() - start)
                                       .count();
                  c.require(s < 120.0, "over the 2min budget");
                });
  run_criterion(7, "PSNR falls and misclassification rises with delta",
                sweep_trend);
  run_criterion(8, "seeded campaigns produce byte-identical reports",
                seed_determinism);
  run_criterion(9, "oracle wire protocol conformance (1000 round trips)",
                protocol_conformance);

  if (g_failures == 0) {
    std::printf("all criteria passed\n");
  } else {
    std::printf("%d criteria FAILED\n", g_failures);
  }
  return g_failures;
}
