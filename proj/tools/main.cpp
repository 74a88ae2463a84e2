#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <nlohmann/json.hpp>

#include "sparseadv/attacks.hpp"
#include "sparseadv/dataset.hpp"
#include "sparseadv/experiments.hpp"
#include "sparseadv/metrics.hpp"
#include "sparseadv/oracle.hpp"
#include "sparseadv/report.hpp"
#include "sparseadv/synth.hpp"
#include "sparseadv/wire.hpp"

namespace {

using namespace sparseadv;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct DatasetOpts {
  std::string images;
  std::string labels;
  std::string pnm_dir;
  std::string manifest;
};

void add_dataset_options(CLI::App* cmd, DatasetOpts& opts) {
  auto* images = cmd->add_option("--images", opts.images,
                                 "IDX image file (ubyte, big-endian)");
  cmd->add_option("--labels", opts.labels, "IDX label file")->needs(images);
  auto* pnm = cmd->add_option("--pnm-dir", opts.pnm_dir,
                              "directory of binary P5/P6 images");
  cmd->add_option("--manifest", opts.manifest,
                  "CSV manifest mapping filename,label")
      ->needs(pnm);
  images->excludes(pnm);
}

DatasetHandle load_dataset(const DatasetOpts& opts) {
  if (!opts.images.empty()) {
    if (opts.labels.empty()) {
      throw ParseError("--images requires --labels");
    }
    return load_idx(opts.images, opts.labels);
  }
  if (!opts.pnm_dir.empty()) {
    if (opts.manifest.empty()) {
      throw ParseError("--pnm-dir requires --manifest");
    }
    return load_pnm(opts.pnm_dir, opts.manifest);
  }
  throw ParseError("no dataset given; use --images/--labels or "
                   "--pnm-dir/--manifest");
}

struct OracleOpts {
  std::string kind = "centroid";
  std::string model;
  DatasetOpts train;
  std::string endpoint;
  int classes = 10;
  int timeout_ms = 10000;
};

void add_oracle_options(CLI::App* cmd, OracleOpts& opts) {
  cmd->add_option("--oracle", opts.kind, "classifier under attack")
      ->check(CLI::IsMember({"centroid", "external"}))
      ->capture_default_str();
  cmd->add_option("--model", opts.model,
                  "centroid model JSON from oracle-train");
  cmd->add_option("--train-images", opts.train.images,
                  "IDX images to train a centroid oracle on the fly");
  cmd->add_option("--train-labels", opts.train.labels, "IDX labels for "
                  "--train-images");
  cmd->add_option("--endpoint", opts.endpoint,
                  "external oracle endpoint (cmd:... or tcp:host:port)");
  cmd->add_option("--classes", opts.classes,
                  "class count of the external oracle")
      ->capture_default_str();
  cmd->add_option("--timeout-ms", opts.timeout_ms,
                  "external oracle response timeout")
      ->capture_default_str();
}

std::unique_ptr<Oracle> make_oracle(const OracleOpts& opts) {
  if (opts.kind == "external") {
    if (opts.endpoint.empty()) {
      throw ParseError("--oracle external requires --endpoint");
    }
    WireConfig cfg;
    cfg.endpoint = opts.endpoint;
    cfg.classes = opts.classes;
    cfg.timeout = std::chrono::milliseconds(opts.timeout_ms);
    return std::make_unique<ExternalOracle>(cfg);
  }
  if (!opts.model.empty()) {
    std::ifstream in(opts.model);
    if (!in) throw ParseError("cannot open " + opts.model);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return std::make_unique<CentroidOracle>(centroid_model_from_json(text));
  }
  if (!opts.train.images.empty()) {
    const DatasetHandle train =
        load_idx(opts.train.images, opts.train.labels);
    return std::make_unique<CentroidOracle>(
        train_centroid(train.images, train.labels));
  }
  throw ParseError("centroid oracle needs --model or --train-images/"
                   "--train-labels");
}

void write_output(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot open " + out_path + " for writing");
  out << text;
  if (!out) throw ParseError("short write to " + out_path);
  std::cerr << "wrote " << out_path << "\n";
}

int threads_for(const OracleOpts& oracle_opts, int requested) {
  // External connections serialize requests; keep them single-threaded.
  if (oracle_opts.kind == "external") return 1;
  return requested;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Black-box adversarial example toolkit for the sparse (DCT) domain"};
  app.require_subcommand(1);

  // ---- dict-check ----
  int dict_n = 0;
  auto* dict_check = app.add_subcommand(
      "dict-check", "build the cosine dictionary and verify orthonormality");
  dict_check->add_option("--n", dict_n, "dictionary size")
      ->required()
      ->check(CLI::PositiveNumber);

  // ---- transform ----
  DatasetOpts tr_data;
  std::string tr_strategy = "las";
  int tr_k = 0;
  double tr_fraction = 0.0;
  std::string tr_out, tr_format = "json";
  auto* transform = app.add_subcommand(
      "transform", "round-trip images through the sparse domain, optionally "
                   "keeping only selected components");
  add_dataset_options(transform, tr_data);
  transform->add_option("--strategy", tr_strategy, "selection strategy")
      ->check(CLI::IsMember({"las", "lof", "hif"}));
  transform->add_option("--k", tr_k, "components kept per channel");
  transform->add_option("--fraction", tr_fraction,
                        "fraction of components kept per channel");
  transform->add_option("--out", tr_out, "output path (default stdout)");
  transform->add_option("--format", tr_format, "output format")
      ->check(CLI::IsMember({"json", "csv"}));

  // ---- select ----
  DatasetOpts sel_data;
  std::string sel_strategy = "las";
  int sel_k = 8;
  std::string sel_out, sel_format = "json";
  auto* select_cmd = app.add_subcommand(
      "select", "emit the selected component indices per image");
  add_dataset_options(select_cmd, sel_data);
  select_cmd->add_option("--strategy", sel_strategy, "selection strategy")
      ->check(CLI::IsMember({"las", "lof", "hif"}));
  select_cmd->add_option("--k", sel_k, "components per channel")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  select_cmd->add_option("--out", sel_out, "output path (default stdout)");
  select_cmd->add_option("--format", sel_format, "output format")
      ->check(CLI::IsMember({"json", "csv"}));

  // ---- ablate ----
  DatasetOpts ab_data;
  OracleOpts ab_oracle;
  std::vector<double> ab_fractions = {0.3, 0.5};
  std::vector<std::string> ab_strategies = {"las", "lof", "hif"};
  int ab_threads = 0;
  std::uint64_t ab_seed = 0;
  std::string ab_out, ab_format = "json";
  auto* ablate = app.add_subcommand(
      "ablate", "classifier accuracy after keeping only a fraction of "
                "components per strategy");
  add_dataset_options(ablate, ab_data);
  add_oracle_options(ablate, ab_oracle);
  ablate->add_option("--fractions", ab_fractions, "retention fractions")
      ->delimiter(',')
      ->capture_default_str();
  ablate->add_option("--strategies", ab_strategies, "strategies to ablate")
      ->delimiter(',')
      ->check(CLI::IsMember({"las", "lof", "hif"}));
  ablate->add_option("--threads", ab_threads, "worker threads (0 = auto)");
  ablate->add_option("--seed", ab_seed, "seed echoed into the report");
  ablate->add_option("--out", ab_out, "output path (default stdout)");
  ablate->add_option("--format", ab_format, "output format")
      ->check(CLI::IsMember({"json", "csv"}));

  // ---- intersect ----
  DatasetOpts in_data;
  std::vector<int> in_ks = {8, 16, 32};
  int in_block = 0;
  int in_threads = 0;
  std::uint64_t in_seed = 0;
  std::string in_out, in_format = "json";
  auto* intersect = app.add_subcommand(
      "intersect", "count non-intersecting LaS vs LoF components per image");
  add_dataset_options(intersect, in_data);
  auto* in_ks_opt =
      intersect->add_option("--ks", in_ks, "per-channel component counts")
          ->delimiter(',')
          ->capture_default_str();
  intersect
      ->add_option("--k-block", in_block,
                   "block side length; uses k-block^2 components per channel")
      ->excludes(in_ks_opt);
  intersect->add_option("--threads", in_threads, "worker threads (0 = auto)");
  intersect->add_option("--seed", in_seed, "seed echoed into the report");
  intersect->add_option("--out", in_out, "output path (default stdout)");
  intersect->add_option("--format", in_format, "output format")
      ->check(CLI::IsMember({"json", "csv"}));

  // ---- attack-random ----
  DatasetOpts ar_data;
  OracleOpts ar_oracle;
  std::string ar_strategy = "las";
  int ar_k = 8;
  int ar_block = 0;
  double ar_mse_budget = 0.001;
  std::uint64_t ar_query_budget = 100;
  std::uint64_t ar_seed = 0;
  std::string ar_clip = "clip";
  int ar_threads = 0;
  std::string ar_out, ar_format = "json";
  auto* attack_random = app.add_subcommand(
      "attack-random", "budgeted random perturbation of selected components");
  add_dataset_options(attack_random, ar_data);
  add_oracle_options(attack_random, ar_oracle);
  attack_random->add_option("--strategy", ar_strategy, "selection strategy")
      ->check(CLI::IsMember({"las", "lof", "hif"}))
      ->capture_default_str();
  auto* ar_k_opt = attack_random
                       ->add_option("--k", ar_k, "components per channel")
                       ->check(CLI::PositiveNumber)
                       ->capture_default_str();
  attack_random
      ->add_option("--k-block", ar_block,
                   "block side length; uses k-block^2 components per channel")
      ->excludes(ar_k_opt);
  attack_random
      ->add_option("--mse-budget", ar_mse_budget,
                   "pre-clip MSE of every candidate; also the success bound")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  attack_random
      ->add_option("--query-budget", ar_query_budget, "max queries per image")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  attack_random->add_option("--seed", ar_seed, "PRNG seed")->required();
  attack_random->add_option("--clip-policy", ar_clip, "out-of-range handling")
      ->check(CLI::IsMember({"clip", "reject"}))
      ->capture_default_str();
  attack_random->add_option("--threads", ar_threads,
                            "worker threads (0 = auto)");
  attack_random->add_option("--out", ar_out, "output path (default stdout)");
  attack_random->add_option("--format", ar_format, "output format")
      ->check(CLI::IsMember({"json", "csv"}));

  // ---- attack-directed ----
  DatasetOpts ad_data;
  OracleOpts ad_oracle;
  double ad_delta = 1.0;
  int ad_k = 8;
  int ad_threads = 0;
  std::uint64_t ad_seed = 0;
  std::string ad_out, ad_format = "json";
  auto* attack_directed = app.add_subcommand(
      "attack-directed", "one-query correlation-directed perturbation at a "
                         "single (delta, k)");
  add_dataset_options(attack_directed, ad_data);
  add_oracle_options(attack_directed, ad_oracle);
  attack_directed->add_option("--delta", ad_delta, "perturbation level")
      ->capture_default_str();
  attack_directed->add_option("--k", ad_k, "top-k components per channel")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  attack_directed->add_option("--threads", ad_threads,
                              "worker threads (0 = auto)");
  attack_directed->add_option("--seed", ad_seed,
                              "seed echoed into the report");
  attack_directed->add_option("--out", ad_out, "output path (default stdout)");
  attack_directed->add_option("--format", ad_format, "output format")
      ->check(CLI::IsMember({"json", "csv"}));

  // ---- sweep ----
  DatasetOpts sw_data;
  OracleOpts sw_oracle;
  std::vector<double> sw_deltas = {0.0, 2.0, 4.0, 6.0, 8.0, 10.0};
  std::vector<int> sw_ks = {8, 20, 40};
  int sw_threads = 0;
  std::uint64_t sw_seed = 0;
  std::string sw_out, sw_format = "json";
  auto* sweep = app.add_subcommand(
      "sweep", "directed attack grid over delta and k");
  add_dataset_options(sweep, sw_data);
  add_oracle_options(sweep, sw_oracle);
  sweep->add_option("--deltas", sw_deltas, "delta grid")
      ->delimiter(',')
      ->capture_default_str();
  sweep->add_option("--ks", sw_ks, "k grid")
      ->delimiter(',')
      ->capture_default_str();
  sweep->add_option("--threads", sw_threads, "worker threads (0 = auto)");
  sweep->add_option("--seed", sw_seed, "seed echoed into the report");
  sweep->add_option("--out", sw_out, "output path (default stdout)");
  sweep->add_option("--format", sw_format, "output format")
      ->check(CLI::IsMember({"json", "csv"}));

  // ---- oracle-train ----
  DatasetOpts ot_data;
  std::string ot_out;
  auto* oracle_train = app.add_subcommand(
      "oracle-train", "train the nearest-centroid reference classifier");
  add_dataset_options(oracle_train, ot_data);
  oracle_train->add_option("--out", ot_out, "model JSON path")->required();

  // ---- oracle-serve-stub ----
  StubOptions stub;
  auto* serve_stub = app.add_subcommand(
      "oracle-serve-stub", "echo oracle speaking the line-JSON protocol on "
                           "stdio; label = round(first_pixel * (classes-1))");
  serve_stub->add_option("--classes", stub.classes, "label range")
      ->capture_default_str();
  serve_stub->add_option("--corrupt-at", stub.corrupt_at,
                         "damage the Nth response (testing aid)");
  serve_stub->add_option("--corrupt-mode", stub.corrupt_mode,
                         "kind of damage")
      ->check(CLI::IsMember({"badid", "badjson", "drop"}))
      ->capture_default_str();

  // ---- gen-dataset ----
  SynthConfig gen_cfg;
  std::string gen_dir;
  auto* gen = app.add_subcommand(
      "gen-dataset", "write the deterministic synthetic IDX benchmark pair");
  gen->add_option("--out-dir", gen_dir, "output directory")->required();
  gen->add_option("--train-per-class", gen_cfg.train_per_class, "")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen->add_option("--test-per-class", gen_cfg.test_per_class, "")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen->add_option("--classes", gen_cfg.classes, "")->capture_default_str();
  gen->add_option("--seed", gen_cfg.seed, "generator seed")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*dict_check) {
      const DctDictionary dict(dict_n);
      Eigen::MatrixXd gram = dict.matrix().transpose() * dict.matrix();
      gram.diagonal().array() -= 1.0;
      const double max_err = gram.cwiseAbs().maxCoeff();
      std::printf("n=%d max|D^T D - I| = %.6e\n", dict_n, max_err);
      return max_err <= 1e-9 ? kExitOk : kExitRuntime;
    }

    if (*transform) {
      const DatasetHandle ds = load_dataset(tr_data);
      const auto dict = DctDictionary::cached(
          static_cast<int>(ds.images.front().plane()));
      const int n = dict->n();
      int k = 0;
      if (tr_fraction > 0.0) {
        k = std::clamp(static_cast<int>(std::lround(tr_fraction * n)), 1, n);
      } else if (tr_k > 0) {
        k = tr_k;
      }
      nlohmann::ordered_json j;
      j["schema_version"] = kReportSchemaVersion;
      j["kind"] = "transform";
      j["kept_k"] = k;  // 0 = all components
      j["strategy"] = k > 0 ? tr_strategy : "none";
      std::string csv = "image_index,reconstruction_mse,psnr_db\n";
      auto& records = j["records"] = nlohmann::ordered_json::array();
      for (std::size_t i = 0; i < ds.size(); ++i) {
        SparseVector s = forward(ds.images[i], *dict);
        if (k > 0) {
          s = keep_only(s, select(s, strategy_from_string(tr_strategy), k));
        }
        const ImageTensor rec = clip(inverse(s, *dict));
        const double err = mse(ds.images[i], rec);
        nlohmann::ordered_json r;
        r["image_index"] = i;
        r["reconstruction_mse"] = err;
        const double p = psnr(err);
        if (std::isinf(p)) {
          r["psnr_db"] = "inf";
        } else {
          r["psnr_db"] = p;
        }
        records.push_back(std::move(r));
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%zu,%.12g,%.12g\n", i, err, p);
        csv += buf;
      }
      write_output(tr_format == "json" ? j.dump(2) : csv, tr_out);
      return kExitOk;
    }

    if (*select_cmd) {
      const DatasetHandle ds = load_dataset(sel_data);
      const auto dict = DctDictionary::cached(
          static_cast<int>(ds.images.front().plane()));
      const Strategy strategy = strategy_from_string(sel_strategy);
      nlohmann::ordered_json j;
      j["schema_version"] = kReportSchemaVersion;
      j["kind"] = "selection";
      j["strategy"] = sel_strategy;
      j["k"] = sel_k;
      std::string csv = "image_index,channel,coefficient_index\n";
      auto& records = j["records"] = nlohmann::ordered_json::array();
      for (std::size_t i = 0; i < ds.size(); ++i) {
        const SparseVector s = forward(ds.images[i], *dict);
        const SelectionMask mask = select(s, strategy, sel_k);
        nlohmann::ordered_json r;
        r["image_index"] = i;
        r["indices"] = mask.indices;
        records.push_back(std::move(r));
        for (std::size_t c = 0; c < mask.indices.size(); ++c) {
          for (int idx : mask.indices[c]) {
            csv += std::to_string(i) + "," + std::to_string(c) + "," +
                   std::to_string(idx) + "\n";
          }
        }
      }
      write_output(sel_format == "json" ? j.dump(2) : csv, sel_out);
      return kExitOk;
    }

    if (*ablate) {
      const DatasetHandle ds = load_dataset(ab_data);
      const auto oracle = make_oracle(ab_oracle);
      AblationConfig cfg;
      cfg.fractions = ab_fractions;
      for (const auto& s : ab_strategies) {
        cfg.strategies.push_back(strategy_from_string(s));
      }
      cfg.threads = threads_for(ab_oracle, ab_threads);
      cfg.seed = ab_seed;
      const AblationReport report = run_ablation(ds, *oracle, cfg);
      write_output(ab_format == "json" ? to_json(report) : to_csv(report),
                   ab_out);
      return kExitOk;
    }

    if (*intersect) {
      const DatasetHandle ds = load_dataset(in_data);
      IntersectionConfig cfg;
      cfg.ks = in_block > 0 ? std::vector<int>{in_block * in_block} : in_ks;
      cfg.threads = in_threads;
      cfg.seed = in_seed;
      const IntersectionReport report = run_intersection_study(ds, cfg);
      write_output(in_format == "json" ? to_json(report) : to_csv(report),
                   in_out);
      return kExitOk;
    }

    if (*attack_random) {
      const DatasetHandle ds = load_dataset(ar_data);
      const auto oracle = make_oracle(ar_oracle);
      AttackConfig cfg;
      cfg.strategy = strategy_from_string(ar_strategy);
      cfg.k = ar_block > 0 ? ar_block * ar_block : ar_k;
      cfg.mse_budget = ar_mse_budget;
      cfg.query_budget = ar_query_budget;
      cfg.rng_seed = ar_seed;
      cfg.clip_policy = ar_clip == "reject"
                            ? ClipPolicy::kRejectIfPostclipExceeds
                            : ClipPolicy::kClipAndMeasurePostclip;
      const QueryCampaignReport report = run_query_campaign(
          ds, *oracle, {cfg}, threads_for(ar_oracle, ar_threads));
      write_output(ar_format == "json" ? to_json(report) : to_csv(report),
                   ar_out);
      return kExitOk;
    }

    if (*attack_directed) {
      const DatasetHandle ds = load_dataset(ad_data);
      const auto oracle = make_oracle(ad_oracle);
      SweepConfig cfg;
      cfg.deltas = {ad_delta};
      cfg.ks = {ad_k};
      cfg.threads = threads_for(ad_oracle, ad_threads);
      cfg.seed = ad_seed;
      const SweepReport report = run_delta_sweep(ds, *oracle, cfg);
      write_output(ad_format == "json" ? to_json(report) : to_csv(report),
                   ad_out);
      return kExitOk;
    }

    if (*sweep) {
      const DatasetHandle ds = load_dataset(sw_data);
      const auto oracle = make_oracle(sw_oracle);
      SweepConfig cfg;
      cfg.deltas = sw_deltas;
      cfg.ks = sw_ks;
      cfg.threads = threads_for(sw_oracle, sw_threads);
      cfg.seed = sw_seed;
      const SweepReport report = run_delta_sweep(ds, *oracle, cfg);
      write_output(sw_format == "json" ? to_json(report) : to_csv(report),
                   sw_out);
      return kExitOk;
    }

    if (*oracle_train) {
      const DatasetHandle ds = load_dataset(ot_data);
      const CentroidModel model = train_centroid(ds.images, ds.labels);
      write_output(centroid_model_to_json(model), ot_out);
      return kExitOk;
    }

    if (*serve_stub) {
      return run_echo_stub(std::cin, std::cout, stub);
    }

    if (*gen) {
      const SynthDataset data = make_synthetic_dataset(gen_cfg);
      namespace fs = std::filesystem;
      fs::create_directories(gen_dir);
      const fs::path dir(gen_dir);
      save_idx(data.train, (dir / "train-images-idx3-ubyte").string(),
               (dir / "train-labels-idx1-ubyte").string());
      save_idx(data.test, (dir / "test-images-idx3-ubyte").string(),
               (dir / "test-labels-idx1-ubyte").string());
      std::printf("seed=%llu train=%zu test=%zu classes=%d -> %s\n",
                  static_cast<unsigned long long>(gen_cfg.seed),
                  data.train.size(), data.test.size(), gen_cfg.classes,
                  gen_dir.c_str());
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }

  return kExitUsage;
}
