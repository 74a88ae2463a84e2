#include "sparseadv/report.hpp"

#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>

namespace sparseadv {

namespace {

using json = nlohmann::ordered_json;

json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

json attack_record_json(const AttackRecord& r, bool directed) {
  json j;
  j["image_index"] = r.image_index;
  j["outcome"] = to_string(r.outcome);
  j["queries"] = r.queries;
  j["original_label"] = r.original_label;
  j["adversarial_label"] = r.adversarial_label;
  j["final_mse"] = number(r.final_mse);
  j["final_psnr_db"] = number(r.final_psnr);
  j["preclip_mse"] = number(r.preclip_mse);
  if (directed) j["predicted_mse"] = number(r.predicted_mse);
  return j;
}

json envelope(const char* kind, std::uint64_t seed) {
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["kind"] = kind;
  j["rng_seed"] = seed;
  return j;
}

json attack_config_json(const AttackConfig& cfg) {
  json j;
  j["strategy"] = to_string(cfg.strategy);
  j["k"] = cfg.k;
  j["mse_budget"] = number(cfg.mse_budget);
  j["query_budget"] = cfg.query_budget;
  j["rng_seed"] = cfg.rng_seed;
  j["clip_policy"] = cfg.clip_policy == ClipPolicy::kClipAndMeasurePostclip
                         ? "clip_and_measure_postclip"
                         : "reject_if_postclip_exceeds";
  return j;
}

}  // namespace

std::string to_json(const AblationReport& report) {
  json j = envelope("ablation", report.config.seed);
  auto& cfg = j["config"];
  cfg["fractions"] = json::array();
  for (double f : report.config.fractions) cfg["fractions"].push_back(number(f));
  cfg["strategies"] = json::array();
  for (Strategy s : report.config.strategies) {
    cfg["strategies"].push_back(to_string(s));
  }
  j["total"] = report.total;
  j["baseline"] = {{"correct", report.baseline_correct},
                   {"accuracy", number(report.baseline_accuracy)},
                   {"predicted", report.baseline_predicted}};
  auto& cells = j["cells"] = json::array();
  for (const auto& cell : report.cells) {
    json c;
    c["strategy"] = to_string(cell.strategy);
    c["fraction"] = number(cell.fraction);
    c["k"] = cell.k;
    c["correct"] = cell.correct;
    c["accuracy"] = number(cell.accuracy);
    c["predicted"] = cell.predicted;
    cells.push_back(std::move(c));
  }
  return j.dump(2);
}

std::string to_json(const QueryCampaignReport& report) {
  json j = envelope("query_campaign", report.seed);
  j["excluded_image_indices"] = report.excluded;
  j["attacked"] = report.attacked;
  auto& arms = j["arms"] = json::array();
  for (const auto& arm : report.arms) {
    json a;
    a["config"] = attack_config_json(arm.config);
    json aggregates;
    aggregates["successes"] = arm.successes;
    aggregates["successes_within_10"] = arm.successes_within_10;
    aggregates["success_rate"] = number(arm.success_rate);
    aggregates["mean_queries_to_success"] =
        number(arm.mean_queries_to_success);
    aggregates["median_queries_to_success"] =
        number(arm.median_queries_to_success);
    aggregates["total_queries"] = arm.total_queries;
    json histogram = json::array();
    for (const auto& [queries, successes] : arm.query_histogram) {
      histogram.push_back({{"queries", queries}, {"successes", successes}});
    }
    aggregates["query_histogram"] = std::move(histogram);
    a["aggregates"] = std::move(aggregates);
    auto& records = a["records"] = json::array();
    for (const auto& r : arm.records) {
      records.push_back(attack_record_json(r, false));
    }
    arms.push_back(std::move(a));
  }
  return j.dump(2);
}

std::string to_json(const SweepReport& report) {
  json j = envelope("delta_sweep", report.config.seed);
  auto& cfg = j["config"];
  cfg["deltas"] = json::array();
  for (double d : report.config.deltas) cfg["deltas"].push_back(number(d));
  cfg["ks"] = report.config.ks;
  j["total"] = report.total;
  auto& cells = j["cells"] = json::array();
  for (const auto& cell : report.cells) {
    json c;
    c["delta"] = number(cell.delta);
    c["k"] = cell.k;
    c["misclassified"] = cell.misclassified;
    c["misclassification_rate"] = number(cell.misclassification_rate);
    c["mean_psnr_db"] = number(cell.mean_psnr);
    c["mean_preclip_psnr_db"] = number(cell.mean_preclip_psnr);
    auto& records = c["records"] = json::array();
    for (const auto& r : cell.records) {
      records.push_back(attack_record_json(r, true));
    }
    cells.push_back(std::move(c));
  }
  return j.dump(2);
}

std::string to_json(const IntersectionReport& report) {
  json j = envelope("intersection_study", report.config.seed);
  j["config"]["ks"] = report.config.ks;
  j["total"] = report.total;
  auto& rows = j["rows"] = json::array();
  for (const auto& row : report.rows) {
    json r;
    r["k"] = row.k;
    r["mean"] = number(row.mean);
    r["min"] = row.min;
    r["max"] = row.max;
    r["per_image"] = row.per_image;
    rows.push_back(std::move(r));
  }
  return j.dump(2);
}

std::string to_csv(const AblationReport& report) {
  std::string out = "strategy,fraction,k,correct,total,accuracy\n";
  out += "all_components,1,," + std::to_string(report.baseline_correct) + "," +
         std::to_string(report.total) + "," +
         format_double(report.baseline_accuracy) + "\n";
  for (const auto& cell : report.cells) {
    out += std::string(to_string(cell.strategy)) + "," +
           format_double(cell.fraction) + "," + std::to_string(cell.k) + "," +
           std::to_string(cell.correct) + "," + std::to_string(report.total) +
           "," + format_double(cell.accuracy) + "\n";
  }
  return out;
}

std::string to_csv(const QueryCampaignReport& report) {
  std::string out = "queries";
  std::uint64_t max_queries = 0;
  for (const auto& arm : report.arms) {
    out += ",successes_" + std::string(to_string(arm.config.strategy));
    if (!arm.query_histogram.empty()) {
      max_queries = std::max(max_queries, arm.query_histogram.rbegin()->first);
    }
  }
  out += "\n";
  for (std::uint64_t q = 1; q <= max_queries; ++q) {
    out += std::to_string(q);
    for (const auto& arm : report.arms) {
      const auto it = arm.query_histogram.find(q);
      out += "," + std::to_string(it == arm.query_histogram.end()
                                      ? 0
                                      : it->second);
    }
    out += "\n";
  }
  return out;
}

std::string to_csv(const SweepReport& report) {
  std::string out =
      "delta,k,misclassified,total,misclassification_rate,mean_psnr_db,"
      "mean_preclip_psnr_db\n";
  for (const auto& cell : report.cells) {
    out += format_double(cell.delta) + "," + std::to_string(cell.k) + "," +
           std::to_string(cell.misclassified) + "," +
           std::to_string(report.total) + "," +
           format_double(cell.misclassification_rate) + "," +
           format_double(cell.mean_psnr) + "," +
           format_double(cell.mean_preclip_psnr) + "\n";
  }
  return out;
}

std::string to_csv(const IntersectionReport& report) {
  std::string out = "k,image_index,non_intersecting\n";
  for (const auto& row : report.rows) {
    for (std::size_t i = 0; i < row.per_image.size(); ++i) {
      out += std::to_string(row.k) + "," + std::to_string(i) + "," +
             std::to_string(row.per_image[i]) + "\n";
    }
  }
  return out;
}

}  // namespace sparseadv
