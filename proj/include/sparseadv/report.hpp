#ifndef SPARSEADV_REPORT_HPP
#define SPARSEADV_REPORT_HPP

#include <string>

#include "sparseadv/experiments.hpp"

namespace sparseadv {

// Reports serialize to JSON for machines and CSV tables for plotters. The
// JSON bytes are a determinism surface: identical config + seed must yield
// identical output, so key order is fixed and non-finite values are encoded
// as the strings "inf", "-inf", "nan".

inline constexpr int kReportSchemaVersion = 1;

std::string to_json(const AblationReport& report);
std::string to_json(const QueryCampaignReport& report);
std::string to_json(const SweepReport& report);
std::string to_json(const IntersectionReport& report);

std::string to_csv(const AblationReport& report);
// Per-query-count success histogram, one column per arm.
std::string to_csv(const QueryCampaignReport& report);
std::string to_csv(const SweepReport& report);
// Long form: one row per (k, image).
std::string to_csv(const IntersectionReport& report);

}  // namespace sparseadv

#endif  // SPARSEADV_REPORT_HPP
