#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cranial/grid.hpp"

namespace cranial {

struct CaseMetrics {
  std::string case_id;
  double dsc = 0.0;
  std::optional<double> hd_mm;  // empty when either mask is empty
  double re = 0.0;

  friend bool operator==(const CaseMetrics&, const CaseMetrics&) = default;
};

/// DSC, HD and RE of one prediction. Checks that RE and DSC agree with the
/// shared voxel counts.
CaseMetrics evaluate_case(const std::string& case_id, const Mask& pred, const Mask& truth);

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double min = 0.0;
  double max = 0.0;

  friend bool operator==(const Summary&, const Summary&) = default;
};

/// Quantile with inclusive linear interpolation: position q * (n - 1) in the
/// sorted values.
double quantile(std::vector<double> values, double q);

/// Throws std::invalid_argument on an empty list.
Summary summarize(const std::vector<double>& values);

struct EvalReport {
  std::string mode;
  std::string config_hash;
  std::vector<CaseMetrics> rows;  // sorted by case id
  Summary dsc;
  Summary hd_mm;
  Summary re;
  std::size_t hd_undefined = 0;
};

/// Metrics for aligned lists, rows sorted by case id. Predictions must have
/// the ground-truth dims. Throws std::invalid_argument on mismatched lists.
EvalReport evaluate_set(const std::vector<std::string>& case_ids, const std::vector<Mask>& predictions,
                        const std::vector<Mask>& truths, std::string mode = "direct", std::string config_hash = "");

/// Recomputes the aggregates from `report.rows`.
void recompute_aggregates(EvalReport& report);

/// 64-bit FNV-1a of `text`, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view text);

/// Header "case_id,dsc,hd_mm,re"; undefined distances are written as NA.
std::string report_csv(const EvalReport& r);
nlohmann::json report_json(const EvalReport& r);

/// Shortest round-trip decimal form of `v`.
std::string format_double(double v);

}  // namespace cranial
