#include "cranial/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cranial/metrics.hpp"

namespace cranial {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

CaseMetrics evaluate_case(const std::string& case_id, const Mask& pred, const Mask& truth) {
  const OverlapCounts c = overlap_counts(pred, truth);
  CaseMetrics m{case_id, dsc(c), std::nullopt, reconstruction_error(c)};
  if (c.pred + c.truth - 2 * c.intersection !=
      static_cast<std::size_t>(std::llround(m.re * static_cast<double>(c.total)))) {
    throw std::logic_error("reconstruction error disagrees with overlap counts for " + case_id);
  }
  if (c.pred > 0 && c.truth > 0) m.hd_mm = hausdorff_mm(pred, truth, truth.spacing());
  return m;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty list");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

Summary summarize(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("summary of an empty list");
  Summary s;
  s.count = values.size();
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  s.median = quantile(values, 0.5);
  s.q1 = quantile(values, 0.25);
  s.q3 = quantile(values, 0.75);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  s.min = *lo;
  s.max = *hi;
  return s;
}

void recompute_aggregates(EvalReport& report) {
  std::vector<double> d, h, e;
  report.hd_undefined = 0;
  for (const CaseMetrics& r : report.rows) {
    d.push_back(r.dsc);
    e.push_back(r.re);
    if (r.hd_mm) {
      h.push_back(*r.hd_mm);
    } else {
      ++report.hd_undefined;
    }
  }
  report.dsc = d.empty() ? Summary{} : summarize(d);
  report.re = e.empty() ? Summary{} : summarize(e);
  report.hd_mm = h.empty() ? Summary{} : summarize(h);
}

EvalReport evaluate_set(const std::vector<std::string>& case_ids, const std::vector<Mask>& predictions,
                        const std::vector<Mask>& truths, std::string mode, std::string config_hash) {
  if (case_ids.size() != predictions.size() || case_ids.size() != truths.size()) {
    throw std::invalid_argument("evaluate_set: " + std::to_string(case_ids.size()) + " ids, " +
                                std::to_string(predictions.size()) + " predictions, " +
                                std::to_string(truths.size()) + " ground truths");
  }
  EvalReport report;
  report.mode = std::move(mode);
  report.config_hash = std::move(config_hash);
  for (std::size_t i = 0; i < case_ids.size(); ++i) {
    if (predictions[i].dims() != truths[i].dims()) {
      throw ShapeError("case " + case_ids[i] + ": prediction dims " + to_string(predictions[i].dims()) +
                       " differ from ground truth " + to_string(truths[i].dims()));
    }
    report.rows.push_back(evaluate_case(case_ids[i], predictions[i], truths[i]));
  }
  std::sort(report.rows.begin(), report.rows.end(),
            [](const CaseMetrics& a, const CaseMetrics& b) { return a.case_id < b.case_id; });
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    if (report.rows[i].case_id == report.rows[i - 1].case_id) {
      throw std::invalid_argument("duplicate case id " + report.rows[i].case_id);
    }
  }
  recompute_aggregates(report);
  return report;
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xf];
  return out;
}

std::string report_csv(const EvalReport& r) {
  std::string out = "case_id,dsc,hd_mm,re\n";
  for (const CaseMetrics& row : r.rows) {
    out += row.case_id + ',' + format_double(row.dsc) + ',' + (row.hd_mm ? format_double(*row.hd_mm) : "NA") + ',' +
           format_double(row.re) + '\n';
  }
  return out;
}

namespace {

json summary_json(const Summary& s) {
  if (s.count == 0) return nullptr;
  return {{"count", s.count}, {"mean", s.mean}, {"median", s.median}, {"q1", s.q1},
          {"q3", s.q3},       {"min", s.min},   {"max", s.max}};
}

}  // namespace

json report_json(const EvalReport& r) {
  json rows = json::array();
  for (const CaseMetrics& row : r.rows) {
    rows.push_back({{"case_id", row.case_id},
                    {"dsc", row.dsc},
                    {"hd_mm", row.hd_mm ? json(*row.hd_mm) : json(nullptr)},
                    {"re", row.re}});
  }
  return {
      {"metadata",
       {{"mode", r.mode},
        {"config_hash", r.config_hash},
        {"hd_point_set", "all foreground voxel centres"},
        {"quartile_method", "linear interpolation, inclusive (position q*(n-1))"},
        {"hd_undefined_cases", r.hd_undefined}}},
      {"rows", rows},
      {"aggregates", {{"dsc", summary_json(r.dsc)}, {"hd_mm", summary_json(r.hd_mm)}, {"re", summary_json(r.re)}}},
      {"reference_values",
       {{"note", "published real-CT results for the coarse and fine networks, for context only"},
        {"coarse_network", {{"dsc", 0.8097}, {"hd_mm", 5.4404}, {"re", 0.0020}}},
        {"fine_network", {{"dsc", 0.8555}, {"hd_mm", 5.1825}, {"re", 0.0015}}}}},
  };
}

}  // namespace cranial
