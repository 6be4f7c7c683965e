#include "physguard/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "physguard/errors.hpp"

namespace physguard {

namespace {

void require_both(const ScoreSet& s, const char* op) {
  if (s.genuine.empty() || s.fake.empty())
    throw EmptyClass(std::string(op) + ": both genuine and deepfake scores are required");
}

std::vector<double> sorted(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<OperatingPoint> operating_points(const ScoreSet& scores) {
  require_both(scores, "operating_points");
  const auto g = sorted(scores.genuine);
  const auto f = sorted(scores.fake);
  std::vector<double> all(g);
  all.insert(all.end(), f.begin(), f.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  std::vector<double> thresholds;
  thresholds.reserve(all.size() + 1);
  thresholds.push_back(all.front() - 1.0);
  for (std::size_t i = 0; i + 1 < all.size(); ++i) thresholds.push_back(0.5 * (all[i] + all[i + 1]));
  thresholds.push_back(all.back() + 1.0);

  const auto ng = static_cast<double>(g.size()), nf = static_cast<double>(f.size());
  std::vector<OperatingPoint> points;
  points.reserve(thresholds.size());
  std::size_t gi = 0, fi = 0;  // scores below the current threshold
  for (double t : thresholds) {
    while (gi < g.size() && g[gi] < t) ++gi;
    while (fi < f.size() && f[fi] < t) ++fi;
    points.push_back({t, static_cast<double>(gi) / ng, static_cast<double>(f.size() - fi) / nf});
  }
  return points;
}

EerResult eer(const ScoreSet& scores) {
  const auto pts = operating_points(scores);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d0 = pts[i].false_accept - pts[i].false_reject;
    if (d0 == 0.0) return {pts[i].false_reject, pts[i].threshold};
    if (i + 1 == pts.size()) break;
    const double d1 = pts[i + 1].false_accept - pts[i + 1].false_reject;
    if (d0 > 0.0 && d1 < 0.0) {
      const double lambda = d0 / (d0 - d1);
      const double rate =
          pts[i].false_reject + lambda * (pts[i + 1].false_reject - pts[i].false_reject);
      const double thr = pts[i].threshold + lambda * (pts[i + 1].threshold - pts[i].threshold);
      return {rate, thr};
    }
  }
  // Unreachable: the first point has FA = 1, FR = 0 and the last FA = 0, FR = 1.
  throw EmptyClass("eer: no crossing found");
}

double roc_auc(const ScoreSet& scores) {
  require_both(scores, "roc_auc");
  struct Item {
    double score;
    bool genuine;
  };
  std::vector<Item> items;
  items.reserve(scores.genuine.size() + scores.fake.size());
  for (double s : scores.genuine) items.push_back({s, true});
  for (double s : scores.fake) items.push_back({s, false});
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.score < b.score; });

  // U = sum over genuine of (#fake below + 0.5 #fake tied), via tie groups.
  double u = 0.0;
  std::size_t fake_below = 0;
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i, g = 0, f = 0;
    while (j < items.size() && items[j].score == items[i].score) {
      (items[j].genuine ? g : f) += 1;
      ++j;
    }
    u += static_cast<double>(g) * (static_cast<double>(fake_below) + 0.5 * static_cast<double>(f));
    fake_below += f;
    i = j;
  }
  return u / (static_cast<double>(scores.genuine.size()) * static_cast<double>(scores.fake.size()));
}

void TdcfCosts::validate() const {
  auto in_open = [](double p) { return p > 0.0 && p < 1.0; };
  auto in_closed = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!in_open(p_spoof) || !in_open(p_target) || !in_open(p_nontarget))
    throw BadCosts("t-DCF priors must lie in (0, 1)");
  if (std::abs(p_spoof + p_target + p_nontarget - 1.0) > 1e-9)
    throw BadCosts("t-DCF priors must sum to 1");
  if (!(c_miss_asv > 0.0 && c_fa_asv > 0.0 && c_miss_cm > 0.0 && c_fa_cm > 0.0))
    throw BadCosts("t-DCF costs must be positive");
  if (!in_closed(asv_p_miss) || !in_closed(asv_p_fa) || !in_closed(asv_p_miss_spoof))
    throw BadCosts("verification error rates must lie in [0, 1]");
  if (!(c1() > 0.0) || !(c2() > 0.0))
    throw BadCosts("t-DCF coefficients must be positive; verification error rates too high");
}

double TdcfCosts::c1() const {
  return p_target * (c_miss_cm - c_miss_asv * asv_p_miss) - p_nontarget * c_fa_asv * asv_p_fa;
}

double TdcfCosts::c2() const { return c_fa_cm * p_spoof * (1.0 - asv_p_miss_spoof); }

double min_tdcf(const ScoreSet& scores, const TdcfCosts& costs) {
  costs.validate();
  const double c1 = costs.c1(), c2 = costs.c2();
  const double norm = std::min(c1, c2);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : operating_points(scores))
    best = std::min(best, (c1 * p.false_reject + c2 * p.false_accept) / norm);
  return best;
}

double ks_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw EmptyClass("ks_distance: both samples must be non-empty");
  const auto sa = sorted(a), sb = sorted(b);
  const auto na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() || j < sb.size()) {
    double v;
    if (j == sb.size() || (i < sa.size() && sa[i] <= sb[j]))
      v = sa[i];
    else
      v = sb[j];
    while (i < sa.size() && sa[i] == v) ++i;
    while (j < sb.size() && sb[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

std::vector<EcdfRow> ecdf_table(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw EmptyClass("ecdf_table: both samples must be non-empty");
  const auto sa = sorted(a), sb = sorted(b);
  const auto na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
  std::vector<EcdfRow> rows;
  rows.push_back({std::min(sa.front(), sb.front()), 0.0, 0.0, false});
  std::size_t i = 0, j = 0, best = 0;
  double best_d = -1.0;
  while (i < sa.size() || j < sb.size()) {
    double v;
    if (j == sb.size() || (i < sa.size() && sa[i] <= sb[j]))
      v = sa[i];
    else
      v = sb[j];
    while (i < sa.size() && sa[i] == v) ++i;
    while (j < sb.size() && sb[j] == v) ++j;
    rows.push_back({v, static_cast<double>(i) / na, static_cast<double>(j) / nb, false});
    const double d = std::abs(rows.back().ecdf_a - rows.back().ecdf_b);
    if (d > best_d) {
      best_d = d;
      best = rows.size() - 1;
    }
  }
  rows[best].ks_marker = true;
  return rows;
}

std::string ecdf_csv(std::span<const EcdfRow> rows, const std::string& label_a, const std::string& label_b) {
  std::string out = "value,ecdf_" + label_a + ",ecdf_" + label_b + ",ks_marker\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d\n", r.value, r.ecdf_a, r.ecdf_b,
                  r.ks_marker ? 1 : 0);
    out += buf;
  }
  return out;
}

MetricReport metric_report(const ScoreSet& scores, const TdcfCosts& costs) {
  const auto e = eer(scores);
  return {e.eer, e.threshold, roc_auc(scores), min_tdcf(scores, costs), scores.genuine.size(),
          scores.fake.size()};
}

std::string to_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["eer"] = r.eer;
  j["eer_threshold"] = r.eer_threshold;
  j["roc_auc"] = r.roc_auc;
  j["min_tdcf"] = r.min_tdcf;
  j["n_genuine"] = r.n_genuine;
  j["n_fake"] = r.n_fake;
  return j.dump(2) + '\n';
}

}  // namespace physguard
