#pragma once

#include <span>
#include <string>
#include <vector>

namespace physguard {

// Detection scores; higher means more likely genuine.
struct ScoreSet {
  std::vector<double> genuine;
  std::vector<double> fake;
};

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

// Operating points of the rule "accept iff score > t", at t = min - 1,
// every midpoint of consecutive distinct scores, and max + 1.
struct OperatingPoint {
  double threshold = 0.0;
  double false_reject = 0.0;  // genuine rejected
  double false_accept = 0.0;  // deepfake accepted
};

std::vector<OperatingPoint> operating_points(const ScoreSet& scores);

// Crossing of the false-accept and false-reject curves, linearly interpolated
// between adjacent operating points. Throws EmptyClass.
EerResult eer(const ScoreSet& scores);

// Mann-Whitney U / (n_g n_f), ties counted 0.5.
double roc_auc(const ScoreSet& scores);

// Tandem detection cost constants. Defaults follow the ASVspoof 2019
// normalized t-DCF with an error-free verification stage.
struct TdcfCosts {
  double p_spoof = 0.05;
  double p_target = 0.95 * 0.99;
  double p_nontarget = 0.95 * 0.01;
  double c_miss_asv = 1.0;
  double c_fa_asv = 10.0;
  double c_miss_cm = 1.0;
  double c_fa_cm = 10.0;
  double asv_p_miss = 0.0;
  double asv_p_fa = 0.0;
  double asv_p_miss_spoof = 0.0;

  // Throws BadCosts unless priors lie in (0,1) and sum to 1, costs are
  // positive, verification error rates lie in [0,1], and both tandem
  // coefficients are positive.
  void validate() const;
  double c1() const;  // weight of countermeasure misses
  double c2() const;  // weight of countermeasure false alarms
};

// min over thresholds of (C1 P_miss + C2 P_fa) / min(C1, C2), in [0, 1].
double min_tdcf(const ScoreSet& scores, const TdcfCosts& costs = {});

// sup |F_a - F_b| over all sample points.
double ks_distance(std::span<const double> a, std::span<const double> b);

struct EcdfRow {
  double value = 0.0;
  double ecdf_a = 0.0;
  double ecdf_b = 0.0;
  bool ks_marker = false;
};

// Step-function table: an anchor row with both ECDFs at 0, then one row per
// distinct value. The first row attaining the KS distance is marked.
std::vector<EcdfRow> ecdf_table(std::span<const double> a, std::span<const double> b);
std::string ecdf_csv(std::span<const EcdfRow> rows, const std::string& label_a,
                     const std::string& label_b);

struct MetricReport {
  double eer = 0.0;
  double eer_threshold = 0.0;
  double roc_auc = 0.0;
  double min_tdcf = 0.0;
  std::size_t n_genuine = 0;
  std::size_t n_fake = 0;
};

MetricReport metric_report(const ScoreSet& scores, const TdcfCosts& costs = {});
std::string to_json(const MetricReport& report);

}  // namespace physguard
