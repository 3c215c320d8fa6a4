#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "perfseer/features.hpp"
#include "perfseer/ir.hpp"

namespace perfseer {

/// Measurement backend contract. Implementations return per-trial wall times
/// in seconds; the synthetic device is deterministic given its seed.
/// Executors are exclusive resources: callers serialize per executor id.
class Executor {
public:
  virtual ~Executor() = default;
  virtual std::string id() const = 0;
  virtual std::vector<double> measure(const Kernel& kernel,
                                      const std::map<std::string, long long>& bindings,
                                      int trials) = 0;
};

struct MeasurementRecord {
  std::string kernel_id;
  std::map<std::string, long long> bindings;
  int trials = 0;              // surviving trials after outlier filtering
  double mean_seconds = 0.0;   // mean of survivors
  std::vector<double> raw;     // all trials as measured
};

/// Drops trials above filter_factor times the median, then averages. The
/// median always survives for factors above one.
MeasurementRecord summarize(const std::vector<double>& times, double filter_factor = 5.0);

MeasurementRecord measure_kernel(Executor& ex, const Kernel& k,
                                 const std::map<std::string, long long>& bindings,
                                 int trials = 60, double filter_factor = 5.0);

/// exp(mean(ln(|pred-meas|/meas))), with exact-zero errors floored at 1e-12.
double geo_mean_rel_error(const std::vector<double>& pred, const std::vector<double>& meas);

/// Which cost pool a synthetic cost entry feeds.
enum class CostBucket { gmem, onchip, overhead };

/// One hidden ground-truth cost: seconds per unit of a feature expression
/// (a feature id, or a '*'-joined product of feature ids).
struct CostEntry {
  std::string feature_expr;
  CostBucket bucket;
  double seconds_per_unit;
};

enum class CombineKind { linear, max_overlap };

/// Built-in executor with a hidden ground-truth cost model, used to verify
/// calibration round trips without hardware.
struct SyntheticDeviceSpec {
  std::string name = "device";
  std::vector<CostEntry> cost_table;
  CombineKind combine = CombineKind::linear;
  double overhead_kernel = 0.0;  // seconds per launch
  double overhead_group = 0.0;   // seconds per work-group
  double noise_sigma = 0.0;      // multiplicative lognormal
  double anomaly_prob = 0.0;
  double anomaly_factor = 10.0;
  uint64_t seed = 0;
  int sub_group_size = 32;

  std::string to_json_string() const;
  static SyntheticDeviceSpec from_json_string(const std::string& text);
};

class SyntheticDevice : public Executor {
public:
  explicit SyntheticDevice(SyntheticDeviceSpec spec);
  std::string id() const override { return "synthetic_" + spec_.name; }
  std::vector<double> measure(const Kernel& kernel,
                              const std::map<std::string, long long>& bindings,
                              int trials) override;

  /// Noise-free time: overheads plus combine(gmem, on-chip).
  double base_time(const Kernel& kernel,
                   const std::map<std::string, long long>& bindings) const;
  const SyntheticDeviceSpec& spec() const { return spec_; }

private:
  SyntheticDeviceSpec spec_;
  std::vector<std::pair<std::vector<FeatureSpec>, CostEntry>> parsed_;
};

/// Overlap diagnosis: when the work-removed time plus the estimated on-chip
/// cost is close to the full time, costs add (linear); when the sum
/// significantly exceeds the full time, on-chip cost is being hidden
/// (max_overlap).
CombineKind classify_overlap(double full_time, double removed_time, double onchip_estimate,
                             double tolerance = 0.15);

/// Executor registry; built-in synthetic devices register as
/// "synthetic_<name>".
void register_executor(const std::shared_ptr<Executor>& ex);
std::shared_ptr<Executor> find_executor(const std::string& id);

/// Measurement CSV: kernel id, bindings, mean seconds, trial count.
std::string measurements_to_csv(const std::vector<MeasurementRecord>& records);
std::vector<MeasurementRecord> measurements_from_csv(const std::string& text);
std::string bindings_str(const std::map<std::string, long long>& bindings);
std::map<std::string, long long> bindings_from_str(const std::string& text);

}  // namespace perfseer
