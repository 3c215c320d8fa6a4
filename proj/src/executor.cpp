#include "perfseer/executor.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>
#include <sstream>

#include "json.hpp"
#include "perfseer/kernel_json.hpp"

namespace perfseer {

MeasurementRecord summarize(const std::vector<double>& times, double filter_factor) {
  if (times.empty()) throw EvalError("summarize needs at least one trial");
  std::vector<double> sorted = times;
  std::sort(sorted.begin(), sorted.end());
  double median;
  size_t n = sorted.size();
  if (n % 2 == 1)
    median = sorted[n / 2];
  else
    median = 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

  double cutoff = filter_factor * median;
  double sum = 0.0;
  int kept = 0;
  for (double t : times) {
    if (t > cutoff) continue;
    sum += t;
    ++kept;
  }
  MeasurementRecord rec;
  rec.raw = times;
  rec.trials = kept;
  rec.mean_seconds = sum / kept;
  return rec;
}

MeasurementRecord measure_kernel(Executor& ex, const Kernel& k,
                                 const std::map<std::string, long long>& bindings, int trials,
                                 double filter_factor) {
  if (trials < 1) throw EvalError("trials must be >= 1");
  MeasurementRecord rec = summarize(ex.measure(k, bindings, trials), filter_factor);
  rec.kernel_id = k.name;
  rec.bindings = bindings;
  return rec;
}

double geo_mean_rel_error(const std::vector<double>& pred, const std::vector<double>& meas) {
  if (pred.size() != meas.size()) throw EvalError("geo_mean_rel_error: length mismatch");
  if (pred.empty()) throw EvalError("geo_mean_rel_error: empty input");
  double acc = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (meas[i] <= 0) throw EvalError("geo_mean_rel_error: nonpositive measurement");
    if (pred[i] < 0) throw EvalError("geo_mean_rel_error: negative prediction");
    double rel = std::fabs(pred[i] - meas[i]) / meas[i];
    acc += std::log(std::max(rel, 1e-12));
  }
  return std::exp(acc / static_cast<double>(pred.size()));
}

// ---------------------------------------------------------------------------
// Synthetic device.

namespace {

std::string bucket_str(CostBucket b) {
  switch (b) {
    case CostBucket::gmem: return "gmem";
    case CostBucket::onchip: return "onchip";
    case CostBucket::overhead: return "overhead";
  }
  return "?";
}

CostBucket bucket_from_str(const std::string& s) {
  if (s == "gmem") return CostBucket::gmem;
  if (s == "onchip") return CostBucket::onchip;
  if (s == "overhead") return CostBucket::overhead;
  throw EvalError("unknown cost bucket '" + s + "'");
}

std::vector<FeatureSpec> parse_feature_product(const std::string& expr) {
  std::vector<FeatureSpec> specs;
  std::string cur;
  auto flush = [&]() {
    // trim
    size_t b = cur.find_first_not_of(" \t");
    size_t e = cur.find_last_not_of(" \t");
    if (b == std::string::npos) throw EvalError("empty feature factor in '" + expr + "'");
    std::string id = cur.substr(b, e - b + 1);
    FeatureSpec spec = parse_feature(id);
    if (spec.cls == FeatureSpec::Class::wall_time)
      throw EvalError("cost-table entries must use count-class features: " + id);
    specs.push_back(std::move(spec));
    cur.clear();
  };
  for (char c : expr) {
    if (c == '*') {
      flush();
    } else {
      cur += c;
    }
  }
  flush();
  return specs;
}

}  // namespace

SyntheticDevice::SyntheticDevice(SyntheticDeviceSpec spec) : spec_(std::move(spec)) {
  for (const auto& entry : spec_.cost_table)
    parsed_.emplace_back(parse_feature_product(entry.feature_expr), entry);
  if (spec_.noise_sigma < 0) throw EvalError("noise sigma must be >= 0");
  for (const auto& e : spec_.cost_table)
    if (e.seconds_per_unit <= 0) throw EvalError("all synthetic costs must be > 0");
}

double SyntheticDevice::base_time(const Kernel& kernel,
                                  const std::map<std::string, long long>& bindings) const {
  double gmem = 0.0, onchip = 0.0, overhead = 0.0;
  for (const auto& [specs, entry] : parsed_) {
    double value = 1.0;
    for (const auto& spec : specs)
      value *= evaluate_feature(spec, kernel, bindings, nullptr, 1, spec_.sub_group_size).numeric;
    double cost = value * entry.seconds_per_unit;
    switch (entry.bucket) {
      case CostBucket::gmem: gmem += cost; break;
      case CostBucket::onchip: onchip += cost; break;
      case CostBucket::overhead: overhead += cost; break;
    }
  }
  double groups = 1.0;
  auto counts = analyze_cached(kernel);
  if (counts->geometry) groups = to_double(counts->geometry->total_groups().eval(bindings));
  double combined = spec_.combine == CombineKind::linear ? gmem + onchip
                                                         : std::max(gmem, onchip);
  return spec_.overhead_kernel + spec_.overhead_group * groups + overhead + combined;
}

std::vector<double> SyntheticDevice::measure(const Kernel& kernel,
                                             const std::map<std::string, long long>& bindings,
                                             int trials) {
  if (trials < 1) throw EvalError("trials must be >= 1");
  double base = base_time(kernel, bindings);

  // Stream seeded by (device seed, kernel, bindings): reruns reproduce
  // exactly, distinct kernels get independent noise.
  uint64_t stream = spec_.seed;
  stream ^= kernel_hash(kernel) + 0x9e3779b97f4a7c15ull + (stream << 6) + (stream >> 2);
  uint64_t bh = fnv1a(bindings_str(bindings));
  stream ^= bh + 0x9e3779b97f4a7c15ull + (stream << 6) + (stream >> 2);
  std::mt19937_64 rng(stream);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  std::vector<double> out;
  out.reserve(static_cast<size_t>(trials));
  for (int t = 0; t < trials; ++t) {
    double v = base;
    if (spec_.noise_sigma > 0) v *= std::exp(spec_.noise_sigma * normal(rng));
    if (spec_.anomaly_prob > 0 && uniform(rng) < spec_.anomaly_prob) v *= spec_.anomaly_factor;
    out.push_back(v);
  }
  return out;
}

CombineKind classify_overlap(double full_time, double removed_time, double onchip_estimate,
                             double tolerance) {
  if (full_time <= 0) throw EvalError("classify_overlap: nonpositive full time");
  double sum = removed_time + onchip_estimate;
  return sum > full_time * (1.0 + tolerance) ? CombineKind::max_overlap : CombineKind::linear;
}

std::string SyntheticDeviceSpec::to_json_string() const {
  nlohmann::json j;
  j["schema"] = "perfseer-device/1";
  j["name"] = name;
  nlohmann::json table = nlohmann::json::array();
  for (const auto& e : cost_table) {
    nlohmann::json je;
    je["feature"] = e.feature_expr;
    je["bucket"] = bucket_str(e.bucket);
    je["seconds_per_unit"] = e.seconds_per_unit;
    table.push_back(std::move(je));
  }
  j["cost_table"] = std::move(table);
  j["combine"] = combine == CombineKind::linear ? "linear" : "max_overlap";
  j["overhead_kernel"] = overhead_kernel;
  j["overhead_group"] = overhead_group;
  j["noise_sigma"] = noise_sigma;
  j["anomaly_prob"] = anomaly_prob;
  j["anomaly_factor"] = anomaly_factor;
  j["seed"] = seed;
  j["sub_group_size"] = sub_group_size;
  return j.dump(2) + "\n";
}

SyntheticDeviceSpec SyntheticDeviceSpec::from_json_string(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.at("schema").get<std::string>() != "perfseer-device/1")
    throw EvalError("unsupported device schema");
  SyntheticDeviceSpec s;
  s.name = j.at("name").get<std::string>();
  for (const auto& je : j.at("cost_table")) {
    CostEntry e;
    e.feature_expr = je.at("feature").get<std::string>();
    e.bucket = bucket_from_str(je.at("bucket").get<std::string>());
    e.seconds_per_unit = je.at("seconds_per_unit").get<double>();
    s.cost_table.push_back(std::move(e));
  }
  std::string combine = j.at("combine").get<std::string>();
  if (combine == "linear") s.combine = CombineKind::linear;
  else if (combine == "max_overlap") s.combine = CombineKind::max_overlap;
  else throw EvalError("unknown combine kind '" + combine + "'");
  s.overhead_kernel = j.at("overhead_kernel").get<double>();
  s.overhead_group = j.at("overhead_group").get<double>();
  s.noise_sigma = j.value("noise_sigma", 0.0);
  s.anomaly_prob = j.value("anomaly_prob", 0.0);
  s.anomaly_factor = j.value("anomaly_factor", 10.0);
  s.seed = j.value("seed", 0ull);
  s.sub_group_size = j.value("sub_group_size", 32);
  return s;
}

// ---------------------------------------------------------------------------
// Registry.

namespace {
std::mutex g_registry_mutex;
std::map<std::string, std::shared_ptr<Executor>> g_registry;
}  // namespace

void register_executor(const std::shared_ptr<Executor>& ex) {
  std::lock_guard<std::mutex> lock(g_registry_mutex);
  g_registry[ex->id()] = ex;
}

std::shared_ptr<Executor> find_executor(const std::string& id) {
  std::lock_guard<std::mutex> lock(g_registry_mutex);
  auto it = g_registry.find(id);
  if (it == g_registry.end()) throw EvalError("no executor registered as '" + id + "'");
  return it->second;
}

// ---------------------------------------------------------------------------
// Measurement CSV.

std::string bindings_str(const std::map<std::string, long long>& bindings) {
  std::string out;
  for (const auto& [k, v] : bindings) {
    if (!out.empty()) out += ";";
    out += k + "=" + std::to_string(v);
  }
  return out;
}

std::map<std::string, long long> bindings_from_str(const std::string& text) {
  std::map<std::string, long long> out;
  std::string cur;
  auto flush = [&]() {
    if (cur.empty()) return;
    size_t eq = cur.find('=');
    if (eq == std::string::npos) throw EvalError("malformed binding '" + cur + "'");
    out[cur.substr(0, eq)] = std::stoll(cur.substr(eq + 1));
    cur.clear();
  };
  for (char c : text) {
    if (c == ';')
      flush();
    else
      cur += c;
  }
  flush();
  return out;
}

std::string measurements_to_csv(const std::vector<MeasurementRecord>& records) {
  std::ostringstream os;
  os.precision(17);
  os << "kernel,bindings,mean_seconds,trials\n";
  for (const auto& r : records)
    os << r.kernel_id << "," << bindings_str(r.bindings) << "," << r.mean_seconds << ","
       << r.trials << "\n";
  return os.str();
}

std::vector<MeasurementRecord> measurements_from_csv(const std::string& text) {
  std::vector<MeasurementRecord> out;
  std::istringstream is(text);
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        cells.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur += c;
      }
    }
    cells.push_back(cur);
    if (cells.size() != 4) throw EvalError("malformed measurement CSV line: " + line);
    MeasurementRecord r;
    r.kernel_id = cells[0];
    r.bindings = bindings_from_str(cells[1]);
    r.mean_seconds = std::stod(cells[2]);
    r.trials = std::stoi(cells[3]);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace perfseer
