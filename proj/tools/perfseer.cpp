#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "perfseer/executor.hpp"
#include "perfseer/kernel_json.hpp"
#include "perfseer/lang.hpp"
#include "perfseer/manifest.hpp"
#include "perfseer/model.hpp"
#include "perfseer/oracle.hpp"
#include "perfseer/uipick.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace perfseer;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << content;
}

Kernel load_kernel(const std::string& path) {
  std::string text = read_file(path);
  if (fs::path(path).extension() == ".json")
    return kernel_from_json(json::parse(text));
  return parse_kernel_text(text, fs::path(path).stem().string());
}

std::map<std::string, long long> parse_bindings(const std::vector<std::string>& binds) {
  std::map<std::string, long long> out;
  for (const auto& b : binds) {
    size_t eq = b.find('=');
    if (eq == std::string::npos) throw Error("binding must be name=value: " + b);
    out[b.substr(0, eq)] = std::stoll(b.substr(eq + 1));
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct LoadedSet {
  std::vector<KernelInstance> kernels;
  std::map<std::string, std::string> generator_of;  // id -> generator
  json manifest;
};

LoadedSet load_kernel_dir(const std::string& dir) {
  LoadedSet out;
  fs::path mpath = fs::path(dir) / "manifest.json";
  if (!fs::exists(mpath)) throw Error("no manifest.json in " + dir);
  out.manifest = json::parse(read_file(mpath.string()));
  for (const auto& jk : out.manifest.at("kernels")) {
    KernelInstance inst;
    inst.id = jk.at("id").get<std::string>();
    inst.kernel = kernel_from_json(
        json::parse(read_file((fs::path(dir) / jk.at("file").get<std::string>()).string())));
    for (const auto& [k, v] : jk.at("bindings").items())
      inst.bindings[k] = v.get<long long>();
    out.generator_of[inst.id] = jk.value("generator", "");
    out.kernels.push_back(std::move(inst));
  }
  return out;
}

json counts_to_json(const KernelCounts& counts,
                    const std::map<std::string, long long>& bindings, int sub_group_size) {
  json j;
  bool bound = true;
  auto eval_or_null = [&](const Poly& p) -> json {
    if (!bound) return nullptr;
    try {
      Rational v = p.eval(bindings);
      return json{{"num", BigInt(numerator(v)).str()}, {"den", BigInt(denominator(v)).str()}};
    } catch (const Error&) {
      bound = false;
      return nullptr;
    }
  };
  json ops = json::array();
  for (const auto& e : counts.ops) {
    json je;
    je["dtype"] = dtype_str(e.kind.dtype);
    je["op"] = opname_str(e.kind.op);
    je["granularity"] = granularity_str(e.kind.gran);
    je["count"] = e.count.str();
    je["value"] = eval_or_null(e.count);
    ops.push_back(std::move(je));
  }
  j["ops"] = std::move(ops);
  json accesses = json::array();
  for (const auto& e : counts.accesses) {
    json je;
    je["pattern"] = e.pattern.key();
    je["granularity"] = granularity_str(e.pattern.gran);
    je["afr"] = e.pattern.afr.str();
    je["count"] = e.count.str();
    je["value"] = eval_or_null(e.count);
    accesses.push_back(std::move(je));
  }
  j["accesses"] = std::move(accesses);
  json sync = json::object();
  for (const auto& e : counts.sync) {
    sync[synckind_str(e.kind)] = json{{"count", e.count.str()}, {"value", eval_or_null(e.count)}};
  }
  j["sync"] = std::move(sync);
  json fp = json::object();
  for (const auto& [array, p] : counts.footprints)
    fp[array] = json{{"count", p.str()}, {"value", eval_or_null(p)}};
  j["footprints"] = std::move(fp);
  if (counts.geometry) {
    json g;
    g["work_group_size"] = counts.geometry->work_group_size;
    json groups = json::array();
    for (const auto& p : counts.geometry->num_groups)
      groups.push_back(json{{"count", p.str()}, {"value", eval_or_null(p)}});
    g["num_groups"] = std::move(groups);
    g["sub_group_size"] = sub_group_size;
    j["geometry"] = std::move(g);
  }
  return j;
}

int cmd_count(const std::string& kernel_path, const std::vector<std::string>& binds,
              int sub_group_size, const std::string& out_path, long long seed) {
  Kernel k = load_kernel(kernel_path);
  auto bindings = parse_bindings(binds);
  KernelCounts counts = analyze(k);
  json j = counts_to_json(counts, bindings, sub_group_size);
  j["kernel"] = k.name;
  j["manifest"] =
      make_manifest("count", {{"kernel", file_hash_hex(read_file(kernel_path))}}, seed).to_json();
  std::string text = j.dump(2) + "\n";
  if (out_path.empty())
    std::cout << text;
  else
    write_file(out_path, text);
  return 0;
}

int cmd_generate(const std::vector<std::string>& tag_args, const std::string& tags_file,
                 const std::string& match, const std::string& out_dir, long long seed) {
  std::vector<std::string> tag_list = tag_args;
  std::string tags_hash;
  if (!tags_file.empty()) {
    std::string text = read_file(tags_file);
    tags_hash = file_hash_hex(text);
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      if (!line.empty() && line[0] != '#') tag_list.push_back(line);
    }
  }
  FilterTagSet tags = FilterTagSet::parse(tag_list);
  KernelCollection collection(builtin_generators());
  std::vector<GeneratedKernel> kernels = collection.generate(tags, match_condition_from_str(match));
  if (kernels.empty())
    std::cerr << "warning: no generators matched the tag set\n";

  std::map<std::string, std::string> hashes;
  if (!tags_hash.empty()) hashes["tags"] = tags_hash;
  json manifest;
  manifest["manifest"] = make_manifest("generate", hashes, seed).to_json();
  manifest["tags"] = tag_list;
  manifest["match"] = match;
  json list = json::array();
  for (const auto& g : kernels) {
    std::string file = g.id + ".json";
    write_file((fs::path(out_dir) / file).string(), kernel_to_json(g.kernel).dump(2) + "\n");
    json jk;
    jk["id"] = g.id;
    jk["file"] = file;
    jk["generator"] = g.generator;
    json jargs = json::object();
    for (const auto& [k, v] : g.args) jargs[k] = v;
    jk["args"] = std::move(jargs);
    json jb = json::object();
    for (const auto& [k, v] : g.bindings) jb[k] = v;
    jk["bindings"] = std::move(jb);
    jk["work_group_size"] = g.geometry.work_group_size;
    list.push_back(std::move(jk));
  }
  manifest["kernels"] = std::move(list);
  write_file((fs::path(out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
  std::cout << "generated " << kernels.size() << " kernels into " << out_dir << "\n";
  return 0;
}

int cmd_measure(const std::string& device_path, const std::string& kernels_dir, int trials,
                long long seed, bool seed_set, const std::string& out_path) {
  SyntheticDeviceSpec spec = SyntheticDeviceSpec::from_json_string(read_file(device_path));
  if (seed_set) spec.seed = static_cast<uint64_t>(seed);
  SyntheticDevice device(spec);
  LoadedSet set = load_kernel_dir(kernels_dir);

  std::vector<MeasurementRecord> records;
  std::vector<std::string> failed;
  for (const auto& inst : set.kernels) {
    try {
      MeasurementRecord rec = measure_kernel(device, inst.kernel, inst.bindings, trials);
      rec.kernel_id = inst.id;
      records.push_back(std::move(rec));
    } catch (const Error& e) {
      failed.push_back(inst.id + ": " + e.what());
    }
  }
  RunManifest m = make_manifest(
      "measure", {{"device", file_hash_hex(read_file(device_path))}}, seed_set ? seed : 0);
  std::ostringstream os;
  os << m.comment_line() << "\n";
  os << "# device: " << device.id() << ", trials: " << trials << "\n";
  for (const auto& f : failed) os << "# failed: " << f << "\n";
  os << measurements_to_csv(records);
  write_file(out_path, os.str());
  if (!failed.empty()) {
    for (const auto& f : failed) std::cerr << "failed: " << f << "\n";
    return 2;
  }
  return 0;
}

int cmd_features(const std::string& model_path, const std::string& kernels_dir,
                 int sub_group_size, const std::string& out_path, long long seed) {
  Model model = parse_model_file(read_file(model_path));
  LoadedSet set = load_kernel_dir(kernels_dir);
  FeatureTable table = gather_feature_values(model.features, set.kernels, nullptr, 60,
                                             sub_group_size);
  RunManifest m = make_manifest(
      "features", {{"model", file_hash_hex(read_file(model_path))}}, seed);
  write_file(out_path, m.comment_line() + "\n" + table.to_csv());
  return 0;
}

int cmd_calibrate(const std::string& model_path, const std::string& features_path,
                  const std::string& measurements_path, bool no_scale, bool nonnegative,
                  const std::string& out_path, long long seed) {
  Model model = parse_model_file(read_file(model_path));
  FeatureTable table = FeatureTable::from_csv(read_file(features_path));
  auto meas = measurements_from_csv(read_file(measurements_path));

  // Feature columns must cover the model's features.
  std::vector<size_t> column_of;
  for (const auto& id : model.feature_ids) {
    auto it = std::find(table.columns.begin(), table.columns.end(), id);
    if (it == table.columns.end())
      throw Error("feature table lacks column " + id);
    column_of.push_back(static_cast<size_t>(it - table.columns.begin()));
  }

  CalibrationProblem problem;
  for (const auto& rec : meas) {
    const std::vector<double>* row = nullptr;
    for (size_t i = 0; i < table.row_ids.size(); ++i)
      if (table.row_ids[i] == rec.kernel_id) row = &table.values[i];
    if (!row) continue;  // measurement without features
    CalibrationRow r;
    for (size_t c : column_of) r.features.push_back((*row)[c]);
    r.output = rec.mean_seconds;
    problem.rows.push_back(std::move(r));
  }
  if (problem.rows.empty()) throw Error("no measurement rows matched the feature table");

  CalibrationProblem fitted_problem = no_scale ? problem : scale_features_by_output(problem);
  FitOptions options;
  options.nonnegative = nonnegative;
  CalibratedModel cm = fit_model(model, fitted_problem, options);
  if (!no_scale) {
    double acc = 0.0;
    auto pv = cm.param_vector();
    for (const auto& row : problem.rows) {
      double r = row.output - eval_model(model, pv, row.features);
      acc += r * r;
    }
    cm.residual_norm_unscaled = std::sqrt(acc);
  }
  cm.measurement_hash = file_hash_hex(read_file(measurements_path));

  json j = json::parse(cm.to_json_string());
  j["manifest"] = make_manifest("calibrate",
                                {{"model", file_hash_hex(read_file(model_path))},
                                 {"features", file_hash_hex(read_file(features_path))},
                                 {"measurements", cm.measurement_hash}},
                                seed)
                      .to_json();
  write_file(out_path, j.dump(2) + "\n");
  for (const auto& w : cm.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "residual_norm " << fmt_double(cm.residual_norm) << ", iterations "
            << cm.iterations << (cm.converged ? ", converged" : ", not converged") << "\n";
  return 0;
}

int cmd_predict(const std::string& calibrated_path, const std::string& kernel_path,
                const std::vector<std::string>& binds, const std::string& kernels_dir,
                int sub_group_size, const std::string& out_path, long long seed) {
  CalibratedModel cm = CalibratedModel::from_json_string(read_file(calibrated_path));
  if (!kernel_path.empty()) {
    Kernel k = load_kernel(kernel_path);
    double t = predict(cm, k, parse_bindings(binds), sub_group_size);
    std::cout << fmt_double(t) << "\n";
    return 0;
  }
  if (kernels_dir.empty()) throw Error("predict needs --kernel or --kernels");
  LoadedSet set = load_kernel_dir(kernels_dir);
  RunManifest m = make_manifest(
      "predict", {{"model", file_hash_hex(read_file(calibrated_path))}}, seed);
  std::ostringstream os;
  os << m.comment_line() << "\n";
  os << "kernel,bindings,predicted_seconds\n";
  os.precision(17);
  for (const auto& inst : set.kernels) {
    double t = predict(cm, inst.kernel, inst.bindings, sub_group_size);
    os << inst.id << "," << bindings_str(inst.bindings) << "," << t << "\n";
  }
  write_file(out_path.empty() ? "predictions.csv" : out_path, os.str());
  return 0;
}

struct PredRow {
  std::string id;
  double value;
};

std::vector<PredRow> predictions_from_csv(const std::string& text) {
  std::vector<PredRow> out;
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
    if (cells.size() < 3) throw Error("malformed prediction CSV line: " + line);
    out.push_back(PredRow{cells[0], std::stod(cells[2])});
  }
  return out;
}

int cmd_report(const std::string& measured_path, const std::string& predicted_path,
               const std::string& manifest_path, const std::string& out_dir, double full_time,
               double removed_time, double onchip_est, bool have_overlap, long long seed) {
  auto meas = measurements_from_csv(read_file(measured_path));
  auto pred = predictions_from_csv(read_file(predicted_path));
  json gen_manifest = json::parse(read_file(manifest_path));

  std::map<std::string, double> pred_of;
  for (const auto& p : pred) pred_of[p.id] = p.value;

  // Variant identity: generator plus all arguments except the size ladder
  // (n, nelements, m, num_groups), which becomes the x value.
  const std::set<std::string> size_args{"n", "nelements", "m", "num_groups"};
  struct Row {
    std::string variant;
    std::string size;
    double measured;
    double predicted;
  };
  std::vector<Row> rows;
  std::map<std::string, std::pair<std::string, std::string>> meta;  // id -> (variant, size)
  for (const auto& jk : gen_manifest.at("kernels")) {
    std::string id = jk.at("id").get<std::string>();
    std::string variant = jk.value("generator", "?");
    std::string size;
    for (const auto& [k, v] : jk.at("args").items()) {
      std::string vs = v.get<std::string>();
      if (size_args.count(k))
        size += (size.empty() ? "" : ";") + k + "=" + vs;
      else
        variant += "_" + k + "-" + vs;
    }
    meta[id] = {variant, size.empty() ? "-" : size};
  }
  for (const auto& rec : meas) {
    auto mit = meta.find(rec.kernel_id);
    auto pit = pred_of.find(rec.kernel_id);
    if (pit == pred_of.end())
      throw Error("prediction missing for kernel " + rec.kernel_id);
    std::string variant = mit != meta.end() ? mit->second.first : rec.kernel_id;
    std::string size = mit != meta.end() ? mit->second.second : bindings_str(rec.bindings);
    rows.push_back(Row{variant, size, rec.mean_seconds, pit->second});
  }

  RunManifest m = make_manifest("report",
                                {{"measured", file_hash_hex(read_file(measured_path))},
                                 {"predicted", file_hash_hex(read_file(predicted_path))}},
                                seed);

  std::ostringstream series;
  series.precision(17);
  series << m.comment_line() << "\n";
  series << "variant,size,measured_seconds,predicted_seconds\n";
  for (const auto& r : rows)
    series << r.variant << "," << r.size << "," << r.measured << "," << r.predicted << "\n";
  write_file((fs::path(out_dir) / "series.csv").string(), series.str());

  // Geometric-mean relative error per variant and overall.
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_variant;
  std::vector<double> all_pred, all_meas;
  for (const auto& r : rows) {
    by_variant[r.variant].first.push_back(r.predicted);
    by_variant[r.variant].second.push_back(r.measured);
    all_pred.push_back(r.predicted);
    all_meas.push_back(r.measured);
  }
  std::ostringstream summary;
  summary.precision(17);
  summary << m.comment_line() << "\n";
  summary << "variant,geo_mean_rel_error\n";
  for (const auto& [variant, pm] : by_variant)
    summary << variant << "," << geo_mean_rel_error(pm.first, pm.second) << "\n";
  summary << "overall," << geo_mean_rel_error(all_pred, all_meas) << "\n";
  if (have_overlap) {
    CombineKind kind = classify_overlap(full_time, removed_time, onchip_est);
    summary << "overlap_diagnosis,"
            << (kind == CombineKind::linear ? "linear" : "max_overlap") << "\n";
  }
  write_file((fs::path(out_dir) / "summary.csv").string(), summary.str());

  // Ranking by size across variants.
  std::map<std::string, std::vector<Row>> by_size;
  for (const auto& r : rows) by_size[r.size].push_back(r);
  std::ostringstream ranking;
  ranking << m.comment_line() << "\n";
  ranking << "size,measured_winner,predicted_winner,correct\n";
  for (const auto& [size, group] : by_size) {
    if (group.size() < 2) continue;
    const Row* mbest = &group[0];
    const Row* pbest = &group[0];
    for (const auto& r : group) {
      if (r.measured < mbest->measured) mbest = &r;
      if (r.predicted < pbest->predicted) pbest = &r;
    }
    ranking << size << "," << mbest->variant << "," << pbest->variant << ","
            << (mbest->variant == pbest->variant ? "yes" : "no") << "\n";
  }
  write_file((fs::path(out_dir) / "ranking.csv").string(), ranking.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"perfseer: symbolic kernel counting, microbenchmark calibration, and "
               "execution-time prediction"};
  app.require_subcommand(1);
  long long seed = 0;
  bool seed_set = false;
  int sub_group_size = 32;
  app.add_flag_function("--version", [](int64_t) {
    std::cout << "perfseer " << kToolVersion << "\n";
    std::exit(0);
  });
  app.add_option("--seed", seed, "random seed for measurement noise")->each([&](const std::string&) {
    seed_set = true;
  });
  app.add_option("--sub-group-size", sub_group_size, "sub-group width for count granularity")
      ->capture_default_str();

  // count
  auto* count = app.add_subcommand("count", "symbolic operation/access/sync counts");
  std::string count_kernel, count_out;
  std::vector<std::string> count_binds;
  count->add_option("--kernel", count_kernel, "kernel file (.json or text)")->required();
  count->add_option("--bind", count_binds, "parameter binding name=value");
  count->add_option("--out", count_out, "output JSON path (default stdout)");

  // generate
  auto* generate = app.add_subcommand("generate", "expand measurement kernels from filter tags");
  std::vector<std::string> gen_tags;
  std::string gen_tags_file, gen_match = "superset", gen_out;
  generate->add_option("--tag", gen_tags, "filter tag (repeatable)");
  generate->add_option("--tags", gen_tags_file, "file with one filter tag per line");
  generate->add_option("--match", gen_match, "identical|subset|superset|intersect")
      ->capture_default_str();
  generate->add_option("--out", gen_out, "output directory")->required();

  // measure
  auto* measure = app.add_subcommand("measure", "run kernels on an executor");
  std::string meas_device, meas_kernels, meas_out;
  int meas_trials = 60;
  measure->add_option("--device", meas_device, "synthetic device spec JSON")->required();
  measure->add_option("--kernels", meas_kernels, "kernel directory from generate")->required();
  measure->add_option("--trials", meas_trials, "trials per kernel")->capture_default_str();
  measure->add_option("--out", meas_out, "measurement CSV path")->required();

  // features
  auto* features = app.add_subcommand("features", "evaluate model input features");
  std::string feat_model, feat_kernels, feat_out;
  features->add_option("--model", feat_model, "model file")->required();
  features->add_option("--kernels", feat_kernels, "kernel directory")->required();
  features->add_option("--out", feat_out, "feature CSV path")->required();

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "fit model parameters");
  std::string cal_model, cal_features, cal_meas, cal_out;
  bool cal_no_scale = false, cal_nonneg = false;
  calibrate->add_option("--model", cal_model, "model file")->required();
  calibrate->add_option("--features", cal_features, "feature CSV")->required();
  calibrate->add_option("--measurements", cal_meas, "measurement CSV")->required();
  calibrate->add_flag("--no-scale", cal_no_scale, "skip scale_features_by_output");
  calibrate->add_flag("--nonnegative", cal_nonneg, "clamp cost parameters at zero");
  calibrate->add_option("--out", cal_out, "calibrated model JSON path")->required();

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "predict execution time");
  std::string pred_model, pred_kernel, pred_kernels, pred_out;
  std::vector<std::string> pred_binds;
  predict_cmd->add_option("--model", pred_model, "calibrated model JSON")->required();
  predict_cmd->add_option("--kernel", pred_kernel, "single kernel file");
  predict_cmd->add_option("--bind", pred_binds, "parameter binding name=value");
  predict_cmd->add_option("--kernels", pred_kernels, "kernel directory (batch mode)");
  predict_cmd->add_option("--out", pred_out, "prediction CSV path (batch mode)");

  // report
  auto* report = app.add_subcommand("report", "measured-vs-predicted tables and rankings");
  std::string rep_meas, rep_pred, rep_manifest, rep_out;
  double rep_full = 0, rep_removed = 0, rep_onchip = 0;
  report->add_option("--measured", rep_meas, "measurement CSV")->required();
  report->add_option("--predicted", rep_pred, "prediction CSV")->required();
  report->add_option("--manifest", rep_manifest, "generate manifest.json")->required();
  report->add_option("--out", rep_out, "output directory")->required();
  auto* opt_full = report->add_option("--full-time", rep_full, "measured full-kernel time");
  report->add_option("--removed-time", rep_removed, "measured work-removed time");
  report->add_option("--onchip-est", rep_onchip, "estimated on-chip cost");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*count) return cmd_count(count_kernel, count_binds, sub_group_size, count_out, seed);
    if (*generate) return cmd_generate(gen_tags, gen_tags_file, gen_match, gen_out, seed);
    if (*measure) return cmd_measure(meas_device, meas_kernels, meas_trials, seed, seed_set,
                                     meas_out);
    if (*features) return cmd_features(feat_model, feat_kernels, sub_group_size, feat_out, seed);
    if (*calibrate) return cmd_calibrate(cal_model, cal_features, cal_meas, cal_no_scale,
                                         cal_nonneg, cal_out, seed);
    if (*predict_cmd)
      return cmd_predict(pred_model, pred_kernel, pred_binds, pred_kernels, sub_group_size,
                         pred_out, seed);
    if (*report)
      return cmd_report(rep_meas, rep_pred, rep_manifest, rep_out, rep_full, rep_removed,
                        rep_onchip, opt_full->count() > 0, seed);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
