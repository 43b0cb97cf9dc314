#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "robex/attribution.hpp"
#include "robex/criteria.hpp"
#include "robex/datasets.hpp"
#include "robex/greedy.hpp"
#include "robex/io.hpp"
#include "robex/train.hpp"

#ifndef ROBEX_DATA_DIR
#define ROBEX_DATA_DIR "data"
#endif

namespace robex {

inline const char* version_string() { return "0.1.0"; }

// Resolved run configuration: a JSON config file with CLI flag overrides on
// top (flags win). Everything needed to reproduce a run is in here.
struct RunConfig {
  std::string dataset_path;
  std::string model_path;
  std::string output_root = "runs";
  std::uint64_t seed = 7;
  int jobs = 1;
  int num_examples = 20;
  double test_fraction = 0.25;
  std::vector<std::string> methods = {"grad", "random"};
  std::vector<std::string> criteria = {"robustness_sbar", "robustness_s"};
  std::vector<double> fractions = default_fractions();
  std::optional<int> target_class;

  AttackConfig attack;         // curve evaluation budget
  AttackConfig greedy_attack;  // objective budget inside greedy selection

  // Explainer parameters.
  double baseline_scalar = 0.0;
  std::optional<std::string> baseline_path;  // per-feature baseline file
  int ig_steps = 300;
  int eg_samples = 200;
  double target_fraction = 0.45;
  double step_fraction = 0.05;
  int subset_samples = 5000;
  double inclusion_prob = 0.5;

  // Insertion/Deletion reference. kind: "scalar" | "per_feature" | "uniform".
  std::string reference_kind = "scalar";
  double reference_value = 0.0;
  std::string reference_path;
  double reference_lo = 0.0;
  double reference_hi = 1.0;

  // Training.
  std::vector<int> hidden_layers = {32};
  double learning_rate = 0.5;
  int epochs = 80;
  int batch_size = 32;
  double l2_penalty = 1e-4;

  // Data generation.
  std::string gen_kind = "blobs";
  int gen_n = 200;
  std::string digits_source = std::string(ROBEX_DATA_DIR) + "/digits8x8.csv";
};

namespace detail {

inline nlohmann::json attack_to_json(const AttackConfig& a) {
  nlohmann::json j;
  j["steps"] = a.num_steps;
  j["step_size"] = a.step_size;
  j["binsearch_iters"] = a.binsearch_iters;
  j["eps_cap"] = a.eps_cap;
  if (a.clip_box) {
    j["clip"] = {a.clip_box->first, a.clip_box->second};
  } else {
    j["clip"] = nullptr;
  }
  j["per_target_search"] = a.per_target_search;
  return j;
}

inline void attack_from_json(const nlohmann::json& j, AttackConfig& a) {
  if (j.contains("steps")) a.num_steps = j.at("steps").get<int>();
  if (j.contains("step_size")) a.step_size = j.at("step_size").get<double>();
  if (j.contains("binsearch_iters")) a.binsearch_iters = j.at("binsearch_iters").get<int>();
  if (j.contains("eps_cap")) a.eps_cap = j.at("eps_cap").get<double>();
  if (j.contains("clip") && !j.at("clip").is_null()) {
    auto c = j.at("clip").get<std::vector<double>>();
    if (c.size() != 2) throw ConfigError("attack.clip must be [lo, hi]");
    a.clip_box = std::make_pair(c[0], c[1]);
  }
  if (j.contains("per_target_search")) a.per_target_search = j.at("per_target_search").get<bool>();
}

}  // namespace detail

inline nlohmann::json run_config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["dataset"] = c.dataset_path;
  j["model"] = c.model_path;
  j["out"] = c.output_root;
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  j["num_examples"] = c.num_examples;
  j["test_fraction"] = c.test_fraction;
  j["methods"] = c.methods;
  j["criteria"] = c.criteria;
  j["fractions"] = c.fractions;
  j["target_class"] = c.target_class ? nlohmann::json(*c.target_class) : nlohmann::json(nullptr);
  j["attack"] = detail::attack_to_json(c.attack);
  j["greedy_attack"] = detail::attack_to_json(c.greedy_attack);
  j["explain"] = {{"baseline", c.baseline_scalar},
                  {"baseline_path", c.baseline_path ? nlohmann::json(*c.baseline_path)
                                                    : nlohmann::json(nullptr)},
                  {"ig_steps", c.ig_steps},
                  {"eg_samples", c.eg_samples},
                  {"target_fraction", c.target_fraction},
                  {"step_fraction", c.step_fraction},
                  {"subset_samples", c.subset_samples},
                  {"inclusion_prob", c.inclusion_prob}};
  j["reference"] = {{"kind", c.reference_kind},
                    {"value", c.reference_value},
                    {"path", c.reference_path},
                    {"lo", c.reference_lo},
                    {"hi", c.reference_hi}};
  j["train"] = {{"hidden", c.hidden_layers},
                {"learning_rate", c.learning_rate},
                {"epochs", c.epochs},
                {"batch_size", c.batch_size},
                {"l2_penalty", c.l2_penalty}};
  j["gen"] = {{"kind", c.gen_kind}, {"n", c.gen_n}, {"digits_source", c.digits_source}};
  return j;
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    if (j.contains("dataset")) c.dataset_path = j.at("dataset").get<std::string>();
    if (j.contains("model")) c.model_path = j.at("model").get<std::string>();
    if (j.contains("out")) c.output_root = j.at("out").get<std::string>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("jobs")) c.jobs = j.at("jobs").get<int>();
    if (j.contains("num_examples")) c.num_examples = j.at("num_examples").get<int>();
    if (j.contains("test_fraction")) c.test_fraction = j.at("test_fraction").get<double>();
    if (j.contains("methods")) c.methods = j.at("methods").get<std::vector<std::string>>();
    if (j.contains("criteria")) c.criteria = j.at("criteria").get<std::vector<std::string>>();
    if (j.contains("fractions")) c.fractions = j.at("fractions").get<std::vector<double>>();
    if (j.contains("target_class") && !j.at("target_class").is_null()) {
      c.target_class = j.at("target_class").get<int>();
    }
    if (j.contains("attack")) detail::attack_from_json(j.at("attack"), c.attack);
    c.greedy_attack = c.attack;
    if (j.contains("greedy_attack")) detail::attack_from_json(j.at("greedy_attack"), c.greedy_attack);
    if (j.contains("explain")) {
      const auto& e = j.at("explain");
      if (e.contains("baseline")) c.baseline_scalar = e.at("baseline").get<double>();
      if (e.contains("baseline_path") && !e.at("baseline_path").is_null()) {
        c.baseline_path = e.at("baseline_path").get<std::string>();
      }
      if (e.contains("ig_steps")) c.ig_steps = e.at("ig_steps").get<int>();
      if (e.contains("eg_samples")) c.eg_samples = e.at("eg_samples").get<int>();
      if (e.contains("target_fraction")) c.target_fraction = e.at("target_fraction").get<double>();
      if (e.contains("step_fraction")) c.step_fraction = e.at("step_fraction").get<double>();
      if (e.contains("subset_samples")) c.subset_samples = e.at("subset_samples").get<int>();
      if (e.contains("inclusion_prob")) c.inclusion_prob = e.at("inclusion_prob").get<double>();
    }
    if (j.contains("reference")) {
      const auto& r = j.at("reference");
      if (r.contains("kind")) c.reference_kind = r.at("kind").get<std::string>();
      if (r.contains("value")) c.reference_value = r.at("value").get<double>();
      if (r.contains("path")) c.reference_path = r.at("path").get<std::string>();
      if (r.contains("lo")) c.reference_lo = r.at("lo").get<double>();
      if (r.contains("hi")) c.reference_hi = r.at("hi").get<double>();
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      if (t.contains("hidden")) c.hidden_layers = t.at("hidden").get<std::vector<int>>();
      if (t.contains("learning_rate")) c.learning_rate = t.at("learning_rate").get<double>();
      if (t.contains("epochs")) c.epochs = t.at("epochs").get<int>();
      if (t.contains("batch_size")) c.batch_size = t.at("batch_size").get<int>();
      if (t.contains("l2_penalty")) c.l2_penalty = t.at("l2_penalty").get<double>();
    }
    if (j.contains("gen")) {
      const auto& g = j.at("gen");
      if (g.contains("kind")) c.gen_kind = g.at("kind").get<std::string>();
      if (g.contains("n")) c.gen_n = g.at("n").get<int>();
      if (g.contains("digits_source")) c.digits_source = g.at("digits_source").get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config schema error: ") + e.what());
  }
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

// Stable 64-bit id of the run: hash of the resolved config without the fields
// that must not change results (worker count, output root).
inline std::string run_config_hash(const RunConfig& c) {
  nlohmann::json j = run_config_to_json(c);
  j.erase("jobs");
  j.erase("out");
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

namespace detail {

inline Vector load_vector_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vector file '" + path + "'");
  Vector v;
  std::string tok;
  while (in >> tok) {
    std::stringstream ss(tok);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (!cell.empty()) v.push_back(parse_double(cell, path.c_str()));
    }
  }
  if (v.empty()) throw IoError("vector file '" + path + "' is empty");
  return v;
}

inline void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open '" + tmp + "' for writing");
    out << content;
    if (!out) throw IoError("write failed for '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline ReferenceSpec resolve_reference(const RunConfig& c, int d) {
  if (c.reference_kind == "scalar") return ReferenceSpec::scalar(c.reference_value);
  if (c.reference_kind == "per_feature") {
    Vector v = load_vector_file(c.reference_path);
    if (static_cast<int>(v.size()) != d) {
      throw ConfigError("reference file has " + std::to_string(v.size()) +
                        " values, model expects " + std::to_string(d));
    }
    return ReferenceSpec::per_feature(std::move(v));
  }
  if (c.reference_kind == "uniform") {
    return ReferenceSpec::uniform_random(c.reference_lo, c.reference_hi, c.seed);
  }
  throw ConfigError("unknown reference kind '" + c.reference_kind + "'");
}

inline Vector resolve_baseline(const RunConfig& c, int d) {
  if (c.baseline_path) {
    Vector v = load_vector_file(*c.baseline_path);
    if (static_cast<int>(v.size()) != d) {
      throw ConfigError("baseline file has " + std::to_string(v.size()) +
                        " values, model expects " + std::to_string(d));
    }
    return v;
  }
  return Vector(static_cast<std::size_t>(d), c.baseline_scalar);
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline bool is_greedy_method(const std::string& name) {
  return name == "greedy" || name == "greedy-as";
}

}  // namespace detail

inline void cmd_gen_data(const RunConfig& c, const std::string& kind, int n, std::uint64_t seed,
                         const std::string& out_path) {
  if (n < 10) throw ConfigError("gen-data: n must be >= 10");
  std::vector<Example> data;
  if (kind == "blobs") {
    data = make_blobs(n, seed);
  } else if (kind == "digits8x8") {
    data = digits_subset(c.digits_source, n, seed);
  } else {
    throw ConfigError("gen-data: unknown kind '" + kind + "' (blobs | digits8x8)");
  }
  save_dataset(data, out_path);
}

struct TrainSummary {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  int num_train = 0;
  int num_test = 0;
};

inline TrainSummary cmd_train(const RunConfig& c) {
  if (c.dataset_path.empty()) throw ConfigError("train: dataset path is required");
  if (c.model_path.empty()) throw ConfigError("train: model output path is required");
  const std::vector<Example> data = load_dataset(c.dataset_path);
  const DatasetSplit split = split_dataset(data, c.test_fraction, c.seed);
  if (split.train.empty()) throw ConfigError("train: empty training split");

  int num_classes = 0;
  for (const Example& e : data) num_classes = std::max(num_classes, e.label + 1);
  std::vector<int> arch;
  arch.push_back(static_cast<int>(data.front().x.size()));
  for (int h : c.hidden_layers) arch.push_back(h);
  arch.push_back(num_classes);

  TrainConfig tc;
  tc.learning_rate = c.learning_rate;
  tc.epochs = c.epochs;
  tc.batch_size = c.batch_size;
  tc.seed = c.seed;
  tc.l2_penalty = c.l2_penalty;
  TrainResult r = train_sgd(split.train, arch, tc);

  if (auto parent = std::filesystem::path(c.model_path).parent_path(); !parent.empty()) {
    std::filesystem::create_directories(parent);
  }
  save_model(r.model, c.model_path);

  TrainSummary s;
  s.train_accuracy = r.final_train_accuracy;
  s.test_accuracy = split.test.empty() ? 0.0 : accuracy(r.model, split.test);
  s.num_train = static_cast<int>(split.train.size());
  s.num_test = static_cast<int>(split.test.size());
  return s;
}

namespace detail {

// Attributions for one method over the selected examples, keyed per criterion:
// the greedy explainers optimize the objective matching the criterion being
// scored, everything else is criterion-independent.
struct MethodAttributions {
  // One entry per requested criterion name.
  std::map<std::string, std::vector<Attribution>> per_criterion;
};

inline SetObjective objective_for_criterion(Criterion crit) {
  return crit == Criterion::kRobustnessSet ? SetObjective::kMinSetRobustness
                                           : SetObjective::kMaxComplementRobustness;
}

inline std::vector<Attribution> compute_plain_attributions(
    const Model& model, const std::vector<Example>& selected, const std::string& method,
    const RunConfig& c, const std::vector<Vector>& background) {
  const int d = model.input_dim;
  std::vector<Attribution> out(selected.size());
  const Vector baseline = resolve_baseline(c, d);
  parallel_for(selected.size(), c.jobs, [&](std::size_t i) {
    const Vector& x = selected[i].x;
    if (method == "grad") {
      out[i] = grad_attr(model, x);
    } else if (method == "ig") {
      out[i] = ig_attr(model, x, baseline, c.ig_steps);
    } else if (method == "eg") {
      Rng stream = Rng::for_stream(c.seed, i);
      out[i] = eg_attr(model, x, background, c.eg_samples, stream.next_u64());
    } else if (method == "loo") {
      out[i] = loo_attr(model, x, baseline);
    } else if (method == "random") {
      Rng stream = Rng::for_stream(c.seed, i);
      out[i] = random_attr(d, stream.next_u64());
    } else {
      throw ConfigError("unknown method '" + method + "'");
    }
  });
  return out;
}

inline std::vector<Attribution> compute_greedy_attributions(const Model& model,
                                                            const std::vector<Example>& selected,
                                                            const std::string& method,
                                                            SetObjective objective,
                                                            const RunConfig& c) {
  std::vector<Attribution> out(selected.size());
  parallel_for(selected.size(), c.jobs, [&](std::size_t i) {
    GreedyConfig gc;
    gc.objective = objective;
    gc.target_fraction = c.target_fraction;
    gc.step_fraction = c.step_fraction;
    gc.num_subset_samples = c.subset_samples;
    gc.subset_inclusion_prob = c.inclusion_prob;
    Rng stream = Rng::for_stream(c.seed, i);
    gc.seed = stream.next_u64();
    gc.goal = c.target_class ? AttackGoal::targeted(*c.target_class)
                             : AttackGoal::untargeted(selected[i].label);
    GreedySelection sel = method == "greedy" ? greedy_select(model, selected[i].x, gc, c.greedy_attack)
                                             : greedy_as_select(model, selected[i].x, gc, c.greedy_attack);
    out[i] = std::move(sel.attribution);
  });
  return out;
}

}  // namespace detail

struct EvaluateResult {
  std::string run_dir;
  // curves[method][criterion_name]
  std::map<std::string, std::map<std::string, EvalCurve>> curves;
  int selected_examples = 0;
  int skipped_misclassified = 0;
};

inline EvaluateResult cmd_evaluate(const RunConfig& c) {
  const auto t_start = std::chrono::steady_clock::now();
  if (c.dataset_path.empty()) throw ConfigError("evaluate: dataset path is required");
  if (c.model_path.empty()) throw ConfigError("evaluate: model path is required");
  if (c.num_examples < 1) throw ConfigError("evaluate: num_examples must be >= 1");
  if (c.methods.empty()) throw ConfigError("evaluate: no methods requested");
  if (c.criteria.empty()) throw ConfigError("evaluate: no criteria requested");
  for (const std::string& name : c.criteria) {
    if (!criterion_from_name(name)) throw ConfigError("unknown criterion '" + name + "'");
  }
  static const std::vector<std::string> known_methods = {"grad", "ig",     "eg",    "loo",
                                                         "random", "greedy", "greedy-as"};
  for (const std::string& m : c.methods) {
    if (std::find(known_methods.begin(), known_methods.end(), m) == known_methods.end()) {
      throw ConfigError("unknown method '" + m + "'");
    }
  }

  const Model model = load_model(c.model_path);
  const std::vector<Example> data = load_dataset(c.dataset_path);
  if (static_cast<int>(data.front().x.size()) != model.input_dim) {
    throw ConfigError("dataset dimension does not match the model");
  }
  const DatasetSplit split = split_dataset(data, c.test_fraction, c.seed);

  // First num_examples evaluable test examples.
  std::vector<Example> selected;
  int skipped = 0;
  for (const Example& e : split.test) {
    if (static_cast<int>(selected.size()) >= c.num_examples) break;
    const int pred = predict(model, e.x);
    const bool usable = pred == e.label && !(c.target_class && pred == *c.target_class);
    if (usable) {
      selected.push_back(e);
    } else {
      ++skipped;
    }
  }
  if (selected.empty()) throw NumericError("evaluate: no evaluable test examples");
  const double t_load = detail::seconds_since(t_start);

  std::vector<Vector> background;
  for (const Example& e : split.train) background.push_back(e.x);

  const auto t_attr_start = std::chrono::steady_clock::now();
  std::map<std::string, detail::MethodAttributions> attributions;
  for (const std::string& method : c.methods) {
    detail::MethodAttributions ma;
    if (detail::is_greedy_method(method)) {
      std::map<int, std::vector<Attribution>> by_objective;
      for (const std::string& crit_name : c.criteria) {
        const Criterion crit = *criterion_from_name(crit_name);
        const SetObjective obj = detail::objective_for_criterion(crit);
        auto it = by_objective.find(static_cast<int>(obj));
        if (it == by_objective.end()) {
          it = by_objective
                   .emplace(static_cast<int>(obj),
                            detail::compute_greedy_attributions(model, selected, method, obj, c))
                   .first;
        }
        ma.per_criterion[crit_name] = it->second;
      }
    } else {
      std::vector<Attribution> attrs =
          detail::compute_plain_attributions(model, selected, method, c, background);
      for (const std::string& crit_name : c.criteria) ma.per_criterion[crit_name] = attrs;
    }
    attributions[method] = std::move(ma);
  }
  const double t_attr = detail::seconds_since(t_attr_start);

  const auto t_curves_start = std::chrono::steady_clock::now();
  CriteriaConfig crit_cfg;
  crit_cfg.fractions = c.fractions;
  crit_cfg.targeted_class = c.target_class;
  crit_cfg.attack = c.attack;
  crit_cfg.jobs = c.jobs;
  const ReferenceSpec reference = detail::resolve_reference(c, model.input_dim);

  EvaluateResult result;
  int capped_total = 0;
  for (const std::string& method : c.methods) {
    for (const std::string& crit_name : c.criteria) {
      const Criterion crit = *criterion_from_name(crit_name);
      const std::vector<Attribution>& attrs = attributions[method].per_criterion[crit_name];
      EvalCurve curve;
      if (crit == Criterion::kRobustnessComplement || crit == Criterion::kRobustnessSet) {
        curve = robustness_curve(model, selected, attrs, crit, crit_cfg);
      } else {
        curve = insertion_deletion_curve(model, selected, attrs, crit, reference, c.fractions,
                                         c.jobs);
      }
      for (int n : curve.capped_per_point) capped_total += n;
      result.curves[method][crit_name] = std::move(curve);
    }
  }
  const double t_curves = detail::seconds_since(t_curves_start);

  // Artifacts: curves.csv + report.json + manifest.json under a directory
  // named by the config hash, so identical configs land in identical paths.
  const std::string run_dir =
      (std::filesystem::path(c.output_root) / run_config_hash(c)).string();
  std::filesystem::create_directories(run_dir);

  std::ostringstream csv;
  csv << "method,criterion,fraction,mean_value,n_examples,n_capped\n";
  for (const std::string& method : c.methods) {
    for (const std::string& crit_name : c.criteria) {
      const EvalCurve& curve = result.curves[method][crit_name];
      for (std::size_t i = 0; i < curve.points.size(); ++i) {
        csv << method << ',' << crit_name << ',' << format_double(curve.points[i].first) << ','
            << format_double(curve.points[i].second) << ',' << curve.n_examples << ','
            << curve.capped_per_point[i] << "\n";
      }
    }
  }
  detail::write_text_atomic(run_dir + "/curves.csv", csv.str());

  nlohmann::json report;
  for (const std::string& method : c.methods) {
    nlohmann::json entry;
    for (const std::string& crit_name : c.criteria) {
      entry[crit_name + "_auc"] = result.curves[method][crit_name].auc_value;
    }
    report["methods"][method] = entry;
  }
  report["config"] = run_config_to_json(c);
  detail::write_text_atomic(run_dir + "/report.json", report.dump(2) + "\n");

  result.selected_examples = static_cast<int>(selected.size());
  result.skipped_misclassified = skipped;

  nlohmann::json manifest;
  manifest["version"] = version_string();
  manifest["config"] = run_config_to_json(c);
  manifest["stages_seconds"] = {{"load", t_load}, {"attributions", t_attr}, {"curves", t_curves}};
  manifest["diagnostics"] = {{"selected_examples", result.selected_examples},
                             {"skipped_examples", skipped},
                             {"capped_attacks", capped_total}};
  manifest["total_seconds"] = detail::seconds_since(t_start);
  detail::write_text_atomic(run_dir + "/manifest.json", manifest.dump(2) + "\n");

  result.run_dir = run_dir;
  return result;
}

// Attribution CSV for one test example; targeted goals flow into the greedy
// objectives.
inline std::string cmd_explain(const RunConfig& c, int example_index, const std::string& method) {
  if (c.dataset_path.empty()) throw ConfigError("explain: dataset path is required");
  if (c.model_path.empty()) throw ConfigError("explain: model path is required");
  const Model model = load_model(c.model_path);
  const std::vector<Example> data = load_dataset(c.dataset_path);
  const DatasetSplit split = split_dataset(data, c.test_fraction, c.seed);
  if (example_index < 0 || example_index >= static_cast<int>(split.test.size())) {
    throw ConfigError("explain: example index " + std::to_string(example_index) +
                      " out of range (test split has " + std::to_string(split.test.size()) +
                      " examples)");
  }
  const Example& e = split.test[example_index];
  const int pred = predict(model, e.x);
  if (c.target_class && *c.target_class == pred) {
    throw ConfigError("explain: target class equals the predicted class " + std::to_string(pred));
  }

  Attribution attr;
  if (detail::is_greedy_method(method)) {
    GreedyConfig gc;
    gc.objective = SetObjective::kMaxComplementRobustness;
    gc.target_fraction = c.target_fraction;
    gc.step_fraction = c.step_fraction;
    gc.num_subset_samples = c.subset_samples;
    gc.subset_inclusion_prob = c.inclusion_prob;
    Rng stream = Rng::for_stream(c.seed, static_cast<std::uint64_t>(example_index));
    gc.seed = stream.next_u64();
    gc.goal = c.target_class ? AttackGoal::targeted(*c.target_class)
                             : AttackGoal::untargeted(pred);
    GreedySelection sel = method == "greedy" ? greedy_select(model, e.x, gc, c.greedy_attack)
                                             : greedy_as_select(model, e.x, gc, c.greedy_attack);
    attr = std::move(sel.attribution);
  } else {
    std::vector<Vector> background;
    for (const Example& ex : split.train) background.push_back(ex.x);
    std::vector<Example> one = {e};
    attr = detail::compute_plain_attributions(model, one, method, c, background)[0];
  }

  const std::string run_dir =
      (std::filesystem::path(c.output_root) / run_config_hash(c)).string();
  std::filesystem::create_directories(run_dir);
  std::string name = "attribution_" + method + "_ex" + std::to_string(example_index);
  if (c.target_class) name += "_t" + std::to_string(*c.target_class);
  const std::string path = run_dir + "/" + name + ".csv";

  std::vector<int> rank_of(attr.scores.size());
  for (std::size_t r = 0; r < attr.ranking.size(); ++r) rank_of[attr.ranking[r]] = static_cast<int>(r);
  std::ostringstream csv;
  csv << "example_id,feature_index,score,rank\n";
  for (std::size_t i = 0; i < attr.scores.size(); ++i) {
    csv << example_index << ',' << i << ',' << format_double(attr.scores[i]) << ',' << rank_of[i]
        << "\n";
  }
  detail::write_text_atomic(path, csv.str());
  return path;
}

}  // namespace robex
