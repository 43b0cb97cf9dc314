// Command line front end: gen-data | train | evaluate | explain.
// Exit codes: 0 success, 2 config error, 3 data/model IO error, 4 numeric failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "robex/robex.hpp"

namespace {

struct FlagOverrides {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out;
  std::optional<std::string> dataset;
  std::optional<std::string> model;
  std::optional<int> num_examples;
  std::optional<double> test_fraction;
  std::vector<std::string> methods;
  std::vector<std::string> criteria;
  std::optional<int> target;
  // attack
  std::optional<int> steps;
  std::optional<double> step_size;
  std::optional<int> binsearch_iters;
  std::optional<double> eps_cap;
  std::vector<double> clip;
  // explainers
  std::optional<std::string> method;
  std::optional<std::string> baseline;
  std::optional<int> ig_steps;
  std::optional<int> samples;
  std::optional<double> step_fraction;
  std::optional<double> target_fraction;
  std::optional<double> inclusion_prob;
  std::optional<std::string> reference;
  std::optional<std::string> digits_source;
};

robex::RunConfig resolve_config(const FlagOverrides& f) {
  robex::RunConfig c;
  if (f.config_path) c = robex::load_run_config(*f.config_path);
  if (f.seed) c.seed = *f.seed;
  if (f.jobs) c.jobs = *f.jobs;
  if (f.out) c.output_root = *f.out;
  if (f.dataset) c.dataset_path = *f.dataset;
  if (f.model) c.model_path = *f.model;
  if (f.num_examples) c.num_examples = *f.num_examples;
  if (f.test_fraction) c.test_fraction = *f.test_fraction;
  if (!f.methods.empty()) c.methods = f.methods;
  if (!f.criteria.empty()) c.criteria = f.criteria;
  if (f.target) c.target_class = *f.target;
  if (f.steps) c.attack.num_steps = *f.steps;
  if (f.step_size) c.attack.step_size = *f.step_size;
  if (f.binsearch_iters) c.attack.binsearch_iters = *f.binsearch_iters;
  if (f.eps_cap) c.attack.eps_cap = *f.eps_cap;
  if (!f.clip.empty()) {
    if (f.clip.size() != 2) throw robex::ConfigError("--clip expects lo hi");
    c.attack.clip_box = std::make_pair(f.clip[0], f.clip[1]);
  }
  if (f.baseline) {
    // Scalar if it parses as a number, otherwise a per-feature file.
    try {
      c.baseline_scalar = robex::parse_double(*f.baseline, "--baseline");
      c.baseline_path.reset();
    } catch (const robex::IoError&) {
      c.baseline_path = *f.baseline;
    }
  }
  if (f.ig_steps) c.ig_steps = *f.ig_steps;
  if (f.samples) {
    c.eg_samples = *f.samples;
    c.subset_samples = *f.samples;
  }
  if (f.step_fraction) c.step_fraction = *f.step_fraction;
  if (f.target_fraction) c.target_fraction = *f.target_fraction;
  if (f.inclusion_prob) c.inclusion_prob = *f.inclusion_prob;
  if (f.reference) {
    if (*f.reference == "uniform") {
      c.reference_kind = "uniform";
    } else {
      try {
        c.reference_value = robex::parse_double(*f.reference, "--reference");
        c.reference_kind = "scalar";
      } catch (const robex::IoError&) {
        c.reference_kind = "per_feature";
        c.reference_path = *f.reference;
      }
    }
  }
  if (f.digits_source) c.digits_source = *f.digits_source;
  return c;
}

void add_common_flags(CLI::App* cmd, FlagOverrides& f) {
  cmd->add_option("--config", f.config_path, "JSON config file; flags override its fields");
  cmd->add_option("--seed", f.seed, "global random seed");
  cmd->add_option("--jobs", f.jobs, "worker threads for example-level parallelism");
  cmd->add_option("--out", f.out, "output root directory");
}

void add_attack_flags(CLI::App* cmd, FlagOverrides& f) {
  cmd->add_option("--steps", f.steps, "PGD steps per attack");
  cmd->add_option("--step-size", f.step_size, "PGD step size (normalized gradient)");
  cmd->add_option("--binsearch-iters", f.binsearch_iters, "bisection iterations");
  cmd->add_option("--eps-cap", f.eps_cap, "radius cap; 0 = 2*sqrt(d)");
  cmd->add_option("--clip", f.clip, "clip x+delta to [lo, hi]")->expected(2);
}

void add_explainer_flags(CLI::App* cmd, FlagOverrides& f) {
  cmd->add_option("--baseline", f.baseline, "baseline: scalar or per-feature file");
  cmd->add_option("--ig-steps", f.ig_steps, "integration steps for IG");
  cmd->add_option("--samples", f.samples, "samples for EG / greedy-as subsets");
  cmd->add_option("--step-fraction", f.step_fraction, "features added per greedy step");
  cmd->add_option("--target-fraction", f.target_fraction, "final relevant-set fraction");
  cmd->add_option("--inclusion-prob", f.inclusion_prob, "subset inclusion probability");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explanation evaluation via subset-restricted adversarial robustness"};
  app.set_version_flag("--version", robex::version_string());
  app.require_subcommand(1);

  FlagOverrides f;

  auto* gen = app.add_subcommand("gen-data", "write a bundled dataset as CSV");
  std::string gen_kind = "blobs";
  int gen_n = 200;
  std::string gen_out = "dataset.csv";
  gen->add_option("--kind", gen_kind, "blobs | digits8x8");
  gen->add_option("--n", gen_n, "number of examples");
  gen->add_option("--path", gen_out, "output CSV path");
  gen->add_option("--digits-source", f.digits_source, "bundled digits CSV location");
  add_common_flags(gen, f);

  auto* train = app.add_subcommand("train", "train a classifier and save it as JSON");
  train->add_option("--dataset", f.dataset, "dataset CSV");
  train->add_option("--model", f.model, "model JSON output path");
  train->add_option("--test-fraction", f.test_fraction, "held-out fraction");
  add_common_flags(train, f);

  auto* eval = app.add_subcommand("evaluate", "run explainers and criteria, emit curves");
  eval->add_option("--dataset", f.dataset, "dataset CSV");
  eval->add_option("--model", f.model, "model JSON");
  eval->add_option("--methods", f.methods,
                   "grad | ig | eg | loo | random | greedy | greedy-as");
  eval->add_option("--criteria", f.criteria,
                   "robustness_sbar | robustness_s | insertion | deletion");
  eval->add_option("--num-examples", f.num_examples, "test examples to evaluate");
  eval->add_option("--test-fraction", f.test_fraction, "held-out fraction");
  eval->add_option("--target", f.target, "targeted goal class");
  eval->add_option("--reference", f.reference, "insertion/deletion reference: scalar, file, or 'uniform'");
  add_attack_flags(eval, f);
  add_explainer_flags(eval, f);
  add_common_flags(eval, f);

  auto* explain = app.add_subcommand("explain", "attribution CSV for one test example");
  int example_index = 0;
  explain->add_option("--dataset", f.dataset, "dataset CSV");
  explain->add_option("--model", f.model, "model JSON");
  explain->add_option("--method", f.method, "explanation method")->required();
  explain->add_option("--example", example_index, "test example index")->required();
  explain->add_option("--target", f.target, "targeted goal class");
  explain->add_option("--test-fraction", f.test_fraction, "held-out fraction");
  add_attack_flags(explain, f);
  add_explainer_flags(explain, f);
  add_common_flags(explain, f);

  CLI11_PARSE(app, argc, argv);

  try {
    robex::RunConfig config = resolve_config(f);
    if (gen->parsed()) {
      robex::cmd_gen_data(config, gen_kind, gen_n, config.seed, gen_out);
      std::cout << "wrote " << gen_out << " (" << gen_kind << ", n=" << gen_n << ")\n";
    } else if (train->parsed()) {
      robex::TrainSummary s = robex::cmd_train(config);
      std::cout << "trained " << config.model_path << ": train_accuracy="
                << robex::format_double(s.train_accuracy)
                << " test_accuracy=" << robex::format_double(s.test_accuracy)
                << " (n_train=" << s.num_train << ", n_test=" << s.num_test << ")\n";
    } else if (eval->parsed()) {
      robex::EvaluateResult r = robex::cmd_evaluate(config);
      std::cout << "evaluated " << r.selected_examples << " examples ("
                << r.skipped_misclassified << " skipped); artifacts in " << r.run_dir << "\n";
    } else if (explain->parsed()) {
      std::string path = robex::cmd_explain(config, example_index, *f.method);
      std::cout << "wrote " << path << "\n";
    }
  } catch (const robex::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const robex::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
