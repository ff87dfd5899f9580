// Copyright 2026 The LucidPPN Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lucid/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "lucid/checkpoint.hpp"
#include "lucid/config.hpp"
#include "lucid/explain_render.hpp"
#include "lucid/metrics.hpp"
#include "lucid/trainer.hpp"

namespace lucid {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_text_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream os(path, std::ios::binary);
  os.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!os) throw std::runtime_error("cannot write " + path.string());
}

struct CommonFlags {
  std::string config_path;
  std::string out_override;
  std::optional<std::uint64_t> seed_flag;
};

/// Seed precedence: flag, then config file, then LUCID_SEED, then default.
RunConfig effective_config(const CommonFlags& flags, bool config_required) {
  RunConfig config;
  bool config_has_seed = false;
  if (!flags.config_path.empty()) {
    std::ifstream is(flags.config_path);
    if (!is) throw ConfigError("cannot open config file: " + flags.config_path);
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    config_has_seed = json::parse(text, nullptr, true).contains("seed");
    config = parse_run_config(text);
  } else if (config_required) {
    throw ConfigError("--config is required");
  }
  if (flags.seed_flag) {
    config.seed = *flags.seed_flag;
  } else if (!config_has_seed) {
    if (const char* env = std::getenv("LUCID_SEED")) config.seed = std::strtoull(env, nullptr, 10);
  }
  if (!flags.out_override.empty()) config.out = flags.out_override;
  return config;
}

json metrics_json(const MetricReport<double>& report, bool with_iou, bool with_hue) {
  json out;
  out["accuracy"] = report.accuracy;
  out["shapetex_accuracy"] = report.shapetex_accuracy;
  out["color_sparsity"] = report.color_sparsity;
  if (with_iou) out["mean_iou"] = report.mean_iou;
  if (with_hue) {
    out["hue_accuracy"] = report.hue_accuracy;
    out["hue_shapetex_accuracy"] = report.hue_shapetex_accuracy;
  }
  json per_class = json::array();
  for (std::size_t m = 0; m < report.class_names.size(); ++m)
    per_class.push_back({{"class", report.class_names[m]},
                         {"accuracy", report.per_class_accuracy[m]},
                         {"count", report.per_class_count[m]}});
  out["per_class"] = per_class;
  return out;
}

std::string checkpoint_config_json(const RunConfig& config, int classes) {
  json wrapper;
  wrapper["classes"] = classes;
  wrapper["run"] = json::parse(canonical_config_json(config));
  return wrapper.dump(2) + "\n";
}

struct RestoredModel {
  LucidModel<double> model;
  RunConfig run;
};

RestoredModel model_from_checkpoint(const std::string& path) {
  const Checkpoint ckpt = load_checkpoint(path);
  const json wrapper = json::parse(ckpt.config_json);
  RestoredModel out;
  out.run = parse_run_config(wrapper.at("run").dump());
  const int classes = wrapper.at("classes").get<int>();
  Rng init_rng(derive_seed(out.run.seed, 0));
  out.model.init(model_config_from(out.run, classes), init_rng);
  restore_model(out.model, ckpt);
  return out;
}

int cmd_train(const CommonFlags& flags) {
  const RunConfig config = effective_config(flags, true);
  const LoadedData data = load_data(config);

  Rng init_rng(derive_seed(config.seed, 0));
  LucidModel<double> model;
  model.init(model_config_from(config, data.train.classes()), init_rng);

  fs::create_directories(config.out);
  std::ofstream log(fs::path(config.out) / "train_log.csv");
  log << "step,l_d,l_s,l_a,total\n";
  const TrainConfig<double> tc = train_config_from(config);
  const TrainResult<double> result = train(model, data.train, tc, &log);

  const bool with_iou = config.eval.with_iou && !data.test.masks.empty();
  const MetricReport<double> report = evaluate(model, data.test, with_iou, false, config.eval.hue_seed);

  const std::string ckpt_json = checkpoint_config_json(config, data.train.classes());
  Checkpoint ckpt = snapshot_model(model, ckpt_json, static_cast<std::uint32_t>(result.epochs_run),
                                   result.rng_digest);
  save_checkpoint(ckpt, (fs::path(config.out) / "checkpoint.bin").string());

  json manifest;
  manifest["config_hash"] = hex64(fnv1a64(canonical_config_json(config)));
  manifest["epoch"] = result.epochs_run;
  manifest["metrics"] = metrics_json(report, with_iou, false);
  manifest["config"] = json::parse(canonical_config_json(config));
  write_text_file(fs::path(config.out) / "manifest.json", manifest.dump(2) + "\n");

  std::cout << "trained " << result.epochs_run << " epochs; test accuracy " << report.accuracy
            << "; checkpoint at " << (fs::path(config.out) / "checkpoint.bin").string() << "\n";
  return 0;
}

int cmd_eval(const CommonFlags& flags, const std::string& checkpoint_path, bool hue_perturb) {
  RestoredModel restored = model_from_checkpoint(checkpoint_path);
  RunConfig config = flags.config_path.empty() ? restored.run : effective_config(flags, false);
  if (flags.seed_flag) config.eval.hue_seed = *flags.seed_flag;
  if (!flags.out_override.empty()) config.out = flags.out_override;
  if (hue_perturb) config.eval.hue_perturb = true;

  const LoadedData data = load_data(config);
  const bool with_iou = config.eval.with_iou && !data.test.masks.empty();
  const MetricReport<double> report =
      evaluate(restored.model, data.test, with_iou, config.eval.hue_perturb, config.eval.hue_seed);

  fs::create_directories(config.out);
  write_text_file(fs::path(config.out) / "metrics.json",
                  metrics_json(report, with_iou, config.eval.hue_perturb).dump(2) + "\n");
  std::cout << "accuracy " << report.accuracy << "; metrics at "
            << (fs::path(config.out) / "metrics.json").string() << "\n";
  return 0;
}

int cmd_explain(const CommonFlags& flags, const std::string& checkpoint_path,
                const std::string& local_target, int global_class,
                const std::vector<int>& compare_pair) {
  RestoredModel restored = model_from_checkpoint(checkpoint_path);
  RunConfig config = flags.config_path.empty() ? restored.run : effective_config(flags, false);
  if (!flags.out_override.empty()) config.out = flags.out_override;

  const LoadedData data = load_data(config);
  Explainer<double> explainer(restored.model, data.train, config.seed);
  fs::create_directories(config.out);

  bool did_anything = false;
  if (!local_target.empty()) {
    ImageSample<double> sample;
    if (fs::exists(local_target)) {
      sample.image = read_image(local_target);
      sample.id = fs::path(local_target).stem().string();
    } else {
      const auto find_by_id = [&](const Dataset<double>& set) -> const ImageSample<double>* {
        for (const auto& s : set.samples)
          if (s.id == local_target) return &s;
        return nullptr;
      };
      const ImageSample<double>* found = find_by_id(data.test);
      if (!found) found = find_by_id(data.train);
      if (!found) throw std::runtime_error("image not found: " + local_target);
      sample = *found;
    }
    write_local_explanation(explainer, sample, config.out);
    did_anything = true;
  }
  if (global_class >= 0) {
    write_global_explanation(explainer, global_class, config.out);
    did_anything = true;
  }
  if (!compare_pair.empty()) {
    if (compare_pair.size() != 2) throw std::invalid_argument("--compare takes two class indices");
    ImageSample<double> sample;
    if (!local_target.empty() && fs::exists(local_target)) {
      sample.image = read_image(local_target);
      sample.id = fs::path(local_target).stem().string();
    } else if (!data.test.samples.empty()) {
      sample = data.test.samples[0];
    } else {
      sample = data.train.samples.at(0);
    }
    write_comparison_explanation(explainer, sample, compare_pair[0], compare_pair[1], config.out);
    did_anything = true;
  }
  if (!did_anything) throw std::invalid_argument("explain: pass --local, --global or --compare");
  std::cout << "explanations written under " << (fs::path(config.out) / "explanations").string()
            << "\n";
  return 0;
}

int cmd_synth(const CommonFlags& flags) {
  const RunConfig config = effective_config(flags, true);
  if (config.data.source != "synthetic")
    throw ConfigError("synth requires data.source = synthetic");
  const SyntheticSpec spec = synthetic_spec_from(config.data.synthetic);
  const auto train_set = to_dataset(generate_synthetic(spec, config.data.synthetic.train_per_class, "train"));
  const auto test_set = to_dataset(generate_synthetic(spec, config.data.synthetic.test_per_class, "test"));

  const fs::path root(config.out);
  export_dataset(train_set, (root / "train").string(), (root / "train_masks").string());
  export_dataset(test_set, (root / "test").string(), (root / "test_masks").string());

  json manifest;
  manifest["config_hash"] = hex64(fnv1a64(canonical_config_json(config)));
  manifest["train_images"] = train_set.samples.size();
  manifest["test_images"] = test_set.samples.size();
  manifest["classes"] = train_set.class_names;
  write_text_file(root / "synth_manifest.json", manifest.dump(2) + "\n");
  std::cout << "wrote " << train_set.samples.size() << " train and " << test_set.samples.size()
            << " test images under " << root.string() << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"LucidPPN: two-branch prototypical-parts classification"};
  app.require_subcommand(1);

  CommonFlags train_flags, eval_flags, explain_flags, synth_flags;
  std::string eval_checkpoint, explain_checkpoint;
  bool eval_hue = false;
  std::string explain_local;
  int explain_global = -1;
  std::vector<int> explain_compare;
  std::uint64_t seed_value = 0;

  auto add_common = [&](CLI::App* cmd, CommonFlags& flags, bool config_required) {
    auto* config_opt = cmd->add_option("--config", flags.config_path, "JSON run configuration");
    if (config_required) config_opt->required();
    cmd->add_option("--out", flags.out_override, "output directory override");
    cmd->add_option("--seed", seed_value, "seed override")->each([&flags, &seed_value](const std::string&) {
      flags.seed_flag = seed_value;
    });
  };

  auto* train_cmd = app.add_subcommand("train", "train and write checkpoint + manifest + logs");
  add_common(train_cmd, train_flags, true);

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint and write metrics.json");
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint file")->required();
  add_common(eval_cmd, eval_flags, false);
  eval_cmd->add_flag("--hue-perturb", eval_hue, "also evaluate under random hue rotation");

  auto* explain_cmd = app.add_subcommand("explain", "write explanation artifacts");
  explain_cmd->add_option("--checkpoint", explain_checkpoint, "checkpoint file")->required();
  add_common(explain_cmd, explain_flags, false);
  explain_cmd->add_option("--local", explain_local, "image path or dataset id to explain");
  explain_cmd->add_option("--global", explain_global, "class index for global prototype sheets");
  explain_cmd->add_option("--compare", explain_compare, "two class indices to compare")->expected(2);

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset with masks");
  add_common(synth_cmd, synth_flags, true);

  try {
    app.parse(argc, argv);
    if (train_cmd->parsed()) return cmd_train(train_flags);
    if (eval_cmd->parsed()) return cmd_eval(eval_flags, eval_checkpoint, eval_hue);
    if (explain_cmd->parsed())
      return cmd_explain(explain_flags, explain_checkpoint, explain_local, explain_global,
                         explain_compare);
    if (synth_cmd->parsed()) return cmd_synth(synth_flags);
    return 2;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace lucid
