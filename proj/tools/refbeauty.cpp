// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

// refbeauty: command line entry point.
//
//   refbeauty data split-translation --attributes list_attr_celeba.txt --out splits/
//   refbeauty data split-regression --scores ratings.txt --fraction 0.6 --seed 0 --out splits/
//   refbeauty beauty init --out backbone.pt
//   refbeauty beauty pretrain --backbone backbone.pt --images a.jsonl --out backbone.pt
//   refbeauty beauty finetune --backbone backbone.pt --train train.jsonl --test test.jsonl --out tuned.pt
//   refbeauty beauty score --backbone tuned.pt face1.png face2.png
//   refbeauty train --config train.json [--resume ckpt.pt] [--ablate id|beauty|perceptual]
//   refbeauty beautify --checkpoint latest.pt --target a.png --reference b.png --steps 5 --scores --out out/
//   refbeauty serve --config service.json
//   refbeauty eval gain --backbone tuned.pt --before originals.jsonl --after beautified.jsonl

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <json.hpp>
#include <torch/torch.h>

#include "refbeauty/beautifier.hpp"
#include "refbeauty/data/manifest.hpp"
#include "refbeauty/data/splits.hpp"
#include "refbeauty/errors.hpp"
#include "refbeauty/image.hpp"
#include "refbeauty/perception/backbone.hpp"
#include "refbeauty/service/service.hpp"
#include "refbeauty/trainer/config.hpp"
#include "refbeauty/trainer/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace refbeauty;

namespace {

service::Service* g_service = nullptr;

void handle_signal(int) {
  if (g_service) g_service->stop();
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

torch::Tensor load_manifest_images(const data::DatasetManifest& manifest, ImageSize size) {
  std::vector<torch::Tensor> images;
  images.reserve(manifest.size());
  for (const auto& e : manifest.entries()) images.push_back(load_image(e.image_path, size));
  return torch::stack(images);
}

PerceptionBackbone require_backbone(const fs::path& path) {
  return PerceptionBackbone(PerceptionBackboneImpl::load_file(path));
}

// --- data -----------------------------------------------------------------

struct SplitTranslationArgs {
  fs::path attributes, out, partition, image_root;
  std::vector<std::string> positive;
  bool merge_train_val = false;
};

int split_translation(const SplitTranslationArgs& a) {
  auto table = data::read_attribute_table(a.attributes);
  if (!a.partition.empty()) {
    table = data::filter_partition(table, data::read_eval_partition(a.partition),
                                   data::training_partitions(a.merge_train_val));
  }
  std::set<std::string> positive;
  for (const auto& p : a.positive) positive.insert(data::canonical_attribute(p));
  if (positive.empty()) positive = data::default_positive_attributes();
  const fs::path root = a.image_root.empty() ? a.attributes.parent_path() : a.image_root;
  const auto split = data::build_translation_split(table, positive, root);
  fs::create_directories(a.out);
  split.a.write(a.out / "domain_a.jsonl");
  split.b.write(a.out / "domain_b.jsonl");
  std::cout << "domain A: " << split.a.size() << " images -> " << (a.out / "domain_a.jsonl").string() << '\n'
            << "domain B: " << split.b.size() << " images -> " << (a.out / "domain_b.jsonl").string() << '\n';
  return 0;
}

struct SplitRegressionArgs {
  fs::path scores, out, image_root;
  double fraction = 0.6;
  uint64_t seed = 0;
};

int split_regression(const SplitRegressionArgs& a) {
  const fs::path root = a.image_root.empty() ? a.scores.parent_path() : a.image_root;
  const auto split = data::build_regression_split(data::read_scores(a.scores, root), a.fraction, a.seed);
  fs::create_directories(a.out);
  split.train.write(a.out / "train.jsonl");
  split.test.write(a.out / "test.jsonl");
  std::cout << "train: " << split.train.size() << ", test: " << split.test.size() << '\n';
  return 0;
}

// --- beauty ---------------------------------------------------------------

struct BeautyArgs {
  fs::path backbone, out, config, images, train, test, log;
  uint64_t seed = 0;
  PretrainOptions pretrain;
  FinetuneOptions finetune;
  std::vector<fs::path> score_images;
};

int beauty_init(const BeautyArgs& a) {
  BackboneConfig config;
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw IoError("cannot read " + a.config.string());
    config = json::parse(in).get<BackboneConfig>();
  }
  PerceptionBackbone backbone(config);
  backbone->initialize(a.seed);
  backbone->save_file(a.out);
  std::cout << "initialised backbone " << backbone->digest().substr(0, 16) << " -> " << a.out.string() << '\n';
  return 0;
}

int beauty_pretrain(const BeautyArgs& a) {
  auto backbone = require_backbone(a.backbone);
  const auto manifest = data::DatasetManifest::read(a.images);
  const auto images = load_manifest_images(manifest, backbone->config().input_size);
  const double acc = backbone->pretrain(images, a.pretrain);
  backbone->save_file(a.out);
  std::cout << "rotation accuracy " << acc << " -> " << a.out.string() << '\n';
  return 0;
}

int beauty_finetune(const BeautyArgs& a) {
  auto backbone = require_backbone(a.backbone);
  const auto train = data::DatasetManifest::read(a.train);
  std::optional<data::DatasetManifest> test;
  if (!a.test.empty()) test = data::DatasetManifest::read(a.test);
  const auto log = backbone->finetune(train, test ? &*test : nullptr, a.finetune);
  backbone->save_file(a.out);

  json records = json::array();
  for (const auto& e : log.epochs) {
    json r{{"epoch", e.epoch}, {"train_mae", e.train_mae}};
    if (e.test_mae) r["test_mae"] = *e.test_mae;
    records.push_back(r);
  }
  if (!a.log.empty()) write_json(a.log, {{"epochs", records}, {"baseline_mae", log.baseline_mae}});
  const auto& last = log.epochs.back();
  std::cout << std::fixed << std::setprecision(4) << "epochs " << log.epochs.size() << "  train MAE " << last.train_mae;
  if (last.test_mae) std::cout << "  test MAE " << *last.test_mae;
  std::cout << "  mean-predictor MAE " << log.baseline_mae << '\n';
  return 0;
}

int beauty_score(const BeautyArgs& a) {
  auto backbone = require_backbone(a.backbone);
  torch::NoGradGuard no_grad;
  for (const auto& p : a.score_images) {
    const double raw = backbone->predict_score(load_image(p));
    std::cout << p.string() << '\t' << std::setprecision(6) << raw << '\t' << PerceptionBackboneImpl::clamp_score(raw)
              << '\n';
  }
  return 0;
}

// --- train ----------------------------------------------------------------

struct TrainArgs {
  fs::path config, resume;
  std::string ablate;
};

int train(const TrainArgs& a) {
  auto config = TrainConfig::load(a.config);
  if (!a.ablate.empty()) apply_ablation(config, a.ablate);
  config.validate();
  const auto result = run_training(config, a.resume.empty() ? std::nullopt : std::optional<fs::path>(a.resume),
                                   [&](const IterationRecord& r) {
                                     if (config.log_every > 0 && r.iteration % config.log_every == 0) {
                                       std::cout << json(r).dump() << '\n';
                                     }
                                     return true;
                                   });
  std::cout << "ran " << result.iterations_run << " iterations; checkpoint " << result.final_checkpoint.string()
            << "; log " << result.log_path.string() << '\n';
  return 0;
}

// --- beautify -------------------------------------------------------------

struct BeautifyArgs {
  fs::path checkpoint, backbone, target, reference, out = "beautified";
  int64_t steps = 0;
  std::vector<double> weights;
  std::optional<double> percent;
  std::optional<double> score_target;
  bool scores = false;
};

int beautify(const BeautifyArgs& a) {
  auto model = load_model(a.checkpoint, a.backbone.empty() ? std::nullopt : std::optional<fs::path>(a.backbone));
  Beautifier beautifier(model.translator, model.backbone);
  const auto target = load_image(a.target, model.config.image_size);
  const auto reference = load_image(a.reference, model.config.image_size);
  fs::create_directories(a.out);

  json frames = json::array();
  std::vector<torch::Tensor> strip;
  auto record = [&](const BeautifyFrame& f) {
    std::ostringstream name;
    name << "frame_" << std::setw(3) << std::setfill('0') << frames.size() << ".png";
    save_image(f.image, a.out / name.str());
    strip.push_back(f.image);
    frames.push_back({{"index", frames.size()},
                      {"file", name.str()},
                      {"w1", 1.0 - f.w2},
                      {"w2", f.w2},
                      {"score", f.score ? json(*f.score) : json(nullptr)}});
  };

  json meta{{"target", a.target.string()},
            {"reference", a.reference.string()},
            {"checkpoint", a.checkpoint.string()},
            {"checkpoint_digest", model.digest}};
  if (a.score_target) {
    auto found = beautifier.search_weight_for_score(target, reference, *a.score_target);
    record(found.frame);
    meta["score_search"] = {{"target_score", *a.score_target}, {"iterations", found.iterations}};
  } else {
    BeautifyRequest request;
    request.target = target;
    request.reference = reference;
    request.score_outputs = a.scores;
    if (!a.weights.empty()) {
      request.w2_values = a.weights;
    } else if (a.percent) {
      request.w2_values = {weight_from_percent(*a.percent)};
    } else {
      request.w2_values = linspace_weights(a.steps > 0 ? a.steps : 1);
    }
    beautifier.beautify_streaming(request, record);
  }
  save_image(compose_strip(strip), a.out / "strip.png");
  meta["frames"] = frames;
  write_json(a.out / "metadata.json", meta);
  std::cout << frames.size() << " frame(s) -> " << a.out.string() << '\n';
  return 0;
}

// --- serve ----------------------------------------------------------------

int serve(const fs::path& config_path, std::optional<int> port) {
  auto config = config_path.empty() ? service::ServiceConfig{} : service::ServiceConfig::load(config_path);
  config.apply_environment();
  if (port) config.port = *port;
  service::Service svc(config);
  const int bound = svc.bind();
  if (bound < 0) throw IoError("cannot bind " + config.host + ":" + std::to_string(config.port));
  g_service = &svc;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  std::cout << "listening on http://" << config.host << ':' << bound << " (" << svc.gallery().size()
            << " gallery references)" << std::endl;
  svc.listen_after_bind();
  g_service = nullptr;
  return 0;
}

// --- eval -----------------------------------------------------------------

int eval_gain(const fs::path& backbone_path, const fs::path& before, const fs::path& after) {
  auto backbone = require_backbone(backbone_path);
  const auto originals = data::DatasetManifest::read(before);
  const auto beautified = data::DatasetManifest::read(after);
  std::vector<torch::Tensor> images;
  for (const auto& e : beautified.entries()) images.push_back(load_image(e.image_path));
  torch::NoGradGuard no_grad;
  const auto report = evaluate_gain(originals, images, *backbone);
  std::cout << json{{"mean_before", report.mean_before},
                    {"mean_after", report.mean_after},
                    {"gain_percent", report.gain_percent}}
                   .dump(2)
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reference-guided face beautification"};
  app.require_subcommand(1);
  std::function<int()> action;

  // data
  auto* data_cmd = app.add_subcommand("data", "Dataset manifests")->require_subcommand(1);
  SplitTranslationArgs st;
  auto* st_cmd = data_cmd->add_subcommand("split-translation", "Attribute table -> domain A/B manifests");
  st_cmd->add_option("--attributes", st.attributes, "CelebA-style attribute file")->required()->check(CLI::ExistingFile);
  st_cmd->add_option("--out", st.out, "Output directory")->required();
  st_cmd->add_option("--positive", st.positive, "Positive attributes (default: the four makeup/cheekbone ones)");
  st_cmd->add_option("--partition", st.partition, "Evaluation partition file")->check(CLI::ExistingFile);
  st_cmd->add_flag("--merge-train-val", st.merge_train_val, "Use partitions 0 and 1 for training");
  st_cmd->add_option("--image-root", st.image_root, "Directory holding the images");
  st_cmd->callback([&] { action = [&] { return split_translation(st); }; });

  SplitRegressionArgs sr;
  auto* sr_cmd = data_cmd->add_subcommand("split-regression", "Scored images -> train/test manifests");
  sr_cmd->add_option("--scores", sr.scores, "Lines of '<image> <score>'")->required()->check(CLI::ExistingFile);
  sr_cmd->add_option("--fraction", sr.fraction, "Training fraction")->capture_default_str();
  sr_cmd->add_option("--seed", sr.seed)->capture_default_str();
  sr_cmd->add_option("--out", sr.out, "Output directory")->required();
  sr_cmd->add_option("--image-root", sr.image_root);
  sr_cmd->callback([&] { action = [&] { return split_regression(sr); }; });

  // beauty
  auto* beauty_cmd = app.add_subcommand("beauty", "Perception backbone")->require_subcommand(1);
  BeautyArgs ba;
  auto* init_cmd = beauty_cmd->add_subcommand("init", "Write a freshly initialised backbone");
  init_cmd->add_option("--config", ba.config, "BackboneConfig JSON")->check(CLI::ExistingFile);
  init_cmd->add_option("--seed", ba.seed)->capture_default_str();
  init_cmd->add_option("--out", ba.out)->required();
  init_cmd->callback([&] { action = [&] { return beauty_init(ba); }; });

  auto* pre_cmd = beauty_cmd->add_subcommand("pretrain", "Self-supervised warm-up of the frozen trunk");
  pre_cmd->add_option("--backbone", ba.backbone)->required()->check(CLI::ExistingFile);
  pre_cmd->add_option("--images", ba.images, "Manifest of unlabeled images")->required()->check(CLI::ExistingFile);
  pre_cmd->add_option("--steps", ba.pretrain.steps)->capture_default_str();
  pre_cmd->add_option("--batch-size", ba.pretrain.batch_size)->capture_default_str();
  pre_cmd->add_option("--lr", ba.pretrain.learning_rate)->capture_default_str();
  pre_cmd->add_option("--seed", ba.pretrain.seed)->capture_default_str();
  pre_cmd->add_option("--out", ba.out)->required();
  pre_cmd->callback([&] { action = [&] { return beauty_pretrain(ba); }; });

  auto* ft_cmd = beauty_cmd->add_subcommand("finetune", "Fit the beauty head on scored images");
  ft_cmd->add_option("--backbone", ba.backbone)->required()->check(CLI::ExistingFile);
  ft_cmd->add_option("--train", ba.train)->required()->check(CLI::ExistingFile);
  ft_cmd->add_option("--test", ba.test)->check(CLI::ExistingFile);
  ft_cmd->add_option("--epochs", ba.finetune.epochs)->capture_default_str();
  ft_cmd->add_option("--batch-size", ba.finetune.batch_size)->capture_default_str();
  ft_cmd->add_option("--lr", ba.finetune.learning_rate)->capture_default_str();
  ft_cmd->add_option("--seed", ba.finetune.seed)->capture_default_str();
  ft_cmd->add_option("--log", ba.log, "Write the per-epoch MAE log as JSON");
  ft_cmd->add_option("--out", ba.out)->required();
  ft_cmd->callback([&] { action = [&] { return beauty_finetune(ba); }; });

  auto* score_cmd = beauty_cmd->add_subcommand("score", "Print raw and clamped beauty scores");
  score_cmd->add_option("--backbone", ba.backbone)->required()->check(CLI::ExistingFile);
  score_cmd->add_option("images", ba.score_images)->required()->check(CLI::ExistingFile);
  score_cmd->callback([&] { action = [&] { return beauty_score(ba); }; });

  // train
  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train the translator");
  train_cmd->add_option("--config", ta.config)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--resume", ta.resume)->check(CLI::ExistingFile);
  train_cmd->add_option("--ablate", ta.ablate)->check(CLI::IsMember({"id", "beauty", "perceptual"}));
  train_cmd->callback([&] { action = [&] { return train(ta); }; });

  // beautify
  BeautifyArgs bf;
  double percent = 0.0, score_target = 0.0;
  auto* bf_cmd = app.add_subcommand("beautify", "Beautify a target towards a reference");
  bf_cmd->add_option("--checkpoint", bf.checkpoint)->required()->check(CLI::ExistingFile);
  bf_cmd->add_option("--backbone", bf.backbone, "Replace the checkpoint's backbone")->check(CLI::ExistingFile);
  bf_cmd->add_option("--target", bf.target)->required()->check(CLI::ExistingFile);
  bf_cmd->add_option("--reference", bf.reference)->required()->check(CLI::ExistingFile);
  auto* steps_opt = bf_cmd->add_option("--steps", bf.steps, "Evenly spaced w2 over [0, 1]")->check(CLI::PositiveNumber);
  auto* weights_opt = bf_cmd->add_option("--weights", bf.weights, "Explicit w2 values")->delimiter(',');
  auto* q_opt = bf_cmd->add_option("--percent", percent, "Beautification degree Q in [0, 100]");
  auto* st_opt = bf_cmd->add_option("--score-target", score_target, "Bisect w2 to reach this raw score");
  steps_opt->excludes(weights_opt)->excludes(q_opt)->excludes(st_opt);
  weights_opt->excludes(q_opt)->excludes(st_opt);
  q_opt->excludes(st_opt);
  bf_cmd->add_flag("--scores", bf.scores, "Score every frame");
  bf_cmd->add_option("--out", bf.out)->capture_default_str();
  bf_cmd->callback([&] {
    if (*q_opt) bf.percent = percent;
    if (*st_opt) bf.score_target = score_target;
    action = [&] { return beautify(bf); };
  });

  // serve
  fs::path serve_config;
  int port = 0;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP inference service");
  serve_cmd->add_option("--config", serve_config, "ServiceConfig JSON")->check(CLI::ExistingFile);
  auto* port_opt = serve_cmd->add_option("--port", port);
  serve_cmd->callback([&] {
    action = [&] { return serve(serve_config, *port_opt ? std::optional<int>(port) : std::nullopt); };
  });

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluation")->require_subcommand(1);
  fs::path gain_backbone, gain_before, gain_after;
  auto* gain_cmd = eval_cmd->add_subcommand("gain", "Relative beauty gain of beautified images");
  gain_cmd->add_option("--backbone", gain_backbone)->required()->check(CLI::ExistingFile);
  gain_cmd->add_option("--before", gain_before, "Manifest of original images")->required()->check(CLI::ExistingFile);
  gain_cmd->add_option("--after", gain_after, "Manifest of beautified images, same order")
      ->required()
      ->check(CLI::ExistingFile);
  gain_cmd->callback([&] { action = [&] { return eval_gain(gain_backbone, gain_before, gain_after); }; });

  CLI11_PARSE(app, argc, argv);
  try {
    return action ? action() : 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const c10::Error& e) {
    std::cerr << "tensor error: " << e.what_without_backtrace() << '\n';
    return 1;
  }
}
