// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

#include "refbeauty/perception/backbone.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "refbeauty/digest.hpp"
#include "refbeauty/errors.hpp"
#include "refbeauty/generator/layers.hpp"

namespace refbeauty {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace {
constexpr int64_t kFeatureBatch = 16;
}

void BackboneConfig::validate() const {
  if (input_size.height < 1 || input_size.width < 1) throw ConfigError("backbone input size must be positive");
  if (trunk_channels.empty()) throw ConfigError("backbone trunk needs at least one block");
  if (pool_size < 1 || identity_dim < 1 || beauty_dim < 1) throw ConfigError("backbone dims must be positive");
  if (perceptual_blocks < 1 || perceptual_blocks > static_cast<int64_t>(trunk_channels.size())) {
    throw ConfigError("perceptual_blocks must be in [1, trunk depth]");
  }
}

void to_json(nlohmann::json& j, const BackboneConfig& c) {
  j = {{"input_height", c.input_size.height}, {"input_width", c.input_size.width},
       {"trunk_channels", c.trunk_channels},  {"pool_size", c.pool_size},
       {"identity_dim", c.identity_dim},      {"beauty_dim", c.beauty_dim},
       {"perceptual_blocks", c.perceptual_blocks}};
}

void from_json(const nlohmann::json& j, BackboneConfig& c) {
  BackboneConfig d;
  c.input_size.height = j.value("input_height", d.input_size.height);
  c.input_size.width = j.value("input_width", d.input_size.width);
  c.trunk_channels = j.value("trunk_channels", d.trunk_channels);
  c.pool_size = j.value("pool_size", d.pool_size);
  c.identity_dim = j.value("identity_dim", d.identity_dim);
  c.beauty_dim = j.value("beauty_dim", d.beauty_dim);
  c.perceptual_blocks = j.value("perceptual_blocks", d.perceptual_blocks);
}

std::string_view to_string(BackboneState s) {
  switch (s) {
    case BackboneState::kUninitialized:
      return "uninitialized";
    case BackboneState::kInitialized:
      return "initialized";
    case BackboneState::kPretrained:
      return "pretrained";
    case BackboneState::kFineTuned:
      return "finetuned";
  }
  return "unknown";
}

namespace {
BackboneState state_from_string(const std::string& s) {
  for (auto st : {BackboneState::kUninitialized, BackboneState::kInitialized, BackboneState::kPretrained,
                  BackboneState::kFineTuned}) {
    if (to_string(st) == s) return st;
  }
  throw ConfigError("unknown backbone state '" + s + "'");
}
}  // namespace

torch::Tensor MaxFeatureMapImpl::forward(const torch::Tensor& x) {
  auto halves = x.chunk(2, /*dim=*/1);
  return torch::max(halves[0], halves[1]);
}

PerceptionBackboneImpl::PerceptionBackboneImpl(BackboneConfig config) : config_(std::move(config)) {
  config_.validate();
  int64_t in = 3;
  for (std::size_t i = 0; i < config_.trunk_channels.size(); ++i) {
    const auto out = config_.trunk_channels[i];
    nn::Sequential block;
    block->push_back(nn::Conv2d(nn::Conv2dOptions(in, 2 * out, 3).padding(1)));
    block->push_back(MaxFeatureMap());
    block->push_back(nn::MaxPool2d(nn::MaxPool2dOptions(2).stride(2).ceil_mode(true)));
    trunk_.push_back(register_module("block" + std::to_string(i), block));
    in = out;
  }
  fc1_ = register_module("fc1", nn::Linear(in * config_.pool_size * config_.pool_size, config_.identity_dim));
  fc2_ = register_module("fc2", nn::Linear(config_.identity_dim, config_.beauty_dim));
  scorer_ = register_module("scorer", nn::Linear(config_.beauty_dim, 1));
  for (auto& p : frozen_parameters()) p.set_requires_grad(false);
  set_head_trainable(false);
}

void PerceptionBackboneImpl::initialize(uint64_t seed) {
  torch::manual_seed(seed);
  kaiming_init(*this);
  {
    torch::NoGradGuard no_grad;
    // Unit fan-in gain keeps FC outputs on the scale of their inputs.
    nn::init::kaiming_normal_(fc2_->weight, 1.0, torch::kFanIn, torch::kLeakyReLU);
    nn::init::kaiming_normal_(scorer_->weight, 1.0, torch::kFanIn, torch::kLeakyReLU);
    scorer_->bias.fill_(3.0);
  }
  state_ = BackboneState::kInitialized;
  provenance_.push_back("initialize seed=" + std::to_string(seed));
}

void PerceptionBackboneImpl::require_ready(const char* op) const {
  if (state_ == BackboneState::kUninitialized) {
    throw NotReadyError(std::string(op) + ": backbone weights are not initialised (load a checkpoint or call initialize)");
  }
}

torch::Tensor PerceptionBackboneImpl::prepare(const torch::Tensor& images) const {
  auto batch = as_batch(images);
  if (batch.size(1) != 3) throw ShapeError("backbone expects 3-channel images");
  return resize(batch, config_.input_size);
}

torch::Tensor PerceptionBackboneImpl::run_trunk(const torch::Tensor& x, int64_t blocks) {
  auto y = x;
  for (int64_t i = 0; i < blocks; ++i) y = trunk_[static_cast<std::size_t>(i)]->forward(y);
  return y;
}

torch::Tensor PerceptionBackboneImpl::identity_from_input(const torch::Tensor& x) {
  auto trunk = run_trunk(x, static_cast<int64_t>(trunk_.size()));
  auto pooled = F::adaptive_avg_pool2d(trunk, F::AdaptiveAvgPool2dFuncOptions(config_.pool_size));
  return fc1_(pooled.flatten(1));
}

PerceptionFeatures PerceptionBackboneImpl::extract(const torch::Tensor& images) {
  require_ready("extract_features");
  PerceptionFeatures f;
  f.identity = identity_from_input(prepare(images));
  f.beauty = fc2_(f.identity);
  f.score = scorer_(f.beauty).squeeze(1);
  return f;
}

torch::Tensor PerceptionBackboneImpl::perceptual_features(const torch::Tensor& images) {
  require_ready("perceptual_features");
  return run_trunk(prepare(images), config_.perceptual_blocks);
}

torch::Tensor PerceptionBackboneImpl::predict_scores(const torch::Tensor& images) {
  if (state_ != BackboneState::kFineTuned) {
    throw NotReadyError("predict_score: beauty head has not been fine-tuned (state " +
                        std::string(to_string(state_)) + ")");
  }
  return extract(images).score;
}

double PerceptionBackboneImpl::predict_score(const torch::Tensor& image) {
  torch::NoGradGuard no_grad;
  return predict_scores(as_batch(image)).item<double>();
}

torch::Tensor PerceptionBackboneImpl::load_resized(const data::DatasetManifest& manifest) {
  std::vector<torch::Tensor> images;
  images.reserve(manifest.size());
  for (const auto& e : manifest.entries()) images.push_back(load_image(e.image_path, config_.input_size));
  return torch::stack(images);
}

double PerceptionBackboneImpl::pretrain(const torch::Tensor& images, const PretrainOptions& options) {
  require_ready("pretrain");
  auto data = prepare(images).detach();
  if (data.size(0) < 1) throw ValidationError("pretrain needs at least one image");
  if (config_.input_size.height != config_.input_size.width) {
    throw ConfigError("rotation pretraining needs a square input size");
  }

  auto frozen = frozen_parameters();
  for (auto& p : frozen) p.set_requires_grad(true);
  torch::manual_seed(options.seed);
  nn::Linear rotation_head(config_.identity_dim, 4);
  std::vector<torch::Tensor> params = frozen;
  for (auto& p : rotation_head->parameters()) params.push_back(p);
  torch::optim::Adam opt(params, torch::optim::AdamOptions(options.learning_rate));

  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<int64_t> pick(0, data.size(0) - 1);
  std::uniform_int_distribution<int64_t> rot(0, 3);
  double accuracy = 0.0;
  for (int64_t step = 0; step < options.steps; ++step) {
    std::vector<torch::Tensor> xs;
    std::vector<int64_t> ys;
    for (int64_t b = 0; b < options.batch_size; ++b) {
      const auto k = rot(rng);
      xs.push_back(torch::rot90(data[pick(rng)], k, {1, 2}));
      ys.push_back(k);
    }
    auto x = torch::stack(xs);
    auto y = torch::tensor(ys, torch::kLong);
    opt.zero_grad();
    auto logits = rotation_head(identity_from_input(x));
    auto loss = F::cross_entropy(logits, y);
    loss.backward();
    opt.step();
    accuracy = logits.argmax(1).eq(y).to(torch::kFloat64).mean().item<double>();
  }
  for (auto& p : frozen) {
    p.set_requires_grad(false);
    p.mutable_grad() = torch::Tensor();
  }
  if (state_ == BackboneState::kInitialized) state_ = BackboneState::kPretrained;
  provenance_.push_back("pretrain rotation steps=" + std::to_string(options.steps) +
                        " images=" + std::to_string(data.size(0)));
  return accuracy;
}

FinetuneLog PerceptionBackboneImpl::finetune(const data::DatasetManifest& train, const data::DatasetManifest* test,
                                             const FinetuneOptions& options) {
  require_ready("finetune_beauty_head");
  if (!train.is_regression()) throw ValidationError("fine-tuning manifest must carry a beauty score for every entry");
  train.validate(false);
  if (test) {
    if (!test->is_regression()) throw ValidationError("test manifest must carry a beauty score for every entry");
    test->validate(false);
  }
  if (options.epochs < 1 || options.batch_size < 1) throw ValidationError("epochs and batch_size must be >= 1");

  auto features_of = [this](const data::DatasetManifest& m) {
    torch::NoGradGuard no_grad;
    auto images = load_resized(m);
    std::vector<torch::Tensor> out;
    for (int64_t i = 0; i < images.size(0); i += kFeatureBatch) {
      out.push_back(identity_from_input(images.slice(0, i, std::min(i + kFeatureBatch, images.size(0)))));
    }
    return torch::cat(out);
  };
  auto scores_of = [](const data::DatasetManifest& m) {
    std::vector<float> s;
    for (const auto& e : m.entries()) s.push_back(static_cast<float>(*e.beauty_score));
    return torch::tensor(s);
  };

  // FC1 is frozen, so its activations are computed once.
  const auto train_x = features_of(train);
  const auto train_y = scores_of(train);
  torch::Tensor test_x, test_y;
  if (test) {
    test_x = features_of(*test);
    test_y = scores_of(*test);
  }

  FinetuneLog log;
  const double mean_score = train_y.mean().item<double>();
  log.baseline_mae = (test ? (test_y - mean_score) : (train_y - mean_score)).abs().mean().item<double>();

  auto head = [this](const torch::Tensor& identity) { return scorer_(fc2_(identity)).squeeze(1); };

  set_head_trainable(true);
  {
    torch::NoGradGuard no_grad;
    scorer_->bias.fill_(mean_score);
  }
  torch::optim::Adam opt(head_parameters(), torch::optim::AdamOptions(options.learning_rate)
                                                .betas({options.beta1, options.beta2}));
  std::mt19937_64 rng(options.seed);
  std::vector<int64_t> order(static_cast<std::size_t>(train_x.size(0)));
  std::iota(order.begin(), order.end(), 0);

  for (int64_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(options.batch_size)) {
      const auto end = std::min(order.size(), i + static_cast<std::size_t>(options.batch_size));
      auto idx = torch::tensor(std::vector<int64_t>(order.begin() + static_cast<std::ptrdiff_t>(i),
                                                    order.begin() + static_cast<std::ptrdiff_t>(end)));
      opt.zero_grad();
      auto loss = (head(train_x.index_select(0, idx)) - train_y.index_select(0, idx)).abs().mean();
      loss.backward();
      opt.step();
    }
    torch::NoGradGuard no_grad;
    FinetuneEpoch rec;
    rec.epoch = epoch;
    rec.train_mae = (head(train_x) - train_y).abs().mean().item<double>();
    if (test) rec.test_mae = (head(test_x) - test_y).abs().mean().item<double>();
    log.epochs.push_back(rec);
  }
  set_head_trainable(false);

  state_ = BackboneState::kFineTuned;
  provenance_.push_back("finetune epochs=" + std::to_string(options.epochs) + " train=" +
                        std::to_string(train.size()) + " train_digest=" + train.digest().substr(0, 16));
  return log;
}

double PerceptionBackboneImpl::evaluate_mae(const data::DatasetManifest& manifest) {
  if (!manifest.is_regression()) throw ValidationError("evaluate_mae needs a scored manifest");
  torch::NoGradGuard no_grad;
  double total = 0.0;
  for (const auto& e : manifest.entries()) {
    total += std::abs(predict_score(load_image(e.image_path, config_.input_size)) - *e.beauty_score);
  }
  return total / static_cast<double>(manifest.size());
}

std::vector<torch::Tensor> PerceptionBackboneImpl::frozen_parameters() const {
  std::vector<torch::Tensor> out;
  for (const auto& block : trunk_) {
    for (const auto& p : block->parameters()) out.push_back(p);
  }
  for (const auto& p : fc1_->parameters()) out.push_back(p);
  return out;
}

std::vector<torch::Tensor> PerceptionBackboneImpl::head_parameters() const {
  std::vector<torch::Tensor> out;
  for (const auto& p : fc2_->parameters()) out.push_back(p);
  for (const auto& p : scorer_->parameters()) out.push_back(p);
  return out;
}

void PerceptionBackboneImpl::set_head_trainable(bool trainable) {
  for (auto& p : head_parameters()) p.set_requires_grad(trainable);
}

std::string PerceptionBackboneImpl::frozen_digest() const { return tensors_digest(frozen_parameters()); }

std::string PerceptionBackboneImpl::digest() const { return tensors_digest(parameters()); }

void PerceptionBackboneImpl::save(torch::serialize::OutputArchive& archive) const {
  nn::Module::save(archive);
  nlohmann::json meta;
  meta["config"] = config_;
  meta["state"] = std::string(to_string(state_));
  meta["provenance"] = provenance_;
  archive.write("backbone_meta", c10::IValue(meta.dump()));
}

void PerceptionBackboneImpl::load(torch::serialize::InputArchive& archive) {
  c10::IValue meta_value;
  archive.read("backbone_meta", meta_value);
  auto meta = nlohmann::json::parse(meta_value.toStringRef());
  if (meta.at("config").get<BackboneConfig>() != config_) {
    throw ConfigError("backbone checkpoint config does not match the constructed backbone");
  }
  nn::Module::load(archive);
  state_ = state_from_string(meta.at("state").get<std::string>());
  provenance_ = meta.value("provenance", std::vector<std::string>{});
  for (auto& p : frozen_parameters()) p.set_requires_grad(false);
  set_head_trainable(false);
}

void PerceptionBackboneImpl::save_file(const std::filesystem::path& path) const {
  torch::serialize::OutputArchive archive;
  save(archive);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  archive.save_to(path.string());
}

std::shared_ptr<PerceptionBackboneImpl> PerceptionBackboneImpl::from_archive(torch::serialize::InputArchive& archive) {
  c10::IValue meta_value;
  if (!archive.try_read("backbone_meta", meta_value)) throw ConfigError("archive holds no perception backbone");
  auto meta = nlohmann::json::parse(meta_value.toStringRef());
  auto backbone = std::make_shared<PerceptionBackboneImpl>(meta.at("config").get<BackboneConfig>());
  backbone->load(archive);
  return backbone;
}

std::shared_ptr<PerceptionBackboneImpl> PerceptionBackboneImpl::load_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("backbone checkpoint not found: " + path.string());
  torch::serialize::InputArchive archive;
  archive.load_from(path.string());
  return from_archive(archive);
}

}  // namespace refbeauty
