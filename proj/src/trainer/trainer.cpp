// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

#include "refbeauty/trainer/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "refbeauty/digest.hpp"
#include "refbeauty/errors.hpp"

namespace refbeauty {

namespace {

constexpr int kCheckpointFormat = 1;

void set_requires_grad(const std::vector<torch::Tensor>& params, bool on) {
  for (auto p : params) p.set_requires_grad(on);
}

std::string checkpoint_name(int64_t iteration) {
  std::ostringstream os;
  os << "checkpoint_" << std::setw(8) << std::setfill('0') << iteration << ".pt";
  return os.str();
}

}  // namespace

void to_json(nlohmann::json& j, const IterationRecord& r) {
  j = {{"iteration", r.iteration}, {"lr", r.learning_rate}, {"d_loss", r.d_loss}, {"losses", r.losses}};
}

void from_json(const nlohmann::json& j, IterationRecord& r) {
  r.iteration = j.at("iteration");
  r.learning_rate = j.at("lr");
  r.d_loss = j.at("d_loss");
  r.losses = j.at("losses").get<LossBundle>();
}

Trainer::Trainer(TrainConfig config, PerceptionBackbone backbone, std::shared_ptr<FeatureExtractor> perceptual_extractor)
    : config_(std::move(config)), backbone_(std::move(backbone)), perceptual_(std::move(perceptual_extractor)) {
  config_.weights.validate();
  if (!backbone_) throw ConfigError("trainer needs a perception backbone");
  if (backbone_->state() == BackboneState::kUninitialized) {
    throw NotReadyError("trainer: perception backbone is uninitialised");
  }
  backbone_->set_head_trainable(false);
  backbone_->eval();
  if (!perceptual_) perceptual_ = std::make_shared<BackboneFeatureExtractor>(backbone_);

  torch::manual_seed(config_.seed);
  translator_ = Translator(config_.generator);
  discriminator_ = MultiScaleDiscriminator(config_.discriminator);

  const auto lr = learning_rate_at(config_, 0);
  gen_opt_ = std::make_unique<torch::optim::Adam>(
      generator_parameters(), torch::optim::AdamOptions(lr).betas({config_.beta1, config_.beta2}));
  dis_opt_ = std::make_unique<torch::optim::Adam>(
      discriminator_parameters(), torch::optim::AdamOptions(lr).betas({config_.beta1, config_.beta2}));
}

std::vector<torch::Tensor> Trainer::generator_parameters() const { return translator_->parameters(); }

std::vector<torch::Tensor> Trainer::discriminator_parameters() const { return discriminator_->parameters(); }

void Trainer::apply_learning_rate(double lr) {
  for (auto* opt : {gen_opt_.get(), dis_opt_.get()}) {
    for (auto& group : opt->param_groups()) {
      static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
    }
  }
}

LossTerms Trainer::compute_losses(const torch::Tensor& a, const torch::Tensor& b) {
  auto& T = *translator_;
  const auto content_a = T.encode_content(a);
  const auto content_b = T.encode_content(b);
  const auto style_a = T.encode_style(a);
  const auto style_b = T.encode_style(b);

  const auto rec_a = T.decode(content_a, style_a);
  const auto rec_b = T.decode(content_b, style_b);
  const auto ab = T.decode(content_a, style_b);

  PerceptionFeatures anchor_a, anchor_b;
  {
    torch::NoGradGuard no_grad;
    anchor_a = backbone_->extract(a);
    anchor_b = backbone_->extract(b);
  }
  const auto f_rec_a = backbone_->extract(rec_a);
  const auto f_rec_b = backbone_->extract(rec_b);
  const auto f_ab = backbone_->extract(ab);

  LossTerms t;
  t.rec_A = reconstruction_loss(rec_a, a);
  t.rec_B = reconstruction_loss(rec_b, b);
  t.id_A = feature_l1(f_rec_a.identity, anchor_a.identity);
  t.id_B = feature_l1(f_rec_b.identity, anchor_b.identity);
  t.id_AB = feature_l1(f_ab.identity, anchor_a.identity);
  t.bt_A = feature_l1(f_rec_a.beauty, anchor_a.beauty);
  t.bt_B = feature_l1(f_rec_b.beauty, anchor_b.beauty);
  t.bt_AB = feature_l1(f_ab.beauty,
                       config_.beauty_target == BeautyTarget::kReference ? anchor_b.beauty : anchor_a.beauty);
  t.gan_AB = generator_adversarial_loss(discriminator_->judge(ab), config_.adversarial_mode);
  t.perc_AB = perceptual_loss(ab, b, perceptual_.get());
  return t;
}

IterationRecord Trainer::train_step(const torch::Tensor& batch_a, const torch::Tensor& batch_b) {
  IterationRecord record;
  record.iteration = iteration_;
  record.learning_rate = learning_rate_at(config_, iteration_);
  apply_learning_rate(record.learning_rate);
  translator_->train();
  discriminator_->train();

  // Discriminator: real = B, fake = beautified A (no generator gradients).
  {
    torch::Tensor fake;
    {
      torch::NoGradGuard no_grad;
      fake = translator_->translate(batch_a, batch_b);
    }
    dis_opt_->zero_grad();
    auto d_loss = discriminator_loss(discriminator_->judge(batch_b), discriminator_->judge(fake),
                                     config_.adversarial_mode);
    record.d_loss = d_loss.item<double>();
    if (!std::isfinite(record.d_loss)) {
      throw NonFiniteLossError("d_loss", "at iteration " + std::to_string(iteration_));
    }
    d_loss.backward();
    dis_opt_->step();
  }

  // Generator side; the discriminator is held fixed.
  const auto dis_params = discriminator_parameters();
  set_requires_grad(dis_params, false);
  try {
    gen_opt_->zero_grad();
    auto terms = compute_losses(batch_a, batch_b);
    try {
      record.losses = summarize(terms, config_.weights);
    } catch (const NonFiniteLossError& e) {
      throw NonFiniteLossError(e.term(), "at iteration " + std::to_string(iteration_) + " (" + e.what() + ")");
    }
    weighted_total(terms, config_.weights).backward();
    gen_opt_->step();
  } catch (...) {
    set_requires_grad(dis_params, true);
    throw;
  }
  set_requires_grad(dis_params, true);

  ++iteration_;
  return record;
}

void Trainer::save_checkpoint(const std::filesystem::path& path, const TrainingProgress& progress) const {
  nlohmann::json meta;
  meta["format"] = kCheckpointFormat;
  meta["iteration"] = iteration_;
  meta["config"] = config_;
  meta["cursor_a"] = progress.cursor_a;
  meta["cursor_b"] = progress.cursor_b;
  meta["manifest_digests"] = progress.manifest_digests;

  torch::serialize::OutputArchive archive;
  archive.write("meta", c10::IValue(meta.dump()));
  torch::serialize::OutputArchive translator, discriminator, backbone, gen_opt, dis_opt;
  translator_->save(translator);
  discriminator_->save(discriminator);
  backbone_->save(backbone);
  gen_opt_->save(gen_opt);
  dis_opt_->save(dis_opt);
  archive.write("translator", translator);
  archive.write("discriminator", discriminator);
  archive.write("backbone", backbone);
  archive.write("gen_opt", gen_opt);
  archive.write("dis_opt", dis_opt);

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  archive.save_to(tmp);
  std::filesystem::rename(tmp, path);
}

TrainingProgress Trainer::load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("checkpoint not found: " + path.string());
  torch::serialize::InputArchive archive;
  archive.load_from(path.string());
  c10::IValue meta_value;
  archive.read("meta", meta_value);
  const auto meta = nlohmann::json::parse(meta_value.toStringRef());
  const auto stored = meta.at("config").get<TrainConfig>();
  if (!(stored.generator == config_.generator) || !(stored.discriminator == config_.discriminator)) {
    throw ConfigError("checkpoint " + path.string() + " was written for a different architecture");
  }

  torch::serialize::InputArchive translator, discriminator, gen_opt, dis_opt;
  archive.read("translator", translator);
  archive.read("discriminator", discriminator);
  archive.read("gen_opt", gen_opt);
  archive.read("dis_opt", dis_opt);
  translator_->load(translator);
  discriminator_->load(discriminator);
  gen_opt_->load(gen_opt);
  dis_opt_->load(dis_opt);
  iteration_ = meta.at("iteration").get<int64_t>();

  TrainingProgress progress;
  progress.cursor_a = meta.at("cursor_a").get<data::LoaderCursor>();
  progress.cursor_b = meta.at("cursor_b").get<data::LoaderCursor>();
  progress.manifest_digests = meta.value("manifest_digests", std::map<std::string, std::string>{});
  return progress;
}

PerceptionBackbone make_training_backbone(const TrainConfig& config) {
  if (!config.backbone_checkpoint.empty()) {
    return PerceptionBackbone(PerceptionBackboneImpl::load_file(config.backbone_checkpoint));
  }
  if (!config.backbone_stub_seed) {
    throw ConfigError("no backbone checkpoint configured and no explicit backbone_stub_seed");
  }
  PerceptionBackbone stub(config.backbone);
  stub->initialize(*config.backbone_stub_seed);
  return stub;
}

TrainingResult run_training(const TrainConfig& config, const std::optional<std::filesystem::path>& resume,
                            const IterationCallback& callback) {
  config.validate();
  auto manifest_a = data::DatasetManifest::read(config.manifest_a);
  auto manifest_b = data::DatasetManifest::read(config.manifest_b);
  if (manifest_a.empty() || manifest_b.empty()) throw ValidationError("training manifests must be non-empty");

  data::BatchSpec spec_a{config.batch_size, config.image_size, config.seed, true};
  data::BatchSpec spec_b{config.batch_size, config.image_size, config.seed + 1, true};
  const std::map<std::string, std::string> digests = {{"A", manifest_a.digest()}, {"B", manifest_b.digest()}};
  data::BatchStream stream_a(std::move(manifest_a), spec_a);
  data::BatchStream stream_b(std::move(manifest_b), spec_b);

  Trainer trainer(config, make_training_backbone(config));
  if (resume) {
    auto progress = trainer.load_checkpoint(*resume);
    if (!progress.manifest_digests.empty() && progress.manifest_digests != digests) {
      throw ConfigError("resume checkpoint was trained on different manifests");
    }
    stream_a.seek(progress.cursor_a);
    stream_b.seek(progress.cursor_b);
  }

  std::filesystem::create_directories(config.out_dir);
  TrainingResult result;
  result.log_path = config.out_dir / "train_log.jsonl";
  std::ofstream log(result.log_path, resume ? std::ios::app : std::ios::trunc);
  if (!log) throw IoError("cannot open training log " + result.log_path.string());

  auto progress = [&] { return TrainingProgress{stream_a.cursor(), stream_b.cursor(), digests}; };

  while (trainer.iteration() < config.total_iterations) {
    auto a = stream_a.next();
    auto b = stream_b.next();
    const auto record = trainer.train_step(a, b);
    ++result.iterations_run;
    if (record.iteration % config.log_every == 0) log << nlohmann::json(record).dump() << '\n' << std::flush;
    if (trainer.iteration() % config.checkpoint_every == 0) {
      trainer.save_checkpoint(config.out_dir / checkpoint_name(trainer.iteration()), progress());
    }
    if (callback && !callback(record)) {
      result.stopped_early = true;
      break;
    }
  }

  result.final_checkpoint = config.out_dir / "latest.pt";
  trainer.save_checkpoint(result.final_checkpoint, progress());
  return result;
}

LoadedModel load_model(const std::filesystem::path& checkpoint,
                       const std::optional<std::filesystem::path>& backbone_override) {
  if (!std::filesystem::exists(checkpoint)) throw IoError("checkpoint not found: " + checkpoint.string());
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(checkpoint.string());
  } catch (const c10::Error& e) {
    throw ConfigError("cannot read checkpoint " + checkpoint.string() + ": " + e.what_without_backtrace());
  }
  c10::IValue meta_value;
  if (!archive.try_read("meta", meta_value)) throw ConfigError(checkpoint.string() + " is not a training checkpoint");
  const auto meta = nlohmann::json::parse(meta_value.toStringRef());

  LoadedModel model;
  model.config = meta.at("config").get<TrainConfig>();
  model.iteration = meta.at("iteration").get<int64_t>();
  model.translator = Translator(model.config.generator);
  torch::serialize::InputArchive translator;
  archive.read("translator", translator);
  model.translator->load(translator);
  model.translator->eval();

  if (backbone_override) {
    model.backbone = PerceptionBackbone(PerceptionBackboneImpl::load_file(*backbone_override));
  } else {
    torch::serialize::InputArchive backbone;
    archive.read("backbone", backbone);
    model.backbone = PerceptionBackbone(PerceptionBackboneImpl::from_archive(backbone));
  }
  model.backbone->eval();
  model.digest = sha256_file(checkpoint);
  return model;
}

}  // namespace refbeauty
