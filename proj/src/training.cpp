// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ogdm/training.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "config_json.hpp"
#include "ogdm/checkpoint.hpp"
#include "ogdm/data.hpp"
#include "ogdm/diffusion.hpp"
#include "ogdm/objective.hpp"

namespace ogdm {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void config_fail(const std::string& msg) { throw ConfigError("config: " + msg); }

double get_double(const json& v, const std::string& key) {
  if (!v.is_number()) config_fail(key + " must be a number");
  return v.get<double>();
}

int get_int(const json& v, const std::string& key) {
  if (!v.is_number_integer()) config_fail(key + " must be an integer");
  const auto x = v.get<std::int64_t>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) config_fail(key + " out of range");
  return static_cast<int>(x);
}

std::string get_string(const json& v, const std::string& key) {
  if (!v.is_string()) config_fail(key + " must be a string");
  return v.get<std::string>();
}

std::vector<int> get_int_list(const json& v, const std::string& key) {
  if (!v.is_array()) config_fail(key + " must be an array of integers");
  std::vector<int> out;
  for (const auto& e : v) out.push_back(get_int(e, key));
  return out;
}

bool finite_all(std::span<const double> xs) {
  for (double x : xs) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

namespace detail {

json config_to_json(const TrainConfig& c) {
  json j;
  j["T"] = c.T;
  j["beta_min"] = c.beta_min;
  j["beta_max"] = c.beta_max;
  j["k"] = c.k;
  j["gamma"] = c.gamma;
  j["lr_theta"] = c.lr_theta;
  j["lr_phi"] = c.lr_phi;
  j["batch_size"] = c.batch_size;
  j["total_steps"] = c.total_steps;
  j["disc_warmup_steps"] = c.disc_warmup_steps;
  j["seed"] = c.seed;
  j["dataset"] = c.dataset;
  j["projection"] = c.projection;
  j["finetune_from"] = c.finetune_from ? json(*c.finetune_from) : json(nullptr);
  j["train_size"] = c.train_size;
  j["disc_steps_per_gen_step"] = c.disc_steps_per_gen_step;
  j["denoiser_hidden"] = c.denoiser_hidden;
  j["disc_hidden"] = c.disc_hidden;
  j["time_embed_dim"] = c.time_embed_dim;
  j["activation"] = c.activation;
  j["checkpoint_every"] = c.checkpoint_every;
  return j;
}

TrainConfig config_from_json(const json& j) {
  if (!j.is_object()) config_fail("top level must be a JSON object");
  TrainConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "T") c.T = get_int(v, key);
    else if (key == "beta_min") c.beta_min = get_double(v, key);
    else if (key == "beta_max") c.beta_max = get_double(v, key);
    else if (key == "k") c.k = get_double(v, key);
    else if (key == "gamma") c.gamma = get_double(v, key);
    else if (key == "lr_theta") c.lr_theta = get_double(v, key);
    else if (key == "lr_phi") c.lr_phi = get_double(v, key);
    else if (key == "batch_size") c.batch_size = get_int(v, key);
    else if (key == "total_steps") c.total_steps = get_int(v, key);
    else if (key == "disc_warmup_steps") c.disc_warmup_steps = get_int(v, key);
    else if (key == "seed") {
      if (!v.is_number_unsigned()) config_fail("seed must be a non-negative integer");
      c.seed = v.get<std::uint64_t>();
    } else if (key == "dataset") c.dataset = get_string(v, key);
    else if (key == "projection") c.projection = get_string(v, key);
    else if (key == "finetune_from") {
      if (v.is_null()) c.finetune_from.reset();
      else c.finetune_from = get_string(v, key);
    } else if (key == "train_size") c.train_size = get_int(v, key);
    else if (key == "disc_steps_per_gen_step") c.disc_steps_per_gen_step = get_int(v, key);
    else if (key == "denoiser_hidden") c.denoiser_hidden = get_int_list(v, key);
    else if (key == "disc_hidden") c.disc_hidden = get_int_list(v, key);
    else if (key == "time_embed_dim") c.time_embed_dim = get_int(v, key);
    else if (key == "activation") c.activation = get_string(v, key);
    else if (key == "checkpoint_every") c.checkpoint_every = get_int(v, key);
    else config_fail("unknown key '" + key + "'");
  }
  return c;
}

}  // namespace detail

void TrainConfig::validate() const {
  if (T < 1) config_fail("T must be >= 1");
  if (!(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0)) {
    config_fail("need 0 < beta_min <= beta_max < 1");
  }
  if (!(k >= 0.0 && k <= 1.0)) config_fail("k must lie in [0, 1]");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) config_fail("gamma must be finite and >= 0");
  if (gamma > 0.0 && std::floor(k * T + 1e-9) < 1.0) config_fail("k*T must be >= 1 when gamma > 0");
  if (gamma > 0.0 && disc_steps_per_gen_step < 1) config_fail("gamma > 0 needs disc_steps_per_gen_step >= 1");
  if (!(lr_theta > 0.0) || !(lr_phi > 0.0)) config_fail("learning rates must be > 0");
  if (batch_size < 1) config_fail("batch_size must be >= 1");
  if (total_steps < 0) config_fail("total_steps must be >= 0");
  if (disc_warmup_steps < 0) config_fail("disc_warmup_steps must be >= 0");
  if (train_size < 1) config_fail("train_size must be >= 1");
  if (disc_steps_per_gen_step < 0) config_fail("disc_steps_per_gen_step must be >= 0");
  if (checkpoint_every < 0) config_fail("checkpoint_every must be >= 0");
  try {
    DatasetSpec::parse(dataset);
    parse_projection(projection);
    parse_activation(activation);
    denoiser_spec(*this, 2).validate();
    discriminator_spec(*this, 2).validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    config_fail(e.what());
  }
}

TrainConfig parse_train_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    config_fail("malformed JSON at byte " + std::to_string(e.byte));
  }
  TrainConfig c = detail::config_from_json(j);
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_fail("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_train_config(ss.str());
}

std::string to_json_text(const TrainConfig& cfg) { return detail::config_to_json(cfg).dump(2) + "\n"; }

NoiseSchedule schedule_for(const TrainConfig& cfg) {
  return build_linear_schedule(cfg.T, cfg.beta_min, cfg.beta_max);
}

Matrix training_data(const TrainConfig& cfg) {
  const auto seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(Stream::data));
  return make_dataset(DatasetSpec::parse(cfg.dataset), static_cast<std::size_t>(cfg.train_size), seed).points;
}

MlpSpec denoiser_spec(const TrainConfig& cfg, int dim) {
  MlpSpec s;
  s.input_dim = dim;
  s.output_dim = dim;
  s.hidden_dims = cfg.denoiser_hidden;
  s.activation = parse_activation(cfg.activation);
  s.time_embed_dim = cfg.time_embed_dim;
  return s;
}

MlpSpec discriminator_spec(const TrainConfig& cfg, int dim) {
  MlpSpec s;
  s.input_dim = dim;
  s.output_dim = 1;
  s.hidden_dims = cfg.disc_hidden;
  s.activation = parse_activation(cfg.activation);
  s.time_embed_dim = cfg.time_embed_dim;
  s.lookahead_embed = true;
  return s;
}

std::string curves_csv(const std::vector<CurveRow>& rows) {
  std::string out = "step,transition_loss,emission_loss,disc_objective\n";
  auto cell = [](double v) { return std::isnan(v) ? std::string("nan") : format_exact(v); };
  for (const auto& r : rows) {
    out += std::to_string(r.step) + "," + cell(r.transition_loss) + "," + cell(r.emission_loss) + "," +
           cell(r.disc_objective) + "\n";
  }
  return out;
}

Trainer::Trainer(TrainConfig cfg, NoiseSchedule schedule) : cfg_(std::move(cfg)), schedule_(std::move(schedule)) {
  cfg_.validate();
  projection_ = parse_projection(cfg_.projection);
  data_ = training_data(cfg_);
}

void Trainer::init_streams() {
  batch_rng_ = Rng(derive_seed(cfg_.seed, static_cast<std::uint64_t>(Stream::batch)));
  aux_rng_ = Rng(derive_seed(cfg_.seed, static_cast<std::uint64_t>(Stream::aux)));
  disc_rng_ = Rng(derive_seed(cfg_.seed, static_cast<std::uint64_t>(Stream::disc)));
}

Trainer Trainer::fresh(const TrainConfig& cfg) {
  Trainer tr(cfg, schedule_for(cfg));
  const int dim = static_cast<int>(tr.data_.cols());
  Rng init_theta(derive_seed(cfg.seed, static_cast<std::uint64_t>(Stream::init_theta)));
  tr.theta_.spec = denoiser_spec(cfg, dim);
  tr.theta_.params = init_mlp(tr.theta_.spec, init_theta);
  tr.opt_theta_ = AdamState::zeros(tr.theta_.params.size());
  if (cfg.disc_steps_per_gen_step > 0) {
    Rng init_phi(derive_seed(cfg.seed, static_cast<std::uint64_t>(Stream::init_phi)));
    Network phi;
    phi.spec = discriminator_spec(cfg, dim);
    phi.params = init_mlp(phi.spec, init_phi, true);
    tr.opt_phi_ = AdamState::zeros(phi.params.size());
    tr.phi_ = std::move(phi);
  }
  tr.init_streams();
  return tr;
}

Trainer Trainer::finetune(const TrainConfig& cfg, const Checkpoint& base) {
  const NoiseSchedule expected = schedule_for(cfg);
  if (expected.betas() != base.schedule.betas()) {
    throw ConfigError("config: schedule does not match the fine-tuning base checkpoint");
  }
  Trainer tr = fresh(cfg);
  if (base.denoiser.spec.input_dim != static_cast<int>(tr.data_.cols())) {
    throw ConfigError("config: base checkpoint dimension does not match the dataset");
  }
  tr.theta_ = base.denoiser;
  tr.opt_theta_ = AdamState::zeros(tr.theta_.params.size());
  if (!tr.cfg_.finetune_from) tr.cfg_.finetune_from = std::string("<memory>");
  return tr;
}

Trainer Trainer::resume(const Checkpoint& ckpt) {
  Trainer tr(ckpt.config, ckpt.schedule);
  tr.theta_ = ckpt.denoiser;
  tr.opt_theta_ = ckpt.opt_theta;
  if (ckpt.discriminator.has_value() != (ckpt.config.disc_steps_per_gen_step > 0)) {
    throw CheckpointError("checkpoint discriminator does not match its train_config");
  }
  if (ckpt.discriminator) {
    if (!ckpt.opt_phi) throw CheckpointError("checkpoint has a discriminator but no optimizer state for it");
    tr.phi_ = ckpt.discriminator;
    tr.opt_phi_ = *ckpt.opt_phi;
  }
  tr.batch_rng_.set_state(ckpt.rng_batch);
  tr.aux_rng_.set_state(ckpt.rng_aux);
  tr.disc_rng_.set_state(ckpt.rng_disc);
  tr.step_ = ckpt.step;
  return tr;
}

std::int64_t Trainer::total_iterations() const {
  const bool warm = cfg_.finetune_from.has_value() && phi_.has_value();
  return (warm ? cfg_.disc_warmup_steps : 0) + static_cast<std::int64_t>(cfg_.total_steps);
}

bool Trainer::in_warmup() const {
  return cfg_.finetune_from.has_value() && phi_.has_value() && step_ < cfg_.disc_warmup_steps;
}

double Trainer::discriminator_update() {
  const ObjectiveBatch batch = draw_objective_batch(data_, static_cast<std::size_t>(cfg_.batch_size), schedule_,
                                                    cfg_.k, disc_rng_, disc_rng_);
  ObjectiveValue d = discriminator_objective_gradient(*phi_, theta_, batch, projection_, schedule_);
  // Ascent on the objective is descent on its negation.
  for (double& g : d.grad) g = -g;
  if (!adam_step(phi_->params, d.grad, opt_phi_, {cfg_.lr_phi})) throw std::domain_error("non-finite φ gradient");
  return d.value;
}

TrainStatus Trainer::step() {
  const Network theta_saved = theta_;
  const std::optional<Network> phi_saved = phi_;
  const AdamState opt_theta_saved = opt_theta_;
  const AdamState opt_phi_saved = opt_phi_;
  const Rng batch_saved = batch_rng_, aux_saved = aux_rng_, disc_saved = disc_rng_;

  CurveRow row{step_, kNaN, kNaN, kNaN};
  try {
    const bool warm = in_warmup();
    if (phi_) {
      const int reps = warm ? 1 : cfg_.disc_steps_per_gen_step;
      for (int r = 0; r < reps; ++r) row.disc_objective = discriminator_update();
    }
    if (!warm) {
      const ObjectiveBatch batch = draw_objective_batch(data_, static_cast<std::size_t>(cfg_.batch_size),
                                                        schedule_, cfg_.k, batch_rng_, aux_rng_);
      std::vector<double> grad;
      if (cfg_.gamma > 0.0) {
        ObjectiveValue g = generator_objective_gradient(theta_, *phi_, batch, cfg_.gamma, projection_, schedule_);
        row.transition_loss = g.transition;
        row.emission_loss = g.emission;
        grad = std::move(g.grad);
      } else {
        row.transition_loss = transition_loss_gradient(theta_, batch.base, schedule_, grad);
      }
      if (!std::isfinite(row.transition_loss) || !finite_all(grad)) throw std::domain_error("non-finite loss");
      if (!adam_step(theta_.params, grad, opt_theta_, {cfg_.lr_theta})) {
        throw std::domain_error("non-finite θ gradient");
      }
    }
  } catch (const std::domain_error&) {
    theta_ = theta_saved;
    phi_ = phi_saved;
    opt_theta_ = opt_theta_saved;
    opt_phi_ = opt_phi_saved;
    batch_rng_ = batch_saved;
    aux_rng_ = aux_saved;
    disc_rng_ = disc_saved;
    return TrainStatus::non_finite;
  }
  curves_.push_back(row);
  ++step_;
  return TrainStatus::ok;
}

TrainStatus Trainer::run(const CheckpointSink& sink) {
  const std::int64_t end = total_iterations();
  while (step_ < end) {
    if (step() != TrainStatus::ok) return TrainStatus::non_finite;
    if (sink && cfg_.checkpoint_every > 0 && step_ % cfg_.checkpoint_every == 0) sink(checkpoint());
  }
  return TrainStatus::ok;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.schedule = schedule_;
  c.denoiser = theta_;
  c.discriminator = phi_;
  c.opt_theta = opt_theta_;
  if (phi_) c.opt_phi = opt_phi_;
  c.config = cfg_;
  c.rng_batch = batch_rng_.state();
  c.rng_aux = aux_rng_.state();
  c.rng_disc = disc_rng_.state();
  c.step = step_;
  return c;
}

TrainResult train_alternating(const TrainConfig& cfg, Checkpoint& out, const Trainer::CheckpointSink& sink) {
  Trainer tr = cfg.finetune_from ? Trainer::finetune(cfg, load_checkpoint(*cfg.finetune_from)) : Trainer::fresh(cfg);
  TrainResult res;
  res.status = tr.run(sink);
  res.curves = tr.curves();
  out = tr.checkpoint();
  return res;
}

}  // namespace ogdm
