// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "ogdm/checkpoint.hpp"
#include "ogdm/data.hpp"
#include "ogdm/diffusion.hpp"
#include "ogdm/training.hpp"

using namespace ogdm;

namespace {

TrainConfig small_config(std::uint64_t seed = 1) {
  TrainConfig c;
  c.T = 100;
  c.batch_size = 32;
  c.total_steps = 100;
  c.train_size = 1000;
  c.denoiser_hidden = {16, 16};
  c.disc_hidden = {12};
  c.time_embed_dim = 8;
  c.disc_warmup_steps = 10;
  c.seed = seed;
  return c;
}

TrainConfig ogdm_config(std::uint64_t seed = 1) {
  TrainConfig c = small_config(seed);
  c.gamma = 0.05;
  c.k = 0.2;
  c.projection = "heun";
  return c;
}

Checkpoint round_trip(const Checkpoint& c) { return parse_checkpoint(serialize_checkpoint(c)); }

std::string replace_once(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("checkpoint text round trips byte for byte") {
  Trainer tr = Trainer::fresh(ogdm_config());
  for (int i = 0; i < 5; ++i) REQUIRE(tr.step() == TrainStatus::ok);
  const Checkpoint c = tr.checkpoint();
  const std::string first = serialize_checkpoint(c);
  const Checkpoint back = parse_checkpoint(first);
  CHECK(serialize_checkpoint(back) == first);
  CHECK(back.denoiser == c.denoiser);
  CHECK(back.discriminator == c.discriminator);
  CHECK(back.opt_theta == c.opt_theta);
  CHECK(back.opt_phi == c.opt_phi);
  CHECK(back.config == c.config);
  CHECK(back.schedule.betas() == c.schedule.betas());
  CHECK(back.schedule.alpha_bars() == c.schedule.alpha_bars());
  CHECK(back.step == 5);

  const auto dir = std::filesystem::temp_directory_path() / "ogdm_test_ckpt";
  std::filesystem::create_directories(dir);
  save_checkpoint(c, dir / "a.json");
  save_checkpoint(load_checkpoint(dir / "a.json"), dir / "b.json");
  std::ifstream a(dir / "a.json", std::ios::binary), b(dir / "b.json", std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);
  CHECK(sa == first);
  CHECK_FALSE(std::filesystem::exists(dir / "a.json.tmp"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoint errors") {
  const std::string text = serialize_checkpoint(Trainer::fresh(small_config()).checkpoint());
  SUBCASE("truncated") {
    try {
      (void)parse_checkpoint(text.substr(0, text.size() / 2));
      FAIL("expected an error");
    } catch (const CheckpointError& e) {
      CHECK(std::string(e.what()).find("byte ") != std::string::npos);
    }
  }
  SUBCASE("version") {
    CHECK_THROWS_AS(parse_checkpoint(replace_once(text, "ogdm-ckpt/1", "ogdm-ckpt/2")), CheckpointError);
  }
  SUBCASE("layout") {
    CHECK_THROWS_AS(parse_checkpoint(replace_once(text, "\"l1.weight\"", "\"l7.weight\"")), CheckpointError);
  }
  SUBCASE("value count") {
    CHECK_THROWS_AS(parse_checkpoint(replace_once(text, "\"values\": [\n", "\"values\": [\n\"0.5\",\n")),
                    CheckpointError);
  }
  SUBCASE("non-numeric value") {
    CHECK_THROWS_AS(parse_checkpoint(replace_once(text, "\"values\": [\n", "\"values\": [\n\"x\",\n")),
                    CheckpointError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt.json"), CheckpointError);
  }
}

TEST_CASE("resuming equals uninterrupted training") {
  for (const TrainConfig& cfg : {small_config(3), ogdm_config(4)}) {
    Trainer straight = Trainer::fresh(cfg);
    REQUIRE(straight.run() == TrainStatus::ok);
    CHECK(straight.iteration() == 100);

    Trainer first = Trainer::fresh(cfg);
    for (int i = 0; i < 37; ++i) REQUIRE(first.step() == TrainStatus::ok);
    Trainer second = Trainer::resume(round_trip(first.checkpoint()));
    REQUIRE(second.run() == TrainStatus::ok);
    CHECK(serialize_checkpoint(second.checkpoint()) == serialize_checkpoint(straight.checkpoint()));
  }
}

TEST_CASE("fine-tune resume across the warmup boundary") {
  Trainer base = Trainer::fresh(small_config(5));
  REQUIRE(base.run() == TrainStatus::ok);
  const Checkpoint base_ckpt = base.checkpoint();

  const TrainConfig cfg = ogdm_config(6);
  Trainer straight = Trainer::finetune(cfg, base_ckpt);
  CHECK(straight.total_iterations() == 110);
  CHECK(straight.in_warmup());
  REQUIRE(straight.run() == TrainStatus::ok);
  const auto& rows = straight.curves();
  REQUIRE(rows.size() == 110);
  CHECK(std::isnan(rows[9].transition_loss));
  CHECK(std::isfinite(rows[9].disc_objective));
  CHECK(std::isfinite(rows[10].transition_loss));
  CHECK(std::isfinite(rows[10].emission_loss));

  Trainer first = Trainer::finetune(cfg, base_ckpt);
  for (int i = 0; i < 7; ++i) REQUIRE(first.step() == TrainStatus::ok);
  Trainer second = Trainer::resume(round_trip(first.checkpoint()));
  CHECK(second.in_warmup());
  REQUIRE(second.run() == TrainStatus::ok);
  CHECK(serialize_checkpoint(second.checkpoint()) == serialize_checkpoint(straight.checkpoint()));
}

TEST_CASE("zero gamma without a discriminator is the plain denoising loop") {
  TrainConfig cfg = small_config(8);
  cfg.disc_steps_per_gen_step = 0;
  cfg.total_steps = 60;
  Trainer tr = Trainer::fresh(cfg);
  REQUIRE(tr.run() == TrainStatus::ok);
  CHECK_FALSE(tr.discriminator().has_value());

  const NoiseSchedule s = schedule_for(cfg);
  const Matrix data = training_data(cfg);
  Network theta;
  theta.spec = denoiser_spec(cfg, 2);
  Rng init(derive_seed(cfg.seed, static_cast<std::uint64_t>(Stream::init_theta)));
  theta.params = init_mlp(theta.spec, init);
  AdamState st = AdamState::zeros(theta.params.size());
  Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(Stream::batch)));
  for (int i = 0; i < cfg.total_steps; ++i) {
    const Batch b = draw_batch(data, static_cast<std::size_t>(cfg.batch_size), s, rng);
    std::vector<double> grad;
    const double loss = transition_loss_gradient(theta, b, s, grad);
    CHECK(loss == tr.curves()[static_cast<std::size_t>(i)].transition_loss);
    REQUIRE(adam_step(theta.params, grad, st, {cfg.lr_theta}));
  }
  CHECK(theta.params.values == tr.denoiser().params.values);
}

TEST_CASE("zero gamma ignores the discriminator in the generator update") {
  TrainConfig with = small_config(9);
  with.total_steps = 30;
  TrainConfig without = with;
  without.disc_steps_per_gen_step = 0;
  Trainer a = Trainer::fresh(with), b = Trainer::fresh(without);
  REQUIRE(a.run() == TrainStatus::ok);
  REQUIRE(b.run() == TrainStatus::ok);
  CHECK(a.denoiser().params.values == b.denoiser().params.values);
}

TEST_CASE("smoke training lowers the denoising loss") {
  double start = 0.0, end = 0.0;
  for (std::uint64_t seed : {0, 1, 2}) {
    TrainConfig cfg;
    cfg.disc_steps_per_gen_step = 0;
    cfg.seed = seed;
    Trainer tr = Trainer::fresh(cfg);
    REQUIRE(tr.run() == TrainStatus::ok);
    const auto& rows = tr.curves();
    REQUIRE(rows.size() == 2000);
    for (int i = 0; i < 50; ++i) {
      start += rows[static_cast<std::size_t>(i)].transition_loss;
      end += rows[rows.size() - 1 - static_cast<std::size_t>(i)].transition_loss;
    }
  }
  MESSAGE("start window " << start / 150 << ", end window " << end / 150);
  CHECK(end <= 0.5 * start);
}

TEST_CASE("curves csv") {
  const std::vector<CurveRow> rows = {{0, 1.5, std::nan(""), -1.25}};
  CHECK(curves_csv(rows) == "step,transition_loss,emission_loss,disc_objective\n0,1.5,nan,-1.25\n");
}

TEST_CASE("config parsing") {
  const TrainConfig c = parse_train_config(R"({"T": 50, "gamma": 0.01, "dataset": "moons", "seed": 7})");
  CHECK(c.T == 50);
  CHECK(c.gamma == 0.01);
  CHECK(c.dataset == "moons");
  CHECK(c.seed == 7);
  CHECK(parse_train_config(to_json_text(c)) == c);

  CHECK_THROWS_AS(parse_train_config(R"({"T": 50, "bogus": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_train_config(R"({"T": "50"})"), ConfigError);
  CHECK_THROWS_AS(parse_train_config(R"({"k": 1.5})"), ConfigError);
  CHECK_THROWS_AS(parse_train_config(R"({"batch_size": 0})"), ConfigError);
  CHECK_THROWS_AS(parse_train_config(R"({"gamma": 0.1, "disc_steps_per_gen_step": 0})"), ConfigError);
  CHECK_THROWS_AS(parse_train_config(R"({"gamma": 0.1, "k": 0.001, "T": 100})"), ConfigError);
  CHECK_THROWS_AS(parse_train_config(R"({"projection": "rk4"})"), ConfigError);
  CHECK_THROWS_AS(parse_train_config(R"({"dataset": "cifar"})"), ConfigError);
  CHECK_THROWS_AS(parse_train_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_train_config("[]"), ConfigError);
}

TEST_CASE("fine-tuning checks the base checkpoint") {
  const Checkpoint base = Trainer::fresh(small_config()).checkpoint();
  TrainConfig other = ogdm_config();
  other.T = 200;
  CHECK_THROWS_AS(Trainer::finetune(other, base), ConfigError);
  TrainConfig one_d = ogdm_config();
  one_d.dataset = "mixture1d(2)";
  CHECK_THROWS_AS(Trainer::finetune(one_d, base), ConfigError);
}

TEST_CASE("periodic checkpoints") {
  TrainConfig cfg = small_config(11);
  cfg.total_steps = 20;
  cfg.checkpoint_every = 5;
  int calls = 0;
  std::int64_t last = 0;
  Trainer tr = Trainer::fresh(cfg);
  REQUIRE(tr.run([&](const Checkpoint& c) {
    ++calls;
    last = c.step;
  }) == TrainStatus::ok);
  CHECK(calls == 4);
  CHECK(last == 20);
}
