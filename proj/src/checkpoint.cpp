// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ogdm/checkpoint.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "config_json.hpp"
#include "ogdm/data.hpp"

namespace ogdm {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw CheckpointError("checkpoint: " + msg); }

json doubles_to_json(std::span<const double> xs) {
  json a = json::array();
  for (double x : xs) a.push_back(format_exact(x));
  return a;
}

double parse_double(const json& v) {
  if (!v.is_string()) fail("numeric arrays must hold decimal strings");
  const std::string s = v.get<std::string>();
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') fail("bad number '" + s + "'");
  return x;
}

std::vector<double> doubles_from_json(const json& v) {
  if (!v.is_array()) fail("expected an array of decimal strings");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) out.push_back(parse_double(e));
  return out;
}

const json& field(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) fail(std::string("missing field '") + key + "'");
  return obj.at(key);
}

json spec_to_json(const MlpSpec& s) {
  json j;
  j["input_dim"] = s.input_dim;
  j["hidden_dims"] = s.hidden_dims;
  j["output_dim"] = s.output_dim;
  j["activation"] = std::string(to_string(s.activation));
  j["time_embed_dim"] = s.time_embed_dim;
  j["lookahead_embed"] = s.lookahead_embed;
  return j;
}

MlpSpec spec_from_json(const json& j) {
  MlpSpec s;
  try {
    s.input_dim = field(j, "input_dim").get<int>();
    s.hidden_dims = field(j, "hidden_dims").get<std::vector<int>>();
    s.output_dim = field(j, "output_dim").get<int>();
    s.activation = parse_activation(field(j, "activation").get<std::string>());
    s.time_embed_dim = field(j, "time_embed_dim").get<int>();
    s.lookahead_embed = field(j, "lookahead_embed").get<bool>();
    s.validate();
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    fail(std::string("bad network spec: ") + e.what());
  }
  return s;
}

json network_to_json(const Network& n) {
  json j;
  j["spec"] = spec_to_json(n.spec);
  json layout = json::array();
  for (const auto& e : n.params.layout) layout.push_back({{"name", e.name}, {"shape", e.shape}});
  j["layout"] = layout;
  j["version"] = n.params.version;
  j["values"] = doubles_to_json(n.params.values);
  return j;
}

Network network_from_json(const json& j) {
  Network n;
  n.spec = spec_from_json(field(j, "spec"));
  const json& layout = field(j, "layout");
  if (!layout.is_array()) fail("layout must be an array");
  try {
    for (const auto& e : layout) {
      n.params.layout.push_back({field(e, "name").get<std::string>(), field(e, "shape").get<std::vector<std::size_t>>()});
    }
    n.params.version = field(j, "version").get<std::string>();
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    fail(std::string("bad layout: ") + e.what());
  }
  if (n.params.version != ParamStore::kVersion) fail("parameter store version mismatch: " + n.params.version);
  n.params.values = doubles_from_json(field(j, "values"));
  try {
    n.params.validate();
  } catch (const std::exception& e) {
    fail(std::string("layout inconsistent with values: ") + e.what());
  }
  if (n.params.layout != mlp_layout(n.spec).layout) fail("layout does not match the network spec");
  return n;
}

json adam_to_json(const AdamState& s) {
  return {{"m", doubles_to_json(s.m)}, {"v", doubles_to_json(s.v)}, {"step", s.step}};
}

AdamState adam_from_json(const json& j, std::size_t expected) {
  AdamState s;
  s.m = doubles_from_json(field(j, "m"));
  s.v = doubles_from_json(field(j, "v"));
  const json& step = field(j, "step");
  if (!step.is_number_integer()) fail("optimizer step must be an integer");
  s.step = step.get<std::int64_t>();
  if (s.m.size() != expected || s.v.size() != expected) fail("optimizer state size does not match parameters");
  return s;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& c) {
  json j;
  j["version"] = c.version;
  j["schedule"] = {{"T", c.schedule.steps()},
                   {"beta_min", format_exact(c.schedule.beta_min())},
                   {"beta_max", format_exact(c.schedule.beta_max())},
                   {"betas", doubles_to_json(std::span(c.schedule.betas()).subspan(1))}};
  j["denoiser"] = network_to_json(c.denoiser);
  j["discriminator"] = c.discriminator ? network_to_json(*c.discriminator) : json(nullptr);
  j["opt_theta"] = adam_to_json(c.opt_theta);
  j["opt_phi"] = c.opt_phi ? adam_to_json(*c.opt_phi) : json(nullptr);
  j["train_config"] = detail::config_to_json(c.config);
  j["rng_state"] = {{"batch", c.rng_batch}, {"aux", c.rng_aux}, {"disc", c.rng_disc}};
  j["step"] = c.step;
  return j.dump(1) + "\n";
}

Checkpoint parse_checkpoint(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail("malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!j.is_object()) fail("top level must be an object");
  Checkpoint c;
  const json& version = field(j, "version");
  if (!version.is_string() || version.get<std::string>() != Checkpoint::kVersion) {
    fail("version mismatch: expected " + std::string(Checkpoint::kVersion) + ", found " + version.dump());
  }

  const json& sched = field(j, "schedule");
  const std::vector<double> betas = doubles_from_json(field(sched, "betas"));
  const json& t = field(sched, "T");
  if (!t.is_number_integer() || t.get<std::int64_t>() != static_cast<std::int64_t>(betas.size())) {
    fail("schedule T does not match the beta count");
  }
  try {
    c.schedule = NoiseSchedule::from_betas(betas);
  } catch (const std::exception& e) {
    fail(std::string("bad schedule: ") + e.what());
  }

  c.denoiser = network_from_json(field(j, "denoiser"));
  const json& disc = field(j, "discriminator");
  if (!disc.is_null()) c.discriminator = network_from_json(disc);
  c.opt_theta = adam_from_json(field(j, "opt_theta"), c.denoiser.params.size());
  const json& opt_phi = field(j, "opt_phi");
  if (!opt_phi.is_null()) {
    if (!c.discriminator) fail("optimizer state for a missing discriminator");
    c.opt_phi = adam_from_json(opt_phi, c.discriminator->params.size());
  }

  try {
    c.config = detail::config_from_json(field(j, "train_config"));
  } catch (const ConfigError& e) {
    fail(e.what());
  }
  const json& rng = field(j, "rng_state");
  try {
    c.rng_batch = field(rng, "batch").get<std::string>();
    c.rng_aux = field(rng, "aux").get<std::string>();
    c.rng_disc = field(rng, "disc").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("bad rng_state: ") + e.what());
  }
  const json& step = field(j, "step");
  if (!step.is_number_integer()) fail("step must be an integer");
  c.step = step.get<std::int64_t>();
  return c;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  const std::string text = serialize_checkpoint(c);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) fail("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace ogdm
