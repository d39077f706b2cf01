// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Exit codes: 0 success, 1 runtime failure,
// 2 invalid arguments or inputs.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ogdm/checkpoint.hpp"
#include "ogdm/data.hpp"
#include "ogdm/gradcheck.hpp"
#include "ogdm/metrics.hpp"
#include "ogdm/reverse_density.hpp"
#include "ogdm/samplers.hpp"
#include "ogdm/training.hpp"

namespace {

using namespace ogdm;

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
  if (!out.flush()) throw std::runtime_error("write failed for " + path);
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !(is >> std::ws).eof()) throw UsageError(std::string("bad value in ") + what + ": '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(std::string(what) + " must not be empty");
  return out;
}

// ---- train ----

struct TrainArgs {
  std::string config;
  std::string finetune_from;
  std::string out;
  std::string curves;
};

int cmd_train(const TrainArgs& a) {
  TrainConfig cfg = load_train_config(a.config);
  if (!a.finetune_from.empty()) cfg.finetune_from = a.finetune_from;
  Trainer trainer = cfg.finetune_from ? Trainer::finetune(cfg, load_checkpoint(*cfg.finetune_from))
                                      : Trainer::fresh(cfg);
  const TrainStatus status = trainer.run([&](const Checkpoint& c) { save_checkpoint(c, a.out); });
  save_checkpoint(trainer.checkpoint(), a.out);
  if (!a.curves.empty()) write_text(a.curves, curves_csv(trainer.curves()));
  if (status != TrainStatus::ok) {
    std::cerr << "error: non-finite loss at iteration " << trainer.iteration()
              << "; last good state saved to " << a.out << "\n";
    return 1;
  }
  const auto& rows = trainer.curves();
  std::cout << "iterations=" << trainer.iteration();
  if (!rows.empty()) std::cout << " final_transition_loss=" << format_exact(rows.back().transition_loss);
  std::cout << "\n";
  return 0;
}

// ---- sample ----

struct SampleArgs {
  std::string ckpt;
  std::string sampler = "euler";
  int nfe = 10;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::string grid = "linear";
  std::string out;
};

int cmd_sample(const SampleArgs& a) {
  const SamplerKind kind = parse_sampler(a.sampler);
  const GridSpacing spacing = parse_grid_spacing(a.grid);
  const Checkpoint c = load_checkpoint(a.ckpt);
  const SampleSet s = generate_samples(c.denoiser, c.schedule, kind, a.nfe, a.n, a.seed, spacing);
  write_csv(a.out, s.points);
  std::cout << "sampler=" << s.sampler << " nfe=" << s.nfe << " n=" << s.points.rows() << "\n";
  return 0;
}

// ---- eval ----

struct EvalArgs {
  std::string ref;
  std::string gen;
  std::size_t max_points = 4000;
  std::uint64_t seed = 0;
};

int cmd_eval(const EvalArgs& a) {
  const Matrix ref = read_csv(a.ref);
  const Matrix gen = read_csv(a.gen);
  const double d = energy_distance(ref, gen, {a.max_points, a.seed});
  std::cout << "energy_distance=" << format_exact(d) << "\n";
  return 0;
}

// ---- analyze-xi ----

struct XiArgs {
  double mu = 2.0;
  std::string v = "0.1";
  double beta_start = 0.05;
  double beta_end = 0.95;
  double beta_step = 0.05;
  std::size_t grid_n = 4001;
  std::string out;
};

std::vector<double> beta_sweep(double start, double end, double step) {
  if (!(step > 0.0) || !(end >= start)) throw UsageError("beta sweep needs step > 0 and end >= start");
  const auto count = static_cast<long>(std::floor((end - start) / step + 1e-9)) + 1;
  std::vector<double> out;
  for (long i = 0; i < count; ++i) {
    const double b = std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12;
    if (!(b > 0.0 && b < 1.0)) throw UsageError("beta values must lie in (0, 1)");
    out.push_back(b);
  }
  return out;
}

int cmd_analyze_xi(const XiArgs& a) {
  const Mixture1D m{a.mu};
  const QuadGrid grid = QuadGrid::for_mixture(m, a.grid_n);
  const auto vs = parse_list<double>(a.v, "--v");
  const auto betas = beta_sweep(a.beta_start, a.beta_end, a.beta_step);
  std::string csv = "beta,v,xi,l2_xi,l2_0,l2_1\n";
  for (double v : vs) {
    for (double beta : betas) {
      const XiCurvePoint p = xi_of_beta(m, v, beta, grid);
      csv += format_exact(p.beta) + "," + format_exact(p.v) + "," + format_exact(p.xi) + "," +
             format_exact(p.l2_at_xi) + "," + format_exact(p.l2_at_0) + "," + format_exact(p.l2_at_1) + "\n";
    }
  }
  if (a.out.empty()) std::cout << csv;
  else write_text(a.out, csv);
  return 0;
}

// ---- lemma1 ----

struct Lemma1Args {
  double mu = 2.0;
  double v = 0.1;
  std::string betas = "0.999,0.99,0.9,0.8,0.4,0.2,0.1,0.05,0.025";
  std::size_t grid_n = 4001;
  std::string out;
};

int cmd_lemma1(const Lemma1Args& a) {
  const Mixture1D m{a.mu};
  const QuadGrid grid = QuadGrid::for_mixture(m, a.grid_n);
  const auto betas = parse_list<double>(a.betas, "--betas");
  std::string csv = "beta,l2_gaussian,l2_mixture\n";
  for (const auto& r : lemma1_endpoint_study(m, a.v, betas, grid)) {
    csv += format_exact(r.beta) + "," + format_exact(r.l2_gaussian) + "," + format_exact(r.l2_mixture) + "\n";
  }
  if (a.out.empty()) std::cout << csv;
  else write_text(a.out, csv);
  return 0;
}

// ---- gradcheck ----

struct GradArgs {
  std::uint64_t seed = 0;
  int trials = 20;
};

int cmd_gradcheck(const GradArgs& a) {
  const GradCheckReport r = run_gradient_checks(a.seed, a.trials);
  std::cout << "trials=" << r.trials << "\n"
            << "transition_loss max_rel_error=" << format_exact(r.transition) << "\n"
            << "generator_objective max_rel_error=" << format_exact(r.generator) << "\n"
            << "discriminator_objective max_rel_error=" << format_exact(r.discriminator) << "\n";
  return 0;
}

// ---- solver-order ----

struct OrderArgs {
  std::string ns = "8,16,32,64,128";
  std::string out;
};

int cmd_solver_order(const OrderArgs& a) {
  const auto ns = parse_list<int>(a.ns, "--ns");
  const auto rows = solver_order_study(ns);
  std::string csv = "n,euler_error,heun_error\n";
  std::vector<double> n, e, h;
  for (const auto& r : rows) {
    csv += std::to_string(r.n) + "," + format_exact(r.euler_error) + "," + format_exact(r.heun_error) + "\n";
    n.push_back(r.n);
    e.push_back(r.euler_error);
    h.push_back(r.heun_error);
  }
  if (!a.out.empty()) write_text(a.out, csv);
  if (rows.size() >= 2) {
    std::cout << "euler_order=" << format_exact(convergence_order(n, e)) << "\n"
              << "heun_order=" << format_exact(convergence_order(n, h)) << "\n";
  }
  return 0;
}

// ---- nfe-consistency ----

struct ConsistArgs {
  std::string ckpt;
  std::string sampler = "euler";
  std::string nfes = "5,10,20,50";
  int seeds = 5;
  std::uint64_t seed = 0;
  std::size_t chains = 512;
  std::string grid = "linear";
  std::string out;
};

int cmd_nfe_consistency(const ConsistArgs& a) {
  const ProjectionMethod method = parse_projection(a.sampler);
  const auto nfes = parse_list<int>(a.nfes, "--nfes");
  if (nfes.size() < 2) throw UsageError("--nfes needs at least two values");
  if (a.seeds < 1) throw UsageError("--seeds must be >= 1");
  const Checkpoint c = load_checkpoint(a.ckpt);
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(a.seeds));
  std::iota(seeds.begin(), seeds.end(), a.seed);
  const auto values =
      network_nfe_consistency(c.denoiser, c.schedule, method, nfes, seeds, a.chains, parse_grid_spacing(a.grid));
  std::string csv = "seed,consistency\n";
  for (std::size_t i = 0; i < seeds.size(); ++i) csv += std::to_string(seeds[i]) + "," + format_exact(values[i]) + "\n";
  if (!a.out.empty()) write_text(a.out, csv);
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  std::cout << "nfe_consistency=" << format_exact(mean) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Observation-guided diffusion on toy data"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train or fine-tune a denoiser");
  t->add_option("--config", train.config, "JSON training config")->required();
  t->add_option("--finetune-from", train.finetune_from, "Base checkpoint");
  t->add_option("--out", train.out, "Checkpoint path")->required();
  t->add_option("--curves", train.curves, "Loss curve CSV");

  SampleArgs sample;
  auto* s = app.add_subcommand("sample", "Draw samples from a checkpoint");
  s->add_option("--ckpt", sample.ckpt)->required();
  s->add_option("--sampler", sample.sampler, "euler, heun or ancestral");
  s->add_option("--nfe", sample.nfe)->check(CLI::PositiveNumber);
  s->add_option("--n", sample.n)->check(CLI::PositiveNumber);
  s->add_option("--seed", sample.seed);
  s->add_option("--grid", sample.grid, "linear or quadratic");
  s->add_option("--out", sample.out)->required();

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Energy distance between two CSV sample sets");
  e->add_option("--ref", eval.ref)->required();
  e->add_option("--gen", eval.gen)->required();
  e->add_option("--max-points", eval.max_points, "Subsample above this many points (0: never)");
  e->add_option("--seed", eval.seed);

  XiArgs xi;
  auto* x = app.add_subcommand("analyze-xi", "Sweep the optimal geometric-mean weight over beta");
  x->add_option("--mu", xi.mu)->check(CLI::PositiveNumber);
  x->add_option("--v", xi.v, "Comma-separated observation values");
  x->add_option("--beta-start", xi.beta_start);
  x->add_option("--beta-end", xi.beta_end);
  x->add_option("--beta-step", xi.beta_step);
  x->add_option("--grid-n", xi.grid_n);
  x->add_option("--out", xi.out);

  Lemma1Args lemma;
  auto* l = app.add_subcommand("lemma1", "Distances of the reverse density to its two limits");
  l->add_option("--mu", lemma.mu)->check(CLI::PositiveNumber);
  l->add_option("--v", lemma.v);
  l->add_option("--betas", lemma.betas);
  l->add_option("--grid-n", lemma.grid_n);
  l->add_option("--out", lemma.out);

  GradArgs grad;
  auto* g = app.add_subcommand("gradcheck", "Finite-difference checks of every objective");
  g->add_option("--seed", grad.seed);
  g->add_option("--trials", grad.trials)->check(CLI::PositiveNumber);

  OrderArgs order;
  auto* o = app.add_subcommand("solver-order", "Convergence orders of Euler and Heun");
  o->add_option("--ns", order.ns);
  o->add_option("--out", order.out);

  ConsistArgs consist;
  auto* c = app.add_subcommand("nfe-consistency", "Endpoint spread across step counts from shared noise");
  c->add_option("--ckpt", consist.ckpt)->required();
  c->add_option("--sampler", consist.sampler, "euler or heun");
  c->add_option("--nfes", consist.nfes);
  c->add_option("--seeds", consist.seeds);
  c->add_option("--seed", consist.seed, "First seed");
  c->add_option("--chains", consist.chains)->check(CLI::PositiveNumber);
  c->add_option("--grid", consist.grid);
  c->add_option("--out", consist.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return 2;
  }

  try {
    if (*t) return cmd_train(train);
    if (*s) return cmd_sample(sample);
    if (*e) return cmd_eval(eval);
    if (*x) return cmd_analyze_xi(xi);
    if (*l) return cmd_lemma1(lemma);
    if (*g) return cmd_gradcheck(grad);
    if (*o) return cmd_solver_order(order);
    if (*c) return cmd_nfe_consistency(consist);
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const CheckpointError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const DensityError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 2;
}
