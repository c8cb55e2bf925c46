// lsa: command-line driver for the local-slot-attention navigation stack.
//
// Every subcommand reads an optional "key = value" config file, applies flag
// overrides, writes its resolved configuration next to its outputs, and is
// byte-reproducible per (config, seed).

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "lsa/grad_check.hpp"
#include "lsa/io.hpp"
#include "lsa/model.hpp"
#include "lsa/run_config.hpp"
#include "lsa/trainer.hpp"

namespace fs = std::filesystem;
using namespace lsa;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::string checkpoint;
  std::int64_t seed = -1;  // -1: keep config value
  bool teacher = false;
  bool literal_alg1 = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_checkpoint = false,
                bool with_teacher = false) {
  cmd->add_option("--config", o.config_path, "run configuration file");
  cmd->add_option("--seed", o.seed, "override the config seed");
  cmd->add_option("--out", o.out_dir,
                  "output directory (default: $LSA_OUT_DIR or ./lsa-out)");
  cmd->add_flag("--literal-alg1", o.literal_alg1,
                "use the algorithm-literal slot update");
  if (with_checkpoint)
    cmd->add_option("--checkpoint", o.checkpoint, "checkpoint file to load");
  if (with_teacher)
    cmd->add_flag("--teacher", o.teacher, "follow the oracle teacher policy");
}

RunConfig resolve_config(const CommonOpts& o) {
  RunConfig cfg = o.config_path.empty() ? RunConfig{}
                                        : RunConfig::parse_file(o.config_path);
  if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
  if (o.literal_alg1) cfg.model.literal_alg1 = true;
  if (!o.out_dir.empty()) {
    cfg.out_dir = o.out_dir;
  } else if (cfg.out_dir.empty()) {
    const char* env = std::getenv("LSA_OUT_DIR");
    cfg.out_dir = env ? env : "lsa-out";
  }
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  return cfg;
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out_dir) / name).string();
}

void write_resolved(const RunConfig& cfg) {
  write_text_file(out_path(cfg, "resolved_config.txt"), cfg.to_text());
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string trajectory_text(const NavGraph& graph, const Episode& e,
                            const Trajectory& t) {
  std::ostringstream os;
  os << "episode start " << e.start << " goal " << e.goal << "\n";
  os << "visited";
  for (int n : t.visited) os << " " << n;
  os << "\n";
  for (const StepRecord& s : t.steps)
    os << "step node " << s.node << " action " << s.action << " reward "
       << fmt(s.reward) << "\n";
  os << "length " << fmt(t.length) << "\n";
  os << "terminated " << (t.terminated ? 1 : 0) << "\n";
  os << "ne " << fmt(navigation_error(graph, t.current(), e.goal)) << "\n";
  return os.str();
}

struct Experiment {
  NavGraph graph;
  FeatureSource features;
  std::vector<Episode> episodes;
};

Experiment build_experiment(const RunConfig& cfg) {
  Experiment ex;
  ex.graph = generate_synthetic_env(cfg.seed, cfg.n_nodes, cfg.connect_radius,
                                    cfg.box_size);
  ex.features = cfg.feature_source();
  ex.episodes = generate_episodes(ex.graph, cfg.seed, cfg.n_episodes);
  return ex;
}

struct TrainedRun {
  Model model;
  TrainResult train_result;
  MetricsReport metrics;
  double accuracy = 0.0;
};

TrainedRun train_and_evaluate(const RunConfig& cfg, const Experiment& ex) {
  TrainedRun run{make_model(cfg.model, cfg.seed), {}, {}, 0.0};
  run.train_result =
      train(run.model, ex.graph, ex.features, ex.episodes, cfg.train_config());
  run.accuracy = teacher_accuracy(run.model, ex.graph, ex.features, ex.episodes);
  run.metrics = evaluate_episodes(run.model, ex.graph, ex.features, ex.episodes);
  return run;
}

std::string loss_curve_csv(const std::vector<double>& curve) {
  std::ostringstream os;
  os << "step,loss\n";
  char buf[48];
  for (std::size_t i = 0; i < curve.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, curve[i]);
    os << buf;
  }
  return os.str();
}

// ---- subcommand bodies --------------------------------------------------

int cmd_gen_env(const CommonOpts& o) {
  RunConfig cfg = resolve_config(o);
  Experiment ex = build_experiment(cfg);
  write_graph(out_path(cfg, "graph.txt"), ex.graph);
  write_episodes(out_path(cfg, "episodes.txt"), ex.episodes);
  write_resolved(cfg);
  std::cout << "wrote " << out_path(cfg, "graph.txt") << " ("
            << ex.graph.n_nodes() << " nodes) and "
            << out_path(cfg, "episodes.txt") << " (" << ex.episodes.size()
            << " episodes)\n";
  return 0;
}

int cmd_gradcheck(const CommonOpts& o) {
  RunConfig cfg = resolve_config(o);
  // Toy dimensions keep finite differences fast and well conditioned.
  ModelConfig mc = cfg.model;
  mc.dims = FeatureDims{8, 4};
  mc.d_h = 8;
  mc.dropout_p = 0.0;
  mc.slot_iterations = 3;

  const double tol = 1e-4;
  bool ok = true;
  std::ostringstream csv;
  csv << "block,max_rel_error,pass\n";

  auto report = [&](const std::string& name, const GradCheckReport& r) {
    const bool pass = r.max_rel_error <= tol;
    ok = ok && pass;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3e", r.max_rel_error);
    std::cout << name << " max_rel_error " << buf << " "
              << (pass ? "PASS" : "FAIL") << "\n";
    csv << name << "," << buf << "," << (pass ? 1 : 0) << "\n";
  };

  // Shared toy scene: one observation of the synthetic environment.
  RunConfig env_cfg = cfg;
  env_cfg.n_nodes = 6;
  env_cfg.model = mc;
  Experiment ex = build_experiment(env_cfg);
  Observation obs = observe(ex.graph, 0, 0.0, ex.features);
  const std::size_t n_cand = obs.candidates.size();

  {  // slot attention alone
    Model m = make_model(mc, cfg.seed);
    MaskMatrix mask = build_mask(obs.candidates, mc.mask);
    Tensor d_out = Tensor::zeros(n_cand, mc.dims.d_view());
    RngStream probe(3);
    for (std::size_t i = 0; i < d_out.size(); ++i)
      d_out[i] = probe.uniform(-1.0, 1.0);
    auto params = m.slot.all();
    auto forward = [&](SlotAttnCache* cache) {
      RngStream rng(11);
      return slot_attention_forward(obs.grid, obs.candidates, mask, m.slot, rng,
                                    true, cache);
    };
    auto loss_of = [&](const Tensor& out) {
      double l = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) l += out[i] * d_out[i];
      return l;
    };
    report("slot_attention",
           grad_check(
               params,
               [&] {
                 m.slot.zero_grads();
                 SlotAttnCache cache;
                 Tensor out = forward(&cache);
                 slot_attention_backward(cache, mask, m.slot, d_out);
                 return loss_of(out);
               },
               [&] { return loss_of(forward(nullptr)); }));
  }

  {  // decoder alone
    Model m = make_model(mc, cfg.seed);
    Episode e = ex.episodes.front();
    InstructionEmbedding ins = make_instruction(e, ex.features, mc.d_h);
    Tensor cand = stack_candidates(obs.candidates);
    Tensor d_scores = Tensor::zeros(1, n_cand);
    Tensor d_state = Tensor::zeros(1, mc.d_h);
    RngStream probe(5);
    for (std::size_t i = 0; i < d_scores.size(); ++i)
      d_scores[i] = probe.uniform(-1.0, 1.0);
    for (std::size_t i = 0; i < d_state.size(); ++i)
      d_state[i] = probe.uniform(-1.0, 1.0);
    auto params = m.dec.all();
    auto loss_of = [&](const DecoderStepResult& r) {
      double l = 0.0;
      for (std::size_t i = 0; i < r.scores.size(); ++i)
        l += r.scores[i] * d_scores[i];
      for (std::size_t i = 0; i < r.next_state.size(); ++i)
        l += r.next_state[i] * d_state[i];
      return l;
    };
    report("decoder",
           grad_check(
               params,
               [&] {
                 m.dec.zero_grads();
                 DecoderStepCache cache;
                 DecoderStepResult r =
                     decoder_step(ins.cls, cand, ins.tokens, m.dec, &cache);
                 decoder_step_backward(cache, m.dec, d_scores, d_state, nullptr,
                                       nullptr);
                 return loss_of(r);
               },
               [&] {
                 return loss_of(decoder_step(ins.cls, cand, ins.tokens, m.dec));
               }));
  }

  {  // composed stack through a full teacher-forced episode
    Model m = make_model(mc, cfg.seed);
    Episode e = ex.episodes.front();
    auto params = m.all_params();
    auto loss_only = [&] {
      RngStream rng(21);
      return episode_loss_and_grad(m, ex.graph, ex.features, e, rng, false)
          .first;
    };
    report("composed_episode", grad_check(
                                   params,
                                   [&] {
                                     m.zero_grads();
                                     RngStream rng(21);
                                     return episode_loss_and_grad(
                                                m, ex.graph, ex.features, e,
                                                rng, true)
                                         .first;
                                   },
                                   loss_only));
  }

  write_text_file(out_path(cfg, "gradcheck.csv"), csv.str());
  write_resolved(cfg);
  std::cout << (ok ? "gradcheck PASS" : "gradcheck FAIL") << "\n";
  return ok ? 0 : 1;
}

int cmd_run_episode(const CommonOpts& o) {
  RunConfig cfg = resolve_config(o);
  Experiment ex = build_experiment(cfg);
  Model m = make_model(cfg.model, cfg.seed);
  if (!o.checkpoint.empty()) read_checkpoint(o.checkpoint, m);

  RolloutOptions opts;
  opts.teacher_policy = o.teacher;
  MetricsReport report =
      evaluate_episodes(m, ex.graph, ex.features, ex.episodes, opts);

  const Episode& first = ex.episodes.front();
  RolloutResult rr = rollout_episode(m, ex.graph, ex.features, first, opts);
  write_text_file(out_path(cfg, "trajectory.txt"),
                  trajectory_text(ex.graph, first, rr.trajectory));
  write_text_file(out_path(cfg, "metrics.txt"), report.text());
  write_text_file(out_path(cfg, "metrics.csv"),
                  report.csv_header() + "\n" + report.csv_row() + "\n");
  write_resolved(cfg);
  std::cout << report.text();
  return 0;
}

int cmd_train_toy(const CommonOpts& o) {
  RunConfig cfg = resolve_config(o);
  Experiment ex = build_experiment(cfg);
  TrainedRun run = train_and_evaluate(cfg, ex);

  write_checkpoint(out_path(cfg, "checkpoint.bin"), run.model, cfg.train_steps);
  write_text_file(out_path(cfg, "loss_curve.csv"),
                  loss_curve_csv(run.train_result.loss_curve));
  write_text_file(out_path(cfg, "metrics.txt"), run.metrics.text());
  write_text_file(out_path(cfg, "metrics.csv"),
                  run.metrics.csv_header() + "\n" + run.metrics.csv_row() + "\n");
  write_resolved(cfg);
  std::cout << "final_loss " << fmt(run.train_result.final_loss)
            << "\nteacher_accuracy " << fmt(run.accuracy) << "\n"
            << run.metrics.text();
  return 0;
}

int cmd_ablate_mask(const CommonOpts& o) {
  RunConfig cfg = resolve_config(o);
  Experiment ex = build_experiment(cfg);
  std::ostringstream csv;
  csv << "mask,n_episodes,ne,sr,osr,spl,tl,final_loss,teacher_accuracy\n";
  for (const MaskShape& shape : ablation_mask_shapes()) {
    RunConfig row_cfg = cfg;
    row_cfg.model.mask = shape;
    TrainedRun run = train_and_evaluate(row_cfg, ex);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f", run.train_result.final_loss,
                  run.accuracy);
    csv << shape.label() << "," << run.metrics.csv_row() << "," << buf << "\n";
    std::cout << "mask " << shape.label() << " sr " << fmt(run.metrics.sr)
              << " accuracy " << fmt(run.accuracy) << "\n";
  }
  write_text_file(out_path(cfg, "ablate_mask.csv"), csv.str());
  write_resolved(cfg);
  std::cout << "wrote " << out_path(cfg, "ablate_mask.csv") << "\n";
  return 0;
}

int cmd_ablate_iters(const CommonOpts& o) {
  RunConfig cfg = resolve_config(o);
  Experiment ex = build_experiment(cfg);
  std::ostringstream csv;
  csv << "iterations,n_episodes,ne,sr,osr,spl,tl,final_loss,teacher_accuracy\n";

  auto emit = [&](const std::string& label, const RunConfig& row_cfg) {
    TrainedRun run = train_and_evaluate(row_cfg, ex);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f", run.train_result.final_loss,
                  run.accuracy);
    csv << label << "," << run.metrics.csv_row() << "," << buf << "\n";
    std::cout << "iterations " << label << " sr " << fmt(run.metrics.sr)
              << " accuracy " << fmt(run.accuracy) << "\n";
  };

  for (std::size_t t = 0; t <= 4; ++t) {
    RunConfig row_cfg = cfg;
    row_cfg.model.slot_iterations = t;
    emit(std::to_string(t), row_cfg);
  }
  // Reference row: slot attention removed entirely. The T=0 row must match it
  // exactly (zero iterations degenerate to the identity).
  RunConfig base_cfg = cfg;
  base_cfg.model.use_slot_attention = false;
  emit("baseline", base_cfg);

  write_text_file(out_path(cfg, "ablate_iters.csv"), csv.str());
  write_resolved(cfg);
  std::cout << "wrote " << out_path(cfg, "ablate_iters.csv") << "\n";
  return 0;
}

int cmd_mask_dump(const CommonOpts& o) {
  RunConfig cfg = resolve_config(o);
  Experiment ex = build_experiment(cfg);
  Observation obs = observe(ex.graph, 0, 0.0, ex.features);
  MaskMatrix mask = build_mask(obs.candidates, cfg.model.mask);
  write_text_file(out_path(cfg, "mask.txt"), mask_to_text(mask));
  write_text_file(out_path(cfg, "mask.csv"), mask_to_csv(mask));
  write_resolved(cfg);
  std::cout << mask_to_text(mask);
  return 0;
}

int cmd_attn_dump(const CommonOpts& o) {
  RunConfig cfg = resolve_config(o);
  Experiment ex = build_experiment(cfg);
  Model m = make_model(cfg.model, cfg.seed);
  if (!o.checkpoint.empty()) read_checkpoint(o.checkpoint, m);

  const Episode& e = ex.episodes.front();
  InstructionEmbedding ins = make_instruction(e, ex.features, cfg.model.d_h);
  Observation obs = observe(ex.graph, e.start, 0.0, ex.features);
  RngStream rng(cfg.seed);
  ModelStepOutput out = model_step(m, obs, ins.cls, ins.tokens, rng, false);
  write_text_file(out_path(cfg, "attn.txt"), trace_to_text(out.trace));
  write_text_file(out_path(cfg, "attn.csv"), trace_to_csv(out.trace));
  write_resolved(cfg);
  std::cout << "wrote " << out_path(cfg, "attn.csv") << " ("
            << out.trace.attn.size() << " iterations, "
            << obs.candidates.size() << " slots)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"local slot attention navigation toolkit"};
  app.require_subcommand(1);

  CommonOpts gen_o, grad_o, run_o, train_o, amask_o, aiter_o, mask_o, attn_o;
  auto* gen = app.add_subcommand("gen-env", "generate a synthetic environment");
  add_common(gen, gen_o);
  auto* grad = app.add_subcommand("gradcheck", "finite-difference gradient check");
  add_common(grad, grad_o);
  auto* runep = app.add_subcommand("run-episode", "roll out episodes and report metrics");
  add_common(runep, run_o, true, true);
  auto* traintoy = app.add_subcommand("train-toy", "imitation-train on the synthetic environment");
  add_common(traintoy, train_o);
  auto* amask = app.add_subcommand("ablate-mask", "sweep the local mask shapes");
  add_common(amask, amask_o);
  auto* aiter = app.add_subcommand("ablate-iters", "sweep slot-attention iteration counts");
  add_common(aiter, aiter_o);
  auto* maskd = app.add_subcommand("mask-dump", "dump the attention mask matrix");
  add_common(maskd, mask_o);
  auto* attnd = app.add_subcommand("attn-dump", "dump one step's attention trace");
  add_common(attnd, attn_o, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_env(gen_o);
    if (grad->parsed()) return cmd_gradcheck(grad_o);
    if (runep->parsed()) return cmd_run_episode(run_o);
    if (traintoy->parsed()) return cmd_train_toy(train_o);
    if (amask->parsed()) return cmd_ablate_mask(amask_o);
    if (aiter->parsed()) return cmd_ablate_iters(aiter_o);
    if (maskd->parsed()) return cmd_mask_dump(mask_o);
    if (attnd->parsed()) return cmd_attn_dump(attn_o);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 1;
}
