// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// csgflow command-line driver.
//
// Subcommands: gen-data, train, eval, decompose, schedule, grad-check.
// Exit codes: 0 success, 1 runtime error, 2 usage error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "csg/config.hpp"
#include "csg/error.hpp"
#include "csg/eval.hpp"
#include "csg/frequency.hpp"
#include "csg/gradsuite.hpp"
#include "csg/image_io.hpp"
#include "csg/losses.hpp"
#include "csg/schedule.hpp"
#include "csg/trainer.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonConfigArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  bool seed_given = false;
  uint64_t seed = 0;
};

csg::RunConfig resolve_config(const CommonConfigArgs& args) {
  csg::RunConfig cfg = args.config_path.empty() ? csg::default_run_config()
                                                : csg::load_run_config(args.config_path);
  for (const std::string& kv : args.overrides) {
    size_t eq = kv.find('=');
    csg::check(eq != std::string::npos, "config: --set expects section.key=value, got " + kv);
    csg::apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  // Seed priority: --seed flag > config file > CSGF_SEED env > default.
  if (args.seed_given) {
    cfg.train.seed = args.seed;
  } else if (!cfg.seed_in_file) {
    if (const char* env = std::getenv("CSGF_SEED")) {
      cfg.train.seed = std::strtoull(env, nullptr, 10);
    }
  }
  return cfg;
}

std::vector<csg::FourTuple> resolve_dataset(const csg::RunConfig& cfg) {
  if (!cfg.data_dir.empty()) return csg::load_dataset(cfg.data_dir);
  return csg::gen_dataset(cfg.data);
}

int cmd_gen_data(const std::string& out_dir, const csg::DatasetConfig& dcfg) {
  auto tuples = csg::gen_dataset(dcfg);
  csg::save_dataset(tuples, out_dir);
  std::cout << "wrote " << tuples.size() << " tuples to " << out_dir << "\n";
  return 0;
}

int cmd_train(const CommonConfigArgs& args, const std::string& out_dir,
              const std::string& resume_path) {
  csg::RunConfig cfg = resolve_config(args);
  cfg.train.validate();
  fs::create_directories(out_dir);
  {
    std::ofstream resolved(fs::path(out_dir) / "config.resolved");
    csg::check(resolved.good(), "train: cannot write config.resolved");
    resolved << csg::serialize_run_config(cfg);
  }
  auto dataset = resolve_dataset(cfg);
  std::optional<csg::TrainState> resume;
  if (!resume_path.empty()) resume = csg::load_checkpoint(resume_path);
  csg::TrainState final_state = csg::run(cfg.train, dataset, out_dir, std::move(resume));
  std::cout << "finished at step " << final_state.step << "; metrics in " << out_dir
            << "/metrics.jsonl\n";
  return 0;
}

int cmd_eval(const CommonConfigArgs& args, const std::string& ckpt, const std::string& out_path,
             int steps_override, const std::string& dump_dir) {
  csg::RunConfig cfg = resolve_config(args);
  csg::TrainState state = csg::load_checkpoint(ckpt);
  csg::DatasetConfig dcfg = cfg.data;
  dcfg.n = cfg.eval.n;
  dcfg.seed = cfg.eval.seed;
  auto tuples = csg::gen_dataset(dcfg);
  int steps = steps_override > 0 ? steps_override : cfg.eval.steps;
  csg::EvalReport report = csg::evaluate(state.params, tuples, steps, cfg.train.cond_mode);
  {
    std::ofstream out(out_path);
    csg::check(out.good(), "eval: cannot open " + out_path);
    out << csg::report_json(report) << "\n";
  }
  if (!dump_dir.empty()) {
    fs::create_directories(dump_dir);
    for (size_t i = 0; i < tuples.size(); ++i) {
      csg::ImageTensor img = csg::generate(state.params, tuples[i], steps, cfg.train.cond_mode);
      char name[32];
      std::snprintf(name, sizeof(name), "gen_%05zu.ppm", i);
      csg::save_ppm(img, (fs::path(dump_dir) / name).string());
    }
  }
  std::cout << "content_sim " << report.content_sim_mean << "  style_sim "
            << report.style_sim_mean << "  ffd "
            << (report.ffd_valid ? std::to_string(report.frechet_feature_distance)
                                 : std::string("n/a"))
            << "\n";
  return 0;
}

int cmd_decompose(const std::string& image_path, double tau, const std::string& out_dir) {
  csg::ImageTensor img = csg::load_ppm(image_path);
  fs::create_directories(out_dir);

  csg::ImageTensor low = csg::low_pass(img, tau);
  for (int c = 0; c < 3; ++c) {
    csg::save_pgm_signed(csg::slice_channels(low.tensor(), c, c + 1),
                         (fs::path(out_dir) / ("lowpass_c" + std::to_string(c) + ".pgm")).string());
  }
  csg::FrequencyConfig fcfg;
  csg::FrequencyPyramid pyr = csg::dog_decompose(csg::encode(img), fcfg);
  for (size_t k = 0; k < pyr.high_bands.size(); ++k) {
    for (int c = 0; c < 3; ++c) {
      std::string name = "band" + std::to_string(k) + "_c" + std::to_string(c) + ".pgm";
      csg::save_pgm_signed(csg::slice_channels(pyr.high_bands[k], c, c + 1),
                           (fs::path(out_dir) / name).string());
    }
  }
  for (int c = 0; c < 3; ++c) {
    csg::save_pgm_signed(csg::slice_channels(pyr.low_residual, c, c + 1),
                         (fs::path(out_dir) / ("residual_c" + std::to_string(c) + ".pgm")).string());
  }
  std::cout << "wrote low-pass and " << pyr.high_bands.size() << " band images to " << out_dir
            << "\n";
  return 0;
}

int cmd_schedule(int steps, int warmup) {
  if (warmup <= 0) warmup = csg::warmup_steps(0.6, steps);
  std::printf("%8s %10s %10s\n", "t", "sigma(t)", "w(t)");
  for (int i = 0; i <= 10; ++i) {
    double t = i / 10.0;
    std::printf("%8.2f %10.4f %10.4f\n", t, csg::Schedule::sigma(t), csg::Schedule::weight(t));
  }
  std::printf("\n%8s %6s %16s %14s\n", "s", "stage", "gamma_content(s)", "gamma_style(s)");
  csg::CorruptionConfig corr;
  for (int s = 0; s <= steps; ++s) {
    std::printf("%8d %6d %16.4f %14.4f\n", s, csg::stage_for_step(s, warmup),
                csg::decay_gamma(corr.gamma_content, s, warmup),
                csg::decay_gamma(corr.gamma_style, s, warmup));
  }
  return 0;
}

int cmd_grad_check() {
  auto cases = csg::run_grad_suite();
  for (const auto& c : cases) {
    std::printf("%-36s %.3e\n", c.name.c_str(), c.max_rel_err);
  }
  double worst = csg::grad_suite_worst(cases);
  std::printf("worst relative error: %.3e\n", worst);
  return worst < 1e-4 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"csgflow: staged flow-matching style-transfer training lab"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic four-tuple dataset");
  std::string gen_out;
  csg::DatasetConfig dcfg;
  std::string gen_holdout;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--n", dcfg.n, "number of tuples");
  gen->add_option("--styles", dcfg.num_styles, "number of styles");
  gen->add_option("--size", dcfg.size, "image size (even, >= 8)");
  gen->add_option("--seed", dcfg.seed, "base seed");
  gen->add_option("--holdout", gen_holdout, "comma-separated style ids to exclude");

  // train
  auto* train = app.add_subcommand("train", "run the staged training loop");
  CommonConfigArgs train_args;
  std::string train_out, train_resume;
  train->add_option("--config", train_args.config_path, "INI config file");
  train->add_option("--out", train_out, "output directory")->required();
  auto* train_seed =
      train->add_option("--seed", train_args.seed, "seed override (beats config and CSGF_SEED)");
  train->add_option("--resume", train_resume, "checkpoint to resume from");
  train->add_option("--set", train_args.overrides, "override config values (section.key=value)");

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on generated tuples");
  CommonConfigArgs eval_args;
  std::string eval_ckpt, eval_out, eval_dump;
  int eval_steps = 0;
  ev->add_option("--config", eval_args.config_path, "INI config file");
  ev->add_option("--ckpt", eval_ckpt, "checkpoint file")->required();
  ev->add_option("--out", eval_out, "report JSON path")->required();
  ev->add_option("--steps", eval_steps, "sampling steps (overrides config)");
  ev->add_option("--dump-dir", eval_dump, "write per-sample PPM images here");
  ev->add_option("--set", eval_args.overrides, "override config values (section.key=value)");

  // decompose
  auto* dec = app.add_subcommand("decompose", "dump low-pass and DoG bands of an image");
  std::string dec_image, dec_out;
  double dec_tau = 0.2;
  dec->add_option("--image", dec_image, "input PPM image")->required();
  dec->add_option("--tau", dec_tau, "low-pass cutoff in (0,1]");
  dec->add_option("--out", dec_out, "output directory")->required();

  // schedule
  auto* sch = app.add_subcommand("schedule", "print sigma(t), w(t), gamma(s) tables");
  int sch_steps = 10, sch_warmup = 0;
  sch->add_option("--steps", sch_steps, "total steps in the gamma table");
  sch->add_option("--warmup", sch_warmup, "warmup steps (default 0.6 * steps)");

  // grad-check
  app.add_subcommand("grad-check", "run the finite-difference gradient suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // help text, exit 0
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    std::cerr << "run with --help for usage\n";
    return 2;
  }

  try {
    if (gen->parsed()) {
      if (!gen_holdout.empty()) {
        std::stringstream ss(gen_holdout);
        std::string item;
        while (std::getline(ss, item, ',')) dcfg.holdout_styles.insert(std::stoi(item));
      }
      return cmd_gen_data(gen_out, dcfg);
    }
    if (train->parsed()) {
      train_args.seed_given = train_seed->count() > 0;
      return cmd_train(train_args, train_out, train_resume);
    }
    if (ev->parsed()) return cmd_eval(eval_args, eval_ckpt, eval_out, eval_steps, eval_dump);
    if (dec->parsed()) return cmd_decompose(dec_image, dec_tau, dec_out);
    if (sch->parsed()) return cmd_schedule(sch_steps, sch_warmup);
    if (app.get_subcommand("grad-check")->parsed()) return cmd_grad_check();
  } catch (const csg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
