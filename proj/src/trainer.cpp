// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "csg/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "csg/checkpoint.hpp"
#include "csg/error.hpp"
#include "csg/schedule.hpp"

namespace csg {

namespace {

namespace fs = std::filesystem;

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

struct SampleOutcome {
  LossBreakdown breakdown;
  Tensor pixel;
  Tensor total;
  RewardBundle rewards;
  double sigma_t = 0;
  Tensor sampled_image;  // decoded policy sample (detached), for the critic
  Tensor real_image;     // stage-consistent target image, for the critic
};

// Binary cross-entropy from a logit: -log(sigmoid(z)) for label 1,
// -log(1 - sigmoid(z)) for label 0, via softplus.
Tensor bce_with_logit(const Tensor& logit, double label) {
  Tensor z = label > 0.5 ? mul_scalar(logit, -1.0) : logit;
  return log(add_scalar(exp(z), 1.0));
}

SampleOutcome process_sample(const DenoiserParams& wp, const FourTuple& tuple,
                             const TrainConfig& cfg, int s, Rng& rng,
                             TimestepBaseline& baseline, const Discriminator* disc) {
  int s_warmup = cfg.s_warmup();
  int stage = stage_for_step(s, s_warmup);

  double t = Schedule::sample_timestep(rng);
  double sigma_t = Schedule::sigma(t);

  // Stage 1 trains against low-passed images; stage 2 removes the constraint.
  ImageTensor img_target = stage == 1 ? low_pass(tuple.img_gt, cfg.frequency.tau) : tuple.img_gt;
  ImageTensor img_content =
      stage == 1 ? low_pass(tuple.img_source, cfg.frequency.tau) : tuple.img_source;
  ImageTensor img_style = stage == 1 ? low_pass(tuple.img_ref, cfg.frequency.tau) : tuple.img_ref;

  Tensor z_target = encode(img_target).tensor();
  Tensor z_content = encode(img_content).tensor();
  Tensor z_style = encode(img_style).tensor();

  CorruptionConfig eff = cfg.corruption;
  eff.gamma_content = decay_gamma(cfg.corruption.gamma_content, s, s_warmup);
  eff.gamma_style = decay_gamma(cfg.corruption.gamma_style, s, s_warmup);
  CorruptedBatch cb = corrupt_batch(z_target, z_content, z_style, t, eff, rng);

  ConditionBundle cond;
  cond.mode = cfg.cond_mode;
  cond.z_content_t = cb.z_content_t;
  cond.t = t;
  if (cfg.cond_mode == CondMode::reference_guided) {
    cond.z_style_t = cb.z_style_t;
  } else {
    cond.style_class = tuple.style_id;
  }

  Tensor v_hat = predict_velocity(wp, cb.z_target_t, cond);
  Tensor z_hat = one_step_denoise(cb.z_target_t, v_hat, sigma_t);
  ImageTensor img_hat = decode(LatentTensor(z_hat));

  StageInputs inputs{v_hat,   z_target,   cb.eps_target, t,        z_hat,
                     img_hat, img_target, img_content,   img_style};
  SampleOutcome out{stage_loss(inputs, s, s_warmup, cfg.semantic, cfg.freq_loss, cfg.frequency),
                    Tensor(),
                    Tensor(),
                    RewardBundle{},
                    sigma_t,
                    Tensor(),
                    Tensor()};

  // Policy sample around the predicted velocity, then decode and score.
  Tensor eta = gaussian_noise(v_hat.shape(), rng);
  Tensor sampled = add(v_hat.detached(), mul_scalar(eta, cfg.pg_sigma));
  Tensor z0_sampled = one_step_denoise(cb.z_target_t.detached(), sampled, sigma_t);
  ImageTensor img_sampled = decode(LatentTensor(z0_sampled));
  out.rewards = compute_rewards(img_sampled, img_target, img_content, img_style, cfg.reward, disc);
  out.rewards.advantage = baseline.advantage(t, out.rewards.r_total);
  baseline.observe(t, out.rewards.r_total);

  out.pixel = pixel_loss(v_hat, sampled, out.rewards.advantage, cfg.pg_sigma);
  out.total = total_objective(out.breakdown.stage_total, out.pixel, cfg.lambda_pixel);
  out.sampled_image = img_sampled.tensor().detached();
  out.real_image = img_target.tensor().detached();
  return out;
}

void check_finite_component(double v, const char* name) {
  check(std::isfinite(v), std::string("train_step: non-finite ") + name);
}

struct BatchEval {
  Tensor batch_loss;
  std::vector<SampleOutcome> outcomes;
};

BatchEval eval_batch(const DenoiserParams& wp, const std::vector<const FourTuple*>& batch,
                     const TrainConfig& cfg, int s, Rng& rng, TimestepBaseline& baseline,
                     const Discriminator* disc) {
  BatchEval out;
  out.outcomes.reserve(batch.size());
  Tensor total_sum;
  for (const FourTuple* tuple : batch) {
    SampleOutcome oc = process_sample(wp, *tuple, cfg, s, rng, baseline, disc);
    total_sum = total_sum.defined() ? add(total_sum, oc.total) : oc.total;
    out.outcomes.push_back(std::move(oc));
  }
  out.batch_loss = mul_scalar(total_sum, 1.0 / static_cast<double>(batch.size()));
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  check(s_total > 0, "config: S_total must be positive");
  check(warmup_fraction > 0.0 && warmup_fraction < 1.0,
        "config: warmup_fraction must lie in (0,1)");
  check(batch_size >= 1, "config: batch_size must be >= 1");
  check(learning_rate >= 0.0, "config: learning_rate must be non-negative");
  check(weight_decay >= 0.0, "config: weight_decay must be non-negative");
  check(lambda_pixel >= 0.0, "config: lambda_pixel must be non-negative");
  check(pg_sigma > 0.0, "config: pg_sigma must be positive");
  check(baseline_decay >= 0.0 && baseline_decay < 1.0,
        "config: baseline_decay must lie in [0,1)");
  check(checkpoint_every >= 0, "config: checkpoint_every must be non-negative");
  corruption.validate();
  frequency.validate();
  freq_loss.validate();
  semantic.validate();
  reward.validate();
}

void adamw_update(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
                  AdamState& st, double lr, double weight_decay) {
  check(params.size() == grads.size(), "adamw: parameter/gradient count mismatch");
  if (st.m.empty()) {
    for (const Tensor* p : params) {
      st.m.push_back(Tensor::zeros(p->shape()));
      st.v.push_back(Tensor::zeros(p->shape()));
    }
  }
  check(st.m.size() == params.size(), "adamw: moment/parameter count mismatch");
  st.t += 1;
  double bc1 = 1.0 - std::pow(kBeta1, st.t);
  double bc2 = 1.0 - std::pow(kBeta2, st.t);
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const auto& g = grads[i].data();
    check(g.size() == p.data().size(), "adamw: gradient shape mismatch for parameter " +
                                           std::to_string(i));
    std::vector<double> m(st.m[i].data());
    std::vector<double> v(st.v[i].data());
    std::vector<double> pd(p.data());
    for (size_t j = 0; j < pd.size(); ++j) {
      m[j] = kBeta1 * m[j] + (1.0 - kBeta1) * g[j];
      v[j] = kBeta2 * v[j] + (1.0 - kBeta2) * g[j] * g[j];
      double mhat = m[j] / bc1;
      double vhat = v[j] / bc2;
      pd[j] -= lr * (mhat / (std::sqrt(vhat) + kAdamEps) + weight_decay * pd[j]);
    }
    st.m[i] = Tensor::from_data(st.m[i].shape(), std::move(m));
    st.v[i] = Tensor::from_data(st.v[i].shape(), std::move(v));
    p = Tensor::from_data(p.shape(), std::move(pd), p.dtype());
  }
}

TrainState init_train_state(const TrainConfig& cfg) {
  cfg.validate();
  TrainState st;
  st.rng = Rng(cfg.seed);
  st.params = DenoiserParams::init(cfg.num_styles, cfg.embed_dim, cfg.hidden, st.rng,
                                   cfg.precision);
  st.baseline = TimestepBaseline(8, cfg.baseline_decay);
  if (cfg.reward.omega_adversarial > 0) st.disc = Discriminator::init(st.rng);
  return st;
}

StepMetrics train_step(TrainState& state, const std::vector<const FourTuple*>& batch,
                       const TrainConfig& cfg) {
  check(!batch.empty(), "train_step: empty batch");
  int s = state.step;

  Tape tape;
  Tape::Scope scope(tape);
  DenoiserParams wp = state.params.watched(tape);

  const Discriminator* disc = state.disc ? &*state.disc : nullptr;
  BatchEval ev = eval_batch(wp, batch, cfg, s, state.rng, state.baseline, disc);
  const std::vector<SampleOutcome>& outcomes = ev.outcomes;
  double inv_b = 1.0 / static_cast<double>(batch.size());
  Tensor batch_loss = ev.batch_loss;

  StepMetrics m;
  m.step = s;
  m.stage = outcomes.front().breakdown.stage;
  int s_warmup = cfg.s_warmup();
  m.gamma_content = decay_gamma(cfg.corruption.gamma_content, s, s_warmup);
  m.gamma_style = decay_gamma(cfg.corruption.gamma_style, s, s_warmup);
  for (const SampleOutcome& oc : outcomes) {
    m.loss_base += oc.breakdown.base.value() * inv_b;
    m.loss_semantic += oc.breakdown.semantic.value() * inv_b;
    m.loss_frequency += oc.breakdown.frequency.value() * inv_b;
    m.loss_pixel += oc.pixel.value() * inv_b;
    m.loss_total += oc.total.value() * inv_b;
    m.r_content += oc.rewards.r_content * inv_b;
    m.r_style += oc.rewards.r_style * inv_b;
    m.r_total += oc.rewards.r_total * inv_b;
    m.advantage += oc.rewards.advantage * inv_b;
    m.sigma_t += oc.sigma_t * inv_b;
  }
  check_finite_component(m.loss_base, "loss_base");
  check_finite_component(m.loss_semantic, "loss_semantic");
  check_finite_component(m.loss_frequency, "loss_frequency");
  check_finite_component(m.loss_pixel, "loss_pixel");
  check_finite_component(m.loss_total, "loss_total");

  GradMap grads = tape.backward(batch_loss);
  std::vector<Tensor*> param_ptrs;
  std::vector<Tensor> grad_list;
  auto watched_named = wp.named();
  auto state_named = state.params.named();
  for (size_t i = 0; i < watched_named.size(); ++i) {
    param_ptrs.push_back(state_named[i].second);
    grad_list.push_back(grads.grad(*watched_named[i].second));
  }
  adamw_update(param_ptrs, grad_list, state.adam, cfg.learning_rate, cfg.weight_decay);

  // Alternate critic update on (real, generated) pairs.
  if (state.disc) {
    Tape dtape;
    Tape::Scope dscope(dtape);
    Discriminator wd = state.disc->watched(dtape);
    Tensor dloss;
    for (const SampleOutcome& oc : outcomes) {
      Tensor lr_real = bce_with_logit(discriminator_logit(wd, oc.real_image), 1.0);
      Tensor lr_fake = bce_with_logit(discriminator_logit(wd, oc.sampled_image), 0.0);
      Tensor pair = add(lr_real, lr_fake);
      dloss = dloss.defined() ? add(dloss, pair) : pair;
    }
    dloss = mul_scalar(dloss, inv_b);
    GradMap dgrads = dtape.backward(dloss);
    std::vector<Tensor*> dptrs;
    std::vector<Tensor> dglist;
    auto wd_named = wd.named();
    auto disc_named = state.disc->named();
    for (size_t i = 0; i < wd_named.size(); ++i) {
      dptrs.push_back(disc_named[i].second);
      dglist.push_back(dgrads.grad(*wd_named[i].second));
    }
    adamw_update(dptrs, dglist, state.disc_adam, cfg.learning_rate, cfg.weight_decay);
  }

  state.step += 1;
  return m;
}

std::vector<std::pair<std::string, Tensor>> step_gradients(
    TrainState state, const std::vector<const FourTuple*>& batch, const TrainConfig& cfg) {
  check(!batch.empty(), "step_gradients: empty batch");
  Tape tape;
  Tape::Scope scope(tape);
  DenoiserParams wp = state.params.watched(tape);
  const Discriminator* disc = state.disc ? &*state.disc : nullptr;
  BatchEval ev = eval_batch(wp, batch, cfg, state.step, state.rng, state.baseline, disc);
  GradMap grads = tape.backward(ev.batch_loss);
  std::vector<std::pair<std::string, Tensor>> out;
  for (auto& [name, tensor] : wp.named()) out.emplace_back(name, grads.grad(*tensor));
  return out;
}

void save_checkpoint(const TrainState& state, const std::string& path) {
  NamedTensors recs;
  recs.emplace_back("meta/step", Tensor::from_data({1}, {static_cast<double>(state.step)}));
  recs.emplace_back("meta/arch",
                    Tensor::from_data({3}, {static_cast<double>(state.params.hidden),
                                            static_cast<double>(state.params.embed_dim),
                                            static_cast<double>(state.params.num_styles)}));
  {
    // layout: [values..., init flags..., decay]
    std::vector<double> b;
    for (const Baseline& cell : state.baseline.bins) b.push_back(cell.value);
    for (const Baseline& cell : state.baseline.bins) b.push_back(cell.initialized ? 1.0 : 0.0);
    b.push_back(state.baseline.bins.front().ema_decay);
    int blen = static_cast<int>(b.size());
    recs.emplace_back("meta/baseline", Tensor::from_data({blen}, std::move(b)));
  }
  uint64_t key = state.rng.key(), ctr = state.rng.counter();
  recs.emplace_back("meta/rng", Tensor::from_data({4}, {static_cast<double>(key >> 32),
                                                        static_cast<double>(key & 0xffffffffull),
                                                        static_cast<double>(ctr >> 32),
                                                        static_cast<double>(ctr & 0xffffffffull)}));
  recs.emplace_back("meta/adam_t", Tensor::from_data({1}, {static_cast<double>(state.adam.t)}));
  recs.emplace_back("meta/has_disc", Tensor::from_data({1}, {state.disc ? 1.0 : 0.0}));

  auto params = const_cast<TrainState&>(state).params.named();
  for (size_t i = 0; i < params.size(); ++i) {
    recs.emplace_back("param/" + params[i].first, *params[i].second);
    if (!state.adam.m.empty()) {
      recs.emplace_back("adam/m/" + params[i].first, state.adam.m[i]);
      recs.emplace_back("adam/v/" + params[i].first, state.adam.v[i]);
    }
  }
  if (state.disc) {
    auto dnamed = const_cast<Discriminator&>(*state.disc).named();
    recs.emplace_back("meta/disc_adam_t",
                      Tensor::from_data({1}, {static_cast<double>(state.disc_adam.t)}));
    for (size_t i = 0; i < dnamed.size(); ++i) {
      recs.emplace_back("disc/" + dnamed[i].first, *dnamed[i].second);
      if (!state.disc_adam.m.empty()) {
        recs.emplace_back("disc_adam/m/" + dnamed[i].first, state.disc_adam.m[i]);
        recs.emplace_back("disc_adam/v/" + dnamed[i].first, state.disc_adam.v[i]);
      }
    }
  }
  write_checkpoint_records(recs, path);
}

TrainState load_checkpoint(const std::string& path) {
  NamedTensors recs = read_checkpoint_records(path);
  auto find = [&recs, &path](const std::string& name) -> const Tensor& {
    for (const auto& [n, t] : recs) {
      if (n == name) return t;
    }
    fail("checkpoint: missing record '" + name + "' in " + path);
  };
  auto find_opt = [&recs](const std::string& name) -> const Tensor* {
    for (const auto& [n, t] : recs) {
      if (n == name) return &t;
    }
    return nullptr;
  };

  TrainState st;
  st.step = static_cast<int>(find("meta/step").at(0));
  const Tensor& arch = find("meta/arch");
  int hidden = static_cast<int>(arch.at(0));
  int embed_dim = static_cast<int>(arch.at(1));
  int num_styles = static_cast<int>(arch.at(2));
  Rng dummy(0);
  st.params = DenoiserParams::init(num_styles, embed_dim, hidden, dummy);
  const Tensor& b = find("meta/baseline");
  check(b.size() >= 3 && b.size() % 2 == 1, "checkpoint: malformed baseline record");
  int nbins = static_cast<int>((b.size() - 1) / 2);
  double decay = b.at(static_cast<int>(b.size()) - 1);
  st.baseline = TimestepBaseline(nbins, decay);
  for (int i = 0; i < nbins; ++i) {
    st.baseline.bins[static_cast<size_t>(i)].value = b.at(i);
    st.baseline.bins[static_cast<size_t>(i)].initialized = b.at(nbins + i) != 0.0;
  }
  const Tensor& r = find("meta/rng");
  uint64_t key = (static_cast<uint64_t>(r.at(0)) << 32) | static_cast<uint64_t>(r.at(1));
  uint64_t ctr = (static_cast<uint64_t>(r.at(2)) << 32) | static_cast<uint64_t>(r.at(3));
  st.rng = Rng::from_state(key, ctr);
  st.adam.t = static_cast<int>(find("meta/adam_t").at(0));

  for (auto& [name, tensor] : st.params.named()) {
    const Tensor& loaded = find("param/" + name);
    check(loaded.shape() == tensor->shape(),
          "checkpoint: shape mismatch for param/" + name);
    *tensor = loaded;
    const Tensor* am = find_opt("adam/m/" + name);
    const Tensor* av = find_opt("adam/v/" + name);
    if (am && av) {
      st.adam.m.push_back(*am);
      st.adam.v.push_back(*av);
    }
  }
  if (find("meta/has_disc").at(0) != 0.0) {
    Rng d2(0);
    st.disc = Discriminator::init(d2);
    st.disc_adam.t = static_cast<int>(find("meta/disc_adam_t").at(0));
    for (auto& [name, tensor] : st.disc->named()) {
      *tensor = find("disc/" + name);
      const Tensor* am = find_opt("disc_adam/m/" + name);
      const Tensor* av = find_opt("disc_adam/v/" + name);
      if (am && av) {
        st.disc_adam.m.push_back(*am);
        st.disc_adam.v.push_back(*av);
      }
    }
  }
  return st;
}

std::string metrics_json_line(const StepMetrics& m) {
  nlohmann::json j;
  j["step"] = m.step;
  j["stage"] = m.stage;
  j["loss_base"] = m.loss_base;
  j["loss_semantic"] = m.loss_semantic;
  j["loss_frequency"] = m.loss_frequency;
  j["loss_pixel"] = m.loss_pixel;
  j["loss_total"] = m.loss_total;
  j["r_content"] = m.r_content;
  j["r_style"] = m.r_style;
  j["r_total"] = m.r_total;
  j["advantage"] = m.advantage;
  j["gamma_content"] = m.gamma_content;
  j["gamma_style"] = m.gamma_style;
  j["sigma_t"] = m.sigma_t;
  return j.dump();
}

TrainState run(const TrainConfig& cfg, const std::vector<FourTuple>& dataset,
               const std::string& out_dir, std::optional<TrainState> resume) {
  cfg.validate();
  check(!dataset.empty(), "run: dataset is empty");
  fs::create_directories(out_dir);

  TrainState state = resume ? std::move(*resume) : init_train_state(cfg);
  bool resuming = state.step > 0;
  std::ofstream metrics(fs::path(out_dir) / "metrics.jsonl",
                        resuming ? std::ios::app : std::ios::trunc);
  check(metrics.good(), "run: cannot open metrics log in " + out_dir);

  int n = static_cast<int>(dataset.size());
  while (state.step < cfg.s_total) {
    std::vector<const FourTuple*> batch;
    batch.reserve(static_cast<size_t>(cfg.batch_size));
    for (int b = 0; b < cfg.batch_size; ++b)
      batch.push_back(&dataset[static_cast<size_t>(state.rng.below(n))]);
    StepMetrics m = train_step(state, batch, cfg);
    metrics << metrics_json_line(m) << "\n";
    check(metrics.good(), "run: metrics write failed");
    if (cfg.checkpoint_every > 0 && state.step % cfg.checkpoint_every == 0 &&
        state.step < cfg.s_total) {
      char name[32];
      std::snprintf(name, sizeof(name), "ckpt_%06d.csgf", state.step);
      save_checkpoint(state, (fs::path(out_dir) / name).string());
    }
  }
  metrics.flush();
  save_checkpoint(state, (fs::path(out_dir) / "ckpt_final.csgf").string());
  return state;
}

}  // namespace csg
