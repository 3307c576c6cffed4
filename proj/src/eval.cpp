// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "csg/eval.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "json.hpp"

#include "csg/corruption.hpp"
#include "csg/embedder.hpp"
#include "csg/error.hpp"

namespace csg {

Tensor integrate_field(const VelocityField& field, const Tensor& z_init, int steps) {
  check(steps >= 1, "generate: steps must be >= 1");
  Tensor z = z_init;
  double dt = 1.0 / static_cast<double>(steps);
  for (int i = 0; i < steps; ++i) {
    double t = 1.0 - static_cast<double>(i) * dt;
    Tensor v = field(z, t);
    z = sub(z, mul_scalar(v, dt));
  }
  return z;
}

ImageTensor generate(const DenoiserParams& params, const FourTuple& tuple, int steps,
                     CondMode mode) {
  Tensor z_content = encode(tuple.img_source).tensor();
  Tensor z_style = encode(tuple.img_ref).tensor();

  Rng rng(tuple.seed, 0x6576616cull);  // "eval" stream
  Tensor z_init = gaussian_noise(z_content.shape(), rng);

  VelocityField field = [&](const Tensor& z_t, double t) {
    ConditionBundle cond;
    cond.mode = mode;
    cond.z_content_t = z_content;
    cond.t = t;
    if (mode == CondMode::reference_guided) {
      cond.z_style_t = z_style;
    } else {
      cond.style_class = tuple.style_id;
    }
    return predict_velocity(params, z_t, cond);
  };
  Tensor z0 = integrate_field(field, z_init, steps);
  return decode(LatentTensor(z0));
}

namespace {

Eigen::VectorXd population_mean(const std::vector<std::vector<double>>& pop, int d) {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
  for (const auto& row : pop)
    mu += Eigen::Map<const Eigen::VectorXd>(row.data(), d);
  return mu / static_cast<double>(pop.size());
}

Eigen::MatrixXd population_cov(const std::vector<std::vector<double>>& pop,
                               const Eigen::VectorXd& mu, int d) {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (const auto& row : pop) {
    Eigen::VectorXd diff = Eigen::Map<const Eigen::VectorXd>(row.data(), d) - mu;
    cov += diff * diff.transpose();
  }
  return cov / static_cast<double>(pop.size() - 1);
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd ev = es.eigenvalues();
  for (int i = 0; i < ev.size(); ++i) ev[i] = ev[i] > 0 ? std::sqrt(ev[i]) : 0.0;
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double frechet_distance(const std::vector<std::vector<double>>& pop_a,
                        const std::vector<std::vector<double>>& pop_b) {
  check(pop_a.size() >= 2 && pop_b.size() >= 2,
        "frechet_distance: need at least 2 samples per population");
  int d = static_cast<int>(pop_a.front().size());
  for (const auto& row : pop_a)
    check(static_cast<int>(row.size()) == d, "frechet_distance: inconsistent dimensions");
  for (const auto& row : pop_b)
    check(static_cast<int>(row.size()) == d, "frechet_distance: inconsistent dimensions");

  Eigen::VectorXd mu_a = population_mean(pop_a, d);
  Eigen::VectorXd mu_b = population_mean(pop_b, d);
  Eigen::MatrixXd cov_a = population_cov(pop_a, mu_a, d);
  Eigen::MatrixXd cov_b = population_cov(pop_b, mu_b, d);

  Eigen::MatrixXd sqrt_b = psd_sqrt(cov_b);
  Eigen::MatrixXd inner = sqrt_b * cov_a * sqrt_b;
  inner = 0.5 * (inner + inner.transpose());  // symmetrize against rounding
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner);
  double tr_sqrt = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    double ev = es.eigenvalues()[i];
    if (ev > 0) tr_sqrt += std::sqrt(ev);
  }
  double d2 = (mu_a - mu_b).squaredNorm() + cov_a.trace() + cov_b.trace() - 2.0 * tr_sqrt;
  return std::max(0.0, d2);
}

EvalReport evaluate(const DenoiserParams& params, const std::vector<FourTuple>& tuples, int steps,
                    CondMode mode) {
  check(!tuples.empty(), "evaluate: empty tuple list");
  EvalReport r;
  r.n_samples = static_cast<int>(tuples.size());

  std::vector<double> content_sims, style_sims;
  std::vector<std::vector<double>> gen_style_feats, gt_style_feats;
  for (const FourTuple& tuple : tuples) {
    ImageTensor gen = generate(params, tuple, steps, mode);
    double cs = cosine_sim(content_features(gen), content_features(tuple.img_source)).value();
    double ss = cosine_sim(style_features(gen), style_features(tuple.img_ref)).value();
    content_sims.push_back(cs);
    style_sims.push_back(ss);
    gen_style_feats.push_back(style_features(gen).values.data());
    gt_style_feats.push_back(style_features(tuple.img_gt).values.data());
    auto& ps = r.per_style[tuple.style_id];
    ps.content_sim += cs;
    ps.style_sim += ss;
    ps.n += 1;
  }
  for (auto& [id, ps] : r.per_style) {
    ps.content_sim /= ps.n;
    ps.style_sim /= ps.n;
  }
  auto mean_std = [](const std::vector<double>& v, double& mean, double& std_out) {
    mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0;
    for (double x : v) var += (x - mean) * (x - mean);
    std_out = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
  };
  mean_std(content_sims, r.content_sim_mean, r.content_sim_std);
  mean_std(style_sims, r.style_sim_mean, r.style_sim_std);

  if (tuples.size() >= 2) {
    r.frechet_feature_distance = frechet_distance(gen_style_feats, gt_style_feats);
    r.ffd_valid = true;
  }
  return r;
}

std::string report_json(const EvalReport& r) {
  nlohmann::json j;
  j["content_sim_mean"] = r.content_sim_mean;
  j["content_sim_std"] = r.content_sim_std;
  j["style_sim_mean"] = r.style_sim_mean;
  j["style_sim_std"] = r.style_sim_std;
  j["frechet_feature_distance"] = r.frechet_feature_distance;
  j["ffd_valid"] = r.ffd_valid;
  j["n_samples"] = r.n_samples;
  nlohmann::json per;
  for (const auto& [id, ps] : r.per_style) {
    nlohmann::json e;
    e["content_sim"] = ps.content_sim;
    e["style_sim"] = ps.style_sim;
    e["n"] = ps.n;
    per[std::to_string(id)] = e;
  }
  j["per_style"] = per;
  return j.dump(2);
}

}  // namespace csg
