// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "doctest.h"

#include "csg/corruption.hpp"
#include "csg/embedder.hpp"
#include "csg/error.hpp"
#include "csg/eval.hpp"
#include "csg/rng.hpp"

using namespace csg;

namespace {

// ---- independent Frechet oracle: cyclic Jacobi eigensolver, no Eigen ----

using Mat = std::vector<std::vector<double>>;

Mat mat_mul(const Mat& a, const Mat& b) {
  size_t n = a.size();
  Mat c(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < n; ++i)
    for (size_t k = 0; k < n; ++k) {
      double aik = a[i][k];
      if (aik == 0) continue;
      for (size_t j = 0; j < n; ++j) c[i][j] += aik * b[k][j];
    }
  return c;
}

// Jacobi eigenvalue iteration for symmetric matrices; returns eigenvalues
// and fills V with eigenvectors in columns.
std::vector<double> jacobi_eigen(Mat a, Mat& v) {
  size_t n = a.size();
  v.assign(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (size_t p = 0; p < n; ++p)
      for (size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-24) break;
    for (size_t p = 0; p < n; ++p)
      for (size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-30) continue;
        double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (size_t i = 0; i < n; ++i) {
          double aip = a[i][p], aiq = a[i][q];
          a[i][p] = c * aip - s * aiq;
          a[i][q] = s * aip + c * aiq;
        }
        for (size_t i = 0; i < n; ++i) {
          double api = a[p][i], aqi = a[q][i];
          a[p][i] = c * api - s * aqi;
          a[q][i] = s * api + c * aqi;
        }
        for (size_t i = 0; i < n; ++i) {
          double vip = v[i][p], viq = v[i][q];
          v[i][p] = c * vip - s * viq;
          v[i][q] = s * vip + c * viq;
        }
      }
  }
  std::vector<double> eig(n);
  for (size_t i = 0; i < n; ++i) eig[i] = a[i][i];
  return eig;
}

Mat psd_sqrt_oracle(const Mat& m) {
  Mat v;
  std::vector<double> eig = jacobi_eigen(m, v);
  size_t n = m.size();
  Mat out(n, std::vector<double>(n, 0.0));
  for (size_t k = 0; k < n; ++k) {
    double s = eig[k] > 0 ? std::sqrt(eig[k]) : 0.0;
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j) out[i][j] += s * v[i][k] * v[j][k];
  }
  return out;
}

double frechet_oracle(const std::vector<std::vector<double>>& pa,
                      const std::vector<std::vector<double>>& pb) {
  size_t d = pa.front().size();
  std::vector<double> mu_a(d, 0.0), mu_b(d, 0.0);
  for (const auto& r : pa)
    for (size_t i = 0; i < d; ++i) mu_a[i] += r[i] / pa.size();
  for (const auto& r : pb)
    for (size_t i = 0; i < d; ++i) mu_b[i] += r[i] / pb.size();
  Mat ca(d, std::vector<double>(d, 0.0)), cb(d, std::vector<double>(d, 0.0));
  for (const auto& r : pa)
    for (size_t i = 0; i < d; ++i)
      for (size_t j = 0; j < d; ++j)
        ca[i][j] += (r[i] - mu_a[i]) * (r[j] - mu_a[j]) / (pa.size() - 1);
  for (const auto& r : pb)
    for (size_t i = 0; i < d; ++i)
      for (size_t j = 0; j < d; ++j)
        cb[i][j] += (r[i] - mu_b[i]) * (r[j] - mu_b[j]) / (pb.size() - 1);

  Mat sqrt_b = psd_sqrt_oracle(cb);
  Mat inner = mat_mul(mat_mul(sqrt_b, ca), sqrt_b);
  for (size_t i = 0; i < d; ++i)
    for (size_t j = i + 1; j < d; ++j) {
      double avg = 0.5 * (inner[i][j] + inner[j][i]);
      inner[i][j] = inner[j][i] = avg;
    }
  Mat v;
  std::vector<double> eig = jacobi_eigen(inner, v);
  double tr_sqrt = 0;
  for (double e : eig) tr_sqrt += e > 0 ? std::sqrt(e) : 0.0;
  double mean_term = 0, tr_a = 0, tr_b = 0;
  for (size_t i = 0; i < d; ++i) {
    mean_term += (mu_a[i] - mu_b[i]) * (mu_a[i] - mu_b[i]);
    tr_a += ca[i][i];
    tr_b += cb[i][i];
  }
  return std::max(0.0, mean_term + tr_a + tr_b - 2.0 * tr_sqrt);
}

std::vector<std::vector<double>> random_population(Rng& rng, int n, int d, double shift) {
  // Correlated Gaussian population with a random linear mix.
  std::vector<std::vector<double>> mix(static_cast<size_t>(d), std::vector<double>(static_cast<size_t>(d)));
  for (auto& row : mix)
    for (double& v : row) v = 0.4 * rng.normal();
  std::vector<std::vector<double>> out;
  for (int i = 0; i < n; ++i) {
    std::vector<double> raw(static_cast<size_t>(d));
    for (double& v : raw) v = rng.normal();
    std::vector<double> row(static_cast<size_t>(d), shift);
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) row[static_cast<size_t>(a)] += mix[static_cast<size_t>(a)][static_cast<size_t>(b)] * raw[static_cast<size_t>(b)];
      row[static_cast<size_t>(a)] += raw[static_cast<size_t>(a)];
    }
    out.push_back(std::move(row));
  }
  return out;
}

VelocityField oracle_field(const Tensor& z_clean, const Tensor& eps) {
  Tensor v = sub(eps, z_clean);
  return [v](const Tensor&, double) { return v; };
}

}  // namespace

TEST_CASE("oracle velocity field recovers the clean latent in one step") {
  Rng rng(3);
  Tensor z = gaussian_noise({3, 4, 4}, rng);
  Tensor eps = gaussian_noise({3, 4, 4}, rng);
  Tensor z0 = integrate_field(oracle_field(z, eps), eps, 1);
  for (int i = 0; i < z.size(); ++i) CHECK(std::abs(z0.at(i) - z.at(i)) < 1e-12);
}

TEST_CASE("constant fields integrate identically for any step count") {
  Rng rng(4);
  Tensor z = gaussian_noise({3, 4, 4}, rng);
  Tensor eps = gaussian_noise({3, 4, 4}, rng);
  Tensor one = integrate_field(oracle_field(z, eps), eps, 1);
  Tensor eight = integrate_field(oracle_field(z, eps), eps, 8);
  for (int i = 0; i < z.size(); ++i) CHECK(one.at(i) == doctest::Approx(eight.at(i)).epsilon(1e-12));
  CHECK_THROWS_AS(integrate_field(oracle_field(z, eps), eps, 0), Error);
}

TEST_CASE("generation is deterministic for fixed params and tuple") {
  DatasetConfig d;
  d.n = 2;
  d.seed = 5;
  auto tuples = gen_dataset(d);
  Rng rng(1);
  DenoiserParams p = DenoiserParams::init(4, 4, 16, rng);
  ImageTensor a = generate(p, tuples[0], 4, CondMode::reference_guided);
  ImageTensor b = generate(p, tuples[0], 4, CondMode::reference_guided);
  for (int i = 0; i < a.tensor().size(); ++i) CHECK(a.tensor().at(i) == b.tensor().at(i));
}

TEST_CASE("identical populations have zero distance and unit style similarity") {
  DatasetConfig d;
  d.n = 16;
  d.seed = 11;
  auto tuples = gen_dataset(d);
  std::vector<std::vector<double>> feats;
  for (const FourTuple& t : tuples) feats.push_back(style_features(t.img_gt).values.data());
  CHECK(frechet_distance(feats, feats) < 1e-8);
  for (const FourTuple& t : tuples)
    CHECK(cosine_sim(style_features(t.img_gt), style_features(t.img_gt)).value() ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("frechet distance is symmetric and non-negative") {
  Rng rng(21);
  auto pa = random_population(rng, 40, 6, 0.0);
  auto pb = random_population(rng, 40, 6, 0.7);
  double ab = frechet_distance(pa, pb);
  double ba = frechet_distance(pb, pa);
  CHECK(ab >= 0.0);
  CHECK(ab == doctest::Approx(ba).epsilon(1e-9));
  CHECK(ab > 0.1);  // visibly separated populations
}

TEST_CASE("frechet distance matches the independent Jacobi oracle") {
  Rng rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    int d = 4 + trial % 3;
    auto pa = random_population(rng, 30 + trial, d, 0.0);
    auto pb = random_population(rng, 25 + trial, d, 0.3 * (trial % 4));
    double impl = frechet_distance(pa, pb);
    double oracle = frechet_oracle(pa, pb);
    CHECK(std::abs(impl - oracle) < 1e-8);
  }
}

TEST_CASE("unstyled generations score lower style similarity than ground truth") {
  DatasetConfig d;
  d.n = 100;
  d.seed = 13;
  auto tuples = gen_dataset(d);
  double unstyled = 0, styled = 0;
  for (const FourTuple& t : tuples) {
    // "Generation" that copies the source unchanged: perfect content, no style.
    unstyled += cosine_sim(style_features(t.img_source), style_features(t.img_ref)).value();
    styled += cosine_sim(style_features(t.img_gt), style_features(t.img_ref)).value();
    CHECK(cosine_sim(content_features(t.img_source), content_features(t.img_source)).value() ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(styled > unstyled);
}

TEST_CASE("evaluate aggregates per style and flags tiny sample sets") {
  DatasetConfig d;
  d.n = 8;
  d.num_styles = 4;
  d.seed = 17;
  auto tuples = gen_dataset(d);
  Rng rng(2);
  DenoiserParams p = DenoiserParams::init(4, 4, 16, rng);
  EvalReport r = evaluate(p, tuples, 2, CondMode::reference_guided);
  CHECK(r.n_samples == 8);
  CHECK(r.ffd_valid);
  CHECK(r.frechet_feature_distance >= 0.0);
  CHECK(std::abs(r.content_sim_mean) <= 1.0);
  CHECK(std::abs(r.style_sim_mean) <= 1.0);
  int total = 0;
  for (auto& [id, ps] : r.per_style) total += ps.n;
  CHECK(total == 8);

  EvalReport tiny = evaluate(p, {tuples[0]}, 2, CondMode::reference_guided);
  CHECK_FALSE(tiny.ffd_valid);

  // deterministic
  EvalReport r2 = evaluate(p, tuples, 2, CondMode::reference_guided);
  CHECK(r2.content_sim_mean == r.content_sim_mean);
  CHECK(r2.frechet_feature_distance == r.frechet_feature_distance);

  std::string json = report_json(r);
  CHECK(json.find("content_sim_mean") != std::string::npos);
  CHECK(json.find("per_style") != std::string::npos);
}

TEST_CASE("text-guided generation also runs end to end") {
  DatasetConfig d;
  d.n = 3;
  d.seed = 19;
  auto tuples = gen_dataset(d);
  Rng rng(3);
  DenoiserParams p = DenoiserParams::init(4, 4, 16, rng);
  EvalReport r = evaluate(p, tuples, 2, CondMode::text_guided);
  CHECK(r.n_samples == 3);
}
