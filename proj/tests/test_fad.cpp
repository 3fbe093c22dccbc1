#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "synth_speech.hpp"
#include "vocbench/error.hpp"
#include "vocbench/metrics.hpp"

using namespace vocbench;
using namespace vocbench::metrics;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected vocbench::Error");
  return ErrorCode::Usage;
}

// Trace term through the eigenvalues of the (non-symmetric) product
// sigma1 * sigma2, whose square roots sum to tr sqrt(sigma1 sigma2).
double fad_oracle(const EmbeddingSet& a, const EmbeddingSet& b) {
  const Eigen::MatrixXd prod = a.sigma() * b.sigma();
  Eigen::EigenSolver<Eigen::MatrixXd> es(prod, false);
  double tr_sqrt = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    tr_sqrt += std::sqrt(std::max(es.eigenvalues()(i).real(), 0.0));
  return (a.mu() - b.mu()).squaredNorm() + a.sigma().trace() + b.sigma().trace() - 2 * tr_sqrt;
}

Eigen::MatrixXd correlated(Eigen::Index n, Eigen::Index d, std::uint64_t seed, double shift) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd mix(d, d);
  for (Eigen::Index i = 0; i < mix.size(); ++i) mix.data()[i] = g(rng) / std::sqrt(double(d));
  Eigen::MatrixXd z(n, d);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = g(rng);
  Eigen::MatrixXd x = z * mix;
  x.array() += shift;
  return x;
}

Eigen::MatrixXd fixture_embeddings(std::uint64_t seed0, int clips, double noise_sigma) {
  const SpectralConfig cfg;
  std::vector<Eigen::MatrixXd> parts;
  Eigen::Index rows = 0;
  for (int i = 0; i < clips; ++i) {
    auto w = fixtures::synth_speech(seed0 + i, {.seconds = 3.0});
    if (noise_sigma > 0) w = fixtures::add_noise(w, noise_sigma, 1000 + seed0 + i);
    parts.push_back(embed(w, kMelStatProvider, cfg));
    rows += parts.back().rows();
  }
  Eigen::MatrixXd all(rows, parts.front().cols());
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    all.middleRows(r, p.rows()) = p;
    r += p.rows();
  }
  return all;
}

}  // namespace

TEST_CASE("fit two-point covariance") {
  Eigen::MatrixXd x(2, 2);
  x << 0, 0, 2, 2;
  const auto s = EmbeddingSet::fit(x, "t");
  CHECK(s.mu()(0) == 1.0);
  CHECK(s.mu()(1) == 1.0);
  CHECK(s.sigma()(0, 0) == doctest::Approx(2 + 1e-6).epsilon(1e-15));
  CHECK(s.sigma()(1, 1) == doctest::Approx(2 + 1e-6).epsilon(1e-15));
  CHECK(s.sigma()(0, 1) == 2.0);
  CHECK(s.sigma()(1, 0) == 2.0);
  CHECK(s.dim() == 2);
  CHECK(s.provider_id() == "t");
}

TEST_CASE("fit preconditions and symmetry") {
  CHECK(code_of([] { EmbeddingSet::fit(Eigen::MatrixXd::Ones(1, 4), "t"); }) ==
        ErrorCode::TooFewEmbeddings);
  const auto s = EmbeddingSet::fit(correlated(50, 30, 3, 0.0), "t");
  CHECK((s.sigma() - s.sigma().transpose()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("closed-form one-dimensional cases") {
  auto g = [](double mu, double var) {
    return EmbeddingSet::from_moments(Eigen::VectorXd::Constant(1, mu),
                                      Eigen::MatrixXd::Constant(1, 1, var), "t");
  };
  CHECK(std::abs(fad(g(0, 1), g(1, 1)) - 1.0) <= 1e-9);
  CHECK(std::abs(fad(g(0, 4), g(0, 1)) - 1.0) <= 1e-9);
  CHECK(std::abs(fad(g(3, 2), g(3, 2))) <= 1e-9);
}

TEST_CASE("identical Gaussians give zero") {
  const auto a = EmbeddingSet::fit(correlated(400, 160, 5, 0.0), "t");
  CHECK(fad(a, a) <= 1e-6);
  const auto small = EmbeddingSet::fit(correlated(30, 160, 6, 0.0), "t");  // N < D
  CHECK(fad(small, small) <= 1e-6);
  const auto emb = EmbeddingSet::fit(fixture_embeddings(100, 6, 0.0), "melstat-v1");
  CHECK(fad(emb, emb) <= 1e-6);
}

TEST_CASE("matches the eigenvalue-product oracle") {
  SUBCASE("5-D") {
    const auto a = EmbeddingSet::fit(correlated(40, 5, 7, 0.0), "t");
    const auto b = EmbeddingSet::fit(correlated(60, 5, 8, 0.3), "t");
    CHECK(std::abs(fad(a, b) - fad_oracle(a, b)) <= 1e-6);
  }
  SUBCASE("160-D random sets") {
    const auto a = EmbeddingSet::fit(correlated(500, 160, 9, 0.0), "t");
    const auto b = EmbeddingSet::fit(correlated(400, 160, 10, 0.1), "t");
    CHECK(std::abs(fad(a, b) - fad_oracle(a, b)) <= 1e-6);
    CHECK(fad_symmetric_check(a, b));
    CHECK(std::abs(fad(a, b) - fad(b, a)) <= 1e-6 * (1 + fad(a, b)));
  }
}

TEST_CASE("symmetric square root") {
  const Eigen::MatrixXd x = correlated(50, 8, 12, 0.0);
  const Eigen::MatrixXd psd = x.transpose() * x;
  const Eigen::MatrixXd r = symmetric_sqrt(psd);
  CHECK((r * r - psd).cwiseAbs().maxCoeff() <= 1e-9 * psd.cwiseAbs().maxCoeff());
}

TEST_CASE("compatibility errors") {
  const auto a = EmbeddingSet::fit(correlated(10, 4, 1, 0.0), "p");
  const auto b = EmbeddingSet::fit(correlated(10, 5, 2, 0.0), "p");
  const auto c = EmbeddingSet::fit(correlated(10, 4, 3, 0.0), "q");
  CHECK(code_of([&] { fad(a, b); }) == ErrorCode::DimensionMismatch);
  CHECK(code_of([&] { fad(a, c); }) == ErrorCode::ProviderMismatch);
}

TEST_CASE("symmetric check on identical sets") {
  const auto a = EmbeddingSet::fit(correlated(30, 6, 4, 0.0), "t");
  CHECK(fad_symmetric_check(a, a));
}

TEST_CASE("FAD grows with noise on fixture audio") {
  const auto clean = EmbeddingSet::fit(fixture_embeddings(200, 8, 0.0), "melstat-v1");
  double previous = fad(clean, EmbeddingSet::fit(fixture_embeddings(300, 8, 0.0), "melstat-v1"));
  for (double sigma : {0.01, 0.05, 0.1}) {
    const auto noisy = EmbeddingSet::fit(fixture_embeddings(300, 8, sigma), "melstat-v1");
    const double d = fad(clean, noisy);
    CHECK(d > previous);
    previous = d;
  }
}
