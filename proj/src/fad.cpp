#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

#include "vocbench/error.hpp"
#include "vocbench/metrics.hpp"

namespace vocbench::metrics {

EmbeddingSet EmbeddingSet::fit(Eigen::MatrixXd vectors, std::string provider_id) {
  const Eigen::Index n = vectors.rows();
  if (n < 2) {
    throw Error(ErrorCode::TooFewEmbeddings,
                "need at least 2 embeddings, got " + std::to_string(n));
  }
  Eigen::VectorXd mu = vectors.colwise().mean().transpose();
  const Eigen::MatrixXd centered = vectors.rowwise() - mu.transpose();
  Eigen::MatrixXd sigma = (centered.transpose() * centered) / static_cast<double>(n - 1);
  sigma = 0.5 * (sigma + sigma.transpose());
  sigma.diagonal().array() += kCovarianceEps;
  return EmbeddingSet(std::move(vectors), std::move(mu), std::move(sigma),
                      std::move(provider_id));
}

EmbeddingSet EmbeddingSet::from_moments(Eigen::VectorXd mu, Eigen::MatrixXd sigma,
                                        std::string provider_id) {
  if (sigma.rows() != mu.size() || sigma.cols() != mu.size()) {
    throw Error(ErrorCode::DimensionMismatch, "covariance shape does not match mean");
  }
  return EmbeddingSet(Eigen::MatrixXd(), std::move(mu), std::move(sigma),
                      std::move(provider_id));
}

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  const Eigen::VectorXd roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

double fad(const EmbeddingSet& background, const EmbeddingSet& evaluation) {
  if (background.dim() != evaluation.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(background.dim()) + "-D vs " +
                    std::to_string(evaluation.dim()) + "-D embeddings");
  }
  if (background.provider_id() != evaluation.provider_id()) {
    throw Error(ErrorCode::ProviderMismatch,
                background.provider_id() + " vs " + evaluation.provider_id());
  }
  // Singular values of sqrt(S1) sqrt(S2) are the square roots of the eigenvalues of
  // sqrt(S1) S2 sqrt(S1), without squaring the small ones into rounding noise.
  const Eigen::MatrixXd cross = symmetric_sqrt(background.sigma()) * symmetric_sqrt(evaluation.sigma());
  const double trace_cross = Eigen::BDCSVD<Eigen::MatrixXd>(cross).singularValues().sum();
  const double mean_term = (background.mu() - evaluation.mu()).squaredNorm();
  const double value = mean_term + background.sigma().trace() + evaluation.sigma().trace() -
                       2.0 * trace_cross;
  return std::max(value, 0.0);
}

bool fad_symmetric_check(const EmbeddingSet& a, const EmbeddingSet& b) {
  const double ab = fad(a, b);
  const double ba = fad(b, a);
  return std::abs(ab - ba) <= 1e-6 * (1.0 + ab);
}

}  // namespace vocbench::metrics
