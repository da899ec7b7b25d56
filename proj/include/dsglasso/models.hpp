#pragma once

// Synthetic ground truths and reproducible Gaussian sampling.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dsglasso/core.hpp"

namespace dsglasso {

// Counter-based generator (Philox 4x32-10). The draw sequence depends only on
// (seed, stream_id) and the position in the stream, so replicate r can use
// stream_id = r independently of scheduling.
class SeededRng {
 public:
  SeededRng(std::uint64_t seed, std::uint64_t stream_id) noexcept : seed_(seed), stream_(stream_id) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_; }

  std::uint64_t next_u64() noexcept;
  // Uniform on the open interval (0,1) with 53 bits of resolution.
  double uniform() noexcept;
  // Standard normal by inverse-CDF transform of one uniform.
  double normal();
  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) noexcept;

  // Raw Philox block for counter value `counter` (exposed for tests).
  static std::array<std::uint32_t, 4> philox_block(std::uint64_t seed, std::uint64_t stream,
                                                   std::uint64_t counter) noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;  // remaining 64-bit halves in buffer_
};

enum class ModelKind { kChain, kToeplitzCov, kBlockDiag, kDiagonal };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct ModelSpec {
  ModelKind kind = ModelKind::kChain;
  Index p = 0;
  // chain: off-diagonal of Theta*; toeplitz_cov: Sigma*_ij = rho^|i-j|
  double rho = 0.0;
  // block_diag: sizes summing to p, each block has unit diagonal and
  // off-diagonal entries equal to block_value.
  std::vector<Index> block_sizes;
  double block_value = 0.0;
  // diagonal: Theta*_ii; empty means identity.
  std::vector<double> diagonal;

  bool operator==(const ModelSpec&) const = default;
};

ModelSpec chain_model(Index p, double rho);

struct TrueModel {
  SymMatrix theta;  // Theta*
  SymMatrix sigma;  // Sigma* = (Theta*)^{-1}
  EdgeSet support;  // S = {(i,j) : Theta*_ij != 0}
};

// Throws InputError for inconsistent parameters and DefinitenessError when
// Theta* is not positive definite.
TrueModel make_precision(const ModelSpec& spec);

std::vector<double> standard_normal_draws(Index count, SeededRng& rng);

// n draws from N(0, Sigma*) with Sigma* = theta_star^{-1}: x = L z with
// Sigma* = L L^T and z standard normal (row-major consumption of the stream).
DataMatrix sample_gaussian(const SymMatrix& theta_star, Index n, SeededRng& rng);
// Same with a precomputed Cholesky factor of Sigma*.
DataMatrix sample_gaussian_with_factor(const Eigen::MatrixXd& sigma_factor, Index n, SeededRng& rng);

}  // namespace dsglasso
