#include "dsglasso/models.hpp"

#include <cmath>
#include <numeric>

namespace dsglasso {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

}  // namespace

std::array<std::uint32_t, 4> SeededRng::philox_block(std::uint64_t seed, std::uint64_t stream,
                                                     std::uint64_t counter) noexcept {
  std::array<std::uint32_t, 4> ctr = {static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32),
                                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

std::uint64_t SeededRng::next_u64() noexcept {
  if (buffered_ == 0) {
    buffer_ = philox_block(seed_, stream_, counter_++);
    buffered_ = 2;
  }
  const int half = 2 - buffered_;
  --buffered_;
  return (static_cast<std::uint64_t>(buffer_[2 * half]) << 32) | buffer_[2 * half + 1];
}

double SeededRng::uniform() noexcept {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double SeededRng::normal() { return std_normal_quantile(uniform()); }

std::uint64_t SeededRng::below(std::uint64_t bound) noexcept {
  // Lemire's rejection keeps the result unbiased.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t x = next_u64();
    const unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
    if (static_cast<std::uint64_t>(m) >= threshold) return static_cast<std::uint64_t>(m >> 64);
  }
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kChain: return "chain";
    case ModelKind::kToeplitzCov: return "toeplitz_cov";
    case ModelKind::kBlockDiag: return "block_diag";
    case ModelKind::kDiagonal: return "diagonal";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "chain") return ModelKind::kChain;
  if (name == "toeplitz_cov") return ModelKind::kToeplitzCov;
  if (name == "block_diag") return ModelKind::kBlockDiag;
  if (name == "diagonal") return ModelKind::kDiagonal;
  throw InputError("unknown model kind '" + name + "'");
}

ModelSpec chain_model(Index p, double rho) {
  ModelSpec spec;
  spec.kind = ModelKind::kChain;
  spec.p = p;
  spec.rho = rho;
  return spec;
}

TrueModel make_precision(const ModelSpec& spec) {
  if (spec.p == 0) throw InputError("make_precision: p must be positive");
  const Index p = spec.p;
  SymMatrix theta(p);

  switch (spec.kind) {
    case ModelKind::kChain:
      if (!std::isfinite(spec.rho)) throw InputError("make_precision: rho must be finite");
      for (Index i = 0; i < p; ++i) {
        theta.set(i, i, 1.0);
        if (i + 1 < p) theta.set(i, i + 1, spec.rho);
      }
      break;
    case ModelKind::kToeplitzCov: {
      // Inverse of the AR(1) correlation matrix, written in closed form so that
      // the zero pattern is exact.
      const double rho = spec.rho;
      if (!(std::abs(rho) < 1.0)) throw InputError("make_precision: toeplitz_cov needs |rho| < 1");
      const double scale = 1.0 / (1.0 - rho * rho);
      for (Index i = 0; i < p; ++i) {
        const bool end = (i == 0 || i + 1 == p);
        theta.set(i, i, p == 1 ? 1.0 : scale * (end ? 1.0 : 1.0 + rho * rho));
        if (i + 1 < p) theta.set(i, i + 1, -rho * scale);
      }
      break;
    }
    case ModelKind::kBlockDiag: {
      if (spec.block_sizes.empty()) throw InputError("make_precision: block_diag needs block sizes");
      const Index total = std::accumulate(spec.block_sizes.begin(), spec.block_sizes.end(), Index{0});
      if (total != p) throw InputError("make_precision: block sizes must sum to p");
      Index start = 0;
      for (Index b : spec.block_sizes) {
        if (b == 0) throw InputError("make_precision: empty block");
        for (Index i = start; i < start + b; ++i) {
          theta.set(i, i, 1.0);
          for (Index j = i + 1; j < start + b; ++j) theta.set(i, j, spec.block_value);
        }
        start += b;
      }
      break;
    }
    case ModelKind::kDiagonal:
      if (!spec.diagonal.empty() && spec.diagonal.size() != p)
        throw InputError("make_precision: diagonal values must have length p");
      for (Index i = 0; i < p; ++i) theta.set(i, i, spec.diagonal.empty() ? 1.0 : spec.diagonal[i]);
      break;
  }

  // Theta* must be SPD; cholesky names the failing pivot otherwise.
  SymMatrix sigma = invert_spd(theta);
  if (spec.kind == ModelKind::kToeplitzCov) {
    for (Index i = 0; i < p; ++i)
      for (Index j = i; j < p; ++j)
        sigma.set(i, j, std::pow(spec.rho, static_cast<double>(j - i)));
  }
  EdgeSet support = EdgeSet::nonzeros(theta);
  return {std::move(theta), std::move(sigma), std::move(support)};
}

std::vector<double> standard_normal_draws(Index count, SeededRng& rng) {
  std::vector<double> out(count);
  for (auto& x : out) x = rng.normal();
  return out;
}

DataMatrix sample_gaussian_with_factor(const Eigen::MatrixXd& sigma_factor, Index n, SeededRng& rng) {
  const Eigen::Index p = sigma_factor.rows();
  Eigen::MatrixXd z(static_cast<Eigen::Index>(n), p);
  for (Eigen::Index r = 0; r < z.rows(); ++r)
    for (Eigen::Index c = 0; c < p; ++c) z(r, c) = rng.normal();
  // Row x_r = L z_r, i.e. X = Z L^T.
  Eigen::MatrixXd x = z * sigma_factor.transpose().triangularView<Eigen::Upper>();
  return DataMatrix(std::move(x));
}

DataMatrix sample_gaussian(const SymMatrix& theta_star, Index n, SeededRng& rng) {
  if (n == 0) throw InputError("sample_gaussian: n must be positive");
  const Eigen::MatrixXd sigma = invert_spd(theta_star.dense());
  return sample_gaussian_with_factor(cholesky(sigma), n, rng);
}

}  // namespace dsglasso
