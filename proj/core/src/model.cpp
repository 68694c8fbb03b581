#include "weakiv/model.hpp"

#include <cmath>
#include <string>

#include "weakiv/errors.hpp"
#include "weakiv/rng.hpp"

namespace weakiv {

void validate(const ModelConfig& config) {
  if (config.k < 1) throw Error(ErrorKind::InvalidInput, "k must be >= 1");
  if (!std::isfinite(config.beta0)) throw Error(ErrorKind::InvalidInput, "beta0 must be finite");
  const Eigen::Index n = 2 * static_cast<Eigen::Index>(config.k);
  if (config.sigma.rows() != n || config.sigma.cols() != n) {
    throw Error(ErrorKind::DimensionMismatch,
                "sigma must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  require_spd(config.sigma, "sigma");
}

RotatedBlocks build_blocks(const ModelConfig& config) {
  validate(config);
  const Eigen::Index k = config.k;
  const double b = config.beta0;

  // (B0' (x) I) Sigma (B0 (x) I) with B0' (x) I = [[I, -b I], [0, I]].
  Matrix rot = Matrix::Identity(2 * k, 2 * k);
  rot.topRightCorner(k, k) = -b * Matrix::Identity(k, k);

  RotatedBlocks out;
  out.sigma0 = rot * config.sigma * rot.transpose();
  out.sigma0 = 0.5 * (out.sigma0 + out.sigma0.transpose());
  require_spd(out.sigma0, "sigma0");

  out.sigma11 = out.sigma0.topLeftCorner(k, k);
  out.sigma12 = out.sigma0.topRightCorner(k, k);
  out.sigma21 = out.sigma12.transpose();
  out.sigma22 = out.sigma0.bottomRightCorner(k, k);

  const Matrix inv = spd_inverse(out.sigma0);
  out.sigma_up11 = inv.topLeftCorner(k, k);
  out.sigma_up21 = inv.bottomLeftCorner(k, k);
  out.sigma_up22 = inv.bottomRightCorner(k, k);

  out.sigma11_inv = spd_inverse(out.sigma11);
  out.sigma11_inv_sqrt = sym_inv_sqrt(out.sigma11);
  out.sigma_up22_sqrt = sym_sqrt(out.sigma_up22);
  out.sigma_up22_inv_sqrt = sym_inv_sqrt(out.sigma_up22);
  out.lm_direction = out.sigma11_inv_sqrt * out.sigma_up22_inv_sqrt;
  return out;
}

DesignPoint make_design_point(const Vector& mu, double delta, const RotatedBlocks& blocks) {
  if (mu.size() != blocks.k()) throw Error(ErrorKind::DimensionMismatch, "mu must have k entries");
  DesignPoint p;
  p.mu = mu;
  p.delta = delta;
  p.d = delta * delta * mu.dot(blocks.sigma11_inv * mu);
  return p;
}

Vector to_rotated(const Vector& vec_r, double beta0) {
  const Eigen::Index k = vec_r.size() / 2;
  Vector out = vec_r;
  out.head(k) -= beta0 * vec_r.tail(k);
  return out;
}

Vector from_rotated(const Vector& vec_r0, double beta0) {
  const Eigen::Index k = vec_r0.size() / 2;
  Vector out = vec_r0;
  out.head(k) += beta0 * vec_r0.tail(k);
  return out;
}

StatMap build_stat_map(const ModelConfig& config, const RotatedBlocks& blocks) {
  const Eigen::Index k = config.k;
  const double b = config.beta0;
  const Matrix b_row = kron_row(1.0, -b, k);  // (b0' (x) I)
  const Matrix a_row = kron_row(b, 1.0, k);   // (a0' (x) I)

  const Matrix sigma_inv = spd_inverse(config.sigma);

  const Matrix s_inner = b_row * config.sigma * b_row.transpose();
  const Matrix t_inner = a_row * sigma_inv * a_row.transpose();
  require_spd(0.5 * (s_inner + s_inner.transpose()), "(b0'(x)I) Sigma (b0(x)I)");
  require_spd(0.5 * (t_inner + t_inner.transpose()), "(a0'(x)I) Sigma^-1 (a0(x)I)");

  StatMap map;
  map.s_rows = sym_inv_sqrt(s_inner) * b_row;
  map.t_rows = sym_inv_sqrt(t_inner) * a_row * sigma_inv;

  Matrix stacked(2 * k, 2 * k);
  stacked.topRows(k) = map.s_rows;
  stacked.bottomRows(k) = map.t_rows;
  Eigen::JacobiSVD<Matrix> svd(stacked);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  map.condition = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
  if (!(map.condition < kMaxMapCondition)) {
    throw Error(ErrorKind::SingularMap,
                "stacked (S,T) map is numerically singular (condition " +
                    std::to_string(map.condition) + ")");
  }
  map.inverse = stacked.partialPivLu().inverse();
  (void)blocks;
  return map;
}

StatPair apply(const StatMap& map, const Vector& vec_r) {
  return StatPair{map.s_rows * vec_r, map.t_rows * vec_r};
}

Vector invert(const StatMap& map, const StatPair& pair) {
  const Eigen::Index k = pair.s.size();
  return map.inverse.leftCols(k) * pair.s + map.inverse.rightCols(k) * pair.t;
}

StatPair compute_st(const Vector& vec_r, const ModelConfig& config, const RotatedBlocks& blocks) {
  if (vec_r.size() != 2 * config.k) throw Error(ErrorKind::DimensionMismatch, "vec_r must have 2k entries");
  const Eigen::Index k = config.k;
  const double b = config.beta0;
  const Matrix b_row = kron_row(1.0, -b, k);
  const Matrix a_row = kron_row(b, 1.0, k);
  const Matrix sigma_inv = spd_inverse(config.sigma);

  const Matrix s_inner = b_row * config.sigma * b_row.transpose();
  const Matrix t_inner = a_row * sigma_inv * a_row.transpose();
  require_spd(0.5 * (s_inner + s_inner.transpose()), "(b0'(x)I) Sigma (b0(x)I)");
  require_spd(0.5 * (t_inner + t_inner.transpose()), "(a0'(x)I) Sigma^-1 (a0(x)I)");
  (void)blocks;
  return StatPair{sym_inv_sqrt(s_inner) * (b_row * vec_r),
                  sym_inv_sqrt(t_inner) * (a_row * (sigma_inv * vec_r))};
}

Vector invert_st(const StatPair& pair, const ModelConfig& config, const RotatedBlocks& blocks) {
  if (pair.s.size() != config.k || pair.t.size() != config.k) {
    throw Error(ErrorKind::DimensionMismatch, "S and T must have k entries");
  }
  return invert(build_stat_map(config, blocks), pair);
}

Matrix rotated_factor(const RotatedBlocks& blocks) {
  Eigen::LLT<Matrix> llt(blocks.sigma0);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NonPositiveDefinite, "sigma0 Cholesky failed");
  return llt.matrixL();
}

void draw_noise(std::uint64_t seed, std::uint64_t index, Eigen::Ref<Vector> z) {
  NormalStream stream(stream_key(seed, {0x5a4d50ULL, index}));
  stream.fill(z);
}

std::vector<Vector> sample_vec_r(const DesignPoint& point, const ModelConfig& config,
                                 std::uint64_t seed, std::size_t n_draws) {
  if (n_draws < 1) throw Error(ErrorKind::InvalidInput, "n_draws must be >= 1");
  const RotatedBlocks blocks = build_blocks(config);
  if (point.mu.size() != config.k) throw Error(ErrorKind::DimensionMismatch, "mu must have k entries");
  const Eigen::Index k = config.k;
  const Matrix factor = rotated_factor(blocks);

  Vector mean(2 * k);
  mean.head(k) = point.delta * point.mu;
  mean.tail(k) = point.mu;

  std::vector<Vector> draws;
  draws.reserve(n_draws);
  Vector z(2 * k);
  for (std::size_t i = 0; i < n_draws; ++i) {
    draw_noise(seed, i, z);
    draws.push_back(from_rotated(mean + factor * z, config.beta0));
  }
  return draws;
}

Model make_model(ModelConfig config) {
  Model m;
  m.blocks = build_blocks(config);
  m.map = build_stat_map(config, m.blocks);
  m.sigma0_factor = rotated_factor(m.blocks);
  m.config = std::move(config);
  return m;
}

}  // namespace weakiv
