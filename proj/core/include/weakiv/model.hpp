#pragma once

// Gaussian limit experiment vec(R) ~ N(vec(mu a*'), Sigma).
//
// Stacking convention: vec(R) places the y1-side column (k entries) above the
// y2-side column. The rotated frame is R0 = R B0 with B0 = [[1, 0], [-beta0, 1]],
// so vec(R0) = (B0' (x) I_k) vec(R) ~ N(vec(mu a_Delta'), Sigma0) with
// a_Delta = (Delta, 1)'.

#include <cstdint>
#include <vector>

#include "weakiv/linalg.hpp"

namespace weakiv {

struct ModelConfig {
  int k = 1;
  double beta0 = 0.0;
  Matrix sigma;  // 2k x 2k covariance of vec(R)
};

/// Throws DimensionMismatch / NonPositiveDefinite / InvalidInput.
void validate(const ModelConfig& config);

/// Blocks of Sigma0 and of its inverse, plus a few cached derived matrices
/// that every statistic needs.
struct RotatedBlocks {
  Matrix sigma0;
  Matrix sigma11, sigma12, sigma21, sigma22;
  Matrix sigma_up11, sigma_up21, sigma_up22;  // blocks of inv(Sigma0)

  // Derived.
  Matrix sigma11_inv;
  Matrix sigma11_inv_sqrt;
  Matrix sigma_up22_sqrt;
  Matrix sigma_up22_inv_sqrt;
  /// Sigma11^{-1/2} (Sigma^22)^{-1/2}; maps T to the LM direction g.
  Matrix lm_direction;

  Eigen::Index k() const { return sigma11.rows(); }
};

RotatedBlocks build_blocks(const ModelConfig& config);

struct StatPair {
  Vector s;  // pivotal
  Vector t;  // sufficient for mu under the null
};

struct DesignPoint {
  Vector mu;
  double delta = 0.0;
  double d = 0.0;  // Delta^2 mu' Sigma11^{-1} mu
};

DesignPoint make_design_point(const Vector& mu, double delta, const RotatedBlocks& blocks);

/// vec(R) -> vec(R0).
Vector to_rotated(const Vector& vec_r, double beta0);
/// vec(R0) -> vec(R).
Vector from_rotated(const Vector& vec_r0, double beta0);

/// The stacked linear map vec(R) -> (S, T) and its inverse.
struct StatMap {
  Matrix s_rows;   // k x 2k
  Matrix t_rows;   // k x 2k
  Matrix inverse;  // 2k x 2k, maps (S; T) back to vec(R)
  double condition = 0.0;
};

/// Largest accepted condition number of the stacked (S, T) map.
inline constexpr double kMaxMapCondition = 1e12;

StatMap build_stat_map(const ModelConfig& config, const RotatedBlocks& blocks);

StatPair compute_st(const Vector& vec_r, const ModelConfig& config, const RotatedBlocks& blocks);
Vector invert_st(const StatPair& pair, const ModelConfig& config, const RotatedBlocks& blocks);

StatPair apply(const StatMap& map, const Vector& vec_r);
Vector invert(const StatMap& map, const StatPair& pair);

/// Lower Cholesky factor of Sigma0 used to draw vec(R0).
Matrix rotated_factor(const RotatedBlocks& blocks);

/// Reduced-form draws for a design point, returned in the original frame
/// (vec(R)). Draw i depends only on (seed, i).
/// Standard-normal noise z behind draw `index` of sample_vec_r, which returns
/// from_rotated(mean + factor * z).
void draw_noise(std::uint64_t seed, std::uint64_t index, Eigen::Ref<Vector> z);

std::vector<Vector> sample_vec_r(const DesignPoint& point, const ModelConfig& config,
                                 std::uint64_t seed, std::size_t n_draws);

/// Config plus everything derived from it once. Immutable after construction.
struct Model {
  ModelConfig config;
  RotatedBlocks blocks;
  StatMap map;
  Matrix sigma0_factor;

  Eigen::Index k() const { return config.k; }
};

Model make_model(ModelConfig config);

}  // namespace weakiv
