#include "weakiv/conditional.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

#include "weakiv/errors.hpp"
#include "weakiv/rng.hpp"
#include "weakiv/special.hpp"
#include "weakiv/statistics.hpp"

namespace weakiv {
namespace {

constexpr std::uint64_t kConditionalStream = 0x434f4e44;  // "COND"

std::uint64_t test_id(TestKind kind) { return static_cast<std::uint64_t>(kind); }

void draw_chunk(std::uint64_t key, int chunk, int count, const ConditionalLaw& law,
                ConditionalLaw::Workspace& ws, std::vector<double>& out) {
  NormalStream normal(stream_key(key, {static_cast<std::uint64_t>(chunk)}));
  for (int i = 0; i < count; ++i) {
    normal.fill(ws.s);
    out.push_back(law.statistic(ws.s, ws));
  }
}

}  // namespace

std::string_view to_string(TestKind kind) noexcept {
  switch (kind) {
    case TestKind::AR: return "AR";
    case TestKind::LM: return "LM";
    case TestKind::CLR: return "CLR";
    case TestKind::CQLR1: return "CQLR1";
    case TestKind::CQLR2: return "CQLR2";
    case TestKind::CLC: return "CLC";
  }
  return "unknown";
}

TestKind parse_test_kind(std::string_view name) {
  std::string upper(name);
  for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (TestKind kind : kAllTests) {
    if (to_string(kind) == upper) return kind;
  }
  throw Error(ErrorKind::InvalidInput, "unknown test '" + std::string(name) + "'");
}

bool is_conditional(TestKind kind) noexcept { return kind != TestKind::AR && kind != TestKind::LM; }

double clc_stat(double ar, double lm, double w) {
  if (!(w >= 0.0 && w <= 1.0)) throw Error(ErrorKind::InvalidWeight, "CLC weight must lie in [0, 1]");
  return w * ar + (1.0 - w) * lm;
}

int quantile_rank(double alpha, int n_draws) {
  // The 1e-9 guard keeps e.g. 0.95 * 10000 from rounding up to 9501.
  return static_cast<int>(std::ceil((1.0 - alpha) * n_draws - 1e-9));
}

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 0.5)) throw Error(ErrorKind::InvalidInput, "alpha must lie in (0, 0.5]");
}

void require_draws(double alpha, int n_draws) {
  if (n_draws < kMinCondDraws) {
    throw Error(ErrorKind::InsufficientDraws, "at least 1000 conditional draws are required");
  }
  const int m = quantile_rank(alpha, n_draws);
  if (m < 1 || m > n_draws) throw Error(ErrorKind::InsufficientDraws, "quantile rank outside the draws");
}

ConditionalKernel::ConditionalKernel(const Model& model, const QProfile& profile)
    : model_(&model), profile_(&profile) {
  const Eigen::Index k = model.k();
  a_cols_ = model.map.inverse.leftCols(k);
  b_cols_ = model.map.inverse.rightCols(k);
  g_stack_.resize(kProfileGridSize * k, k);
  hb_stack_.resize(kProfileGridSize * k, k);
  for (int j = 0; j < kProfileGridSize; ++j) {
    const double c = profile.grid_cos(j);
    const double s = profile.grid_sin(j);
    const auto w = profile.whiteners().middleRows(j * k, k).triangularView<Eigen::Lower>();
    const Matrix ga = c * a_cols_.topRows(k) - s * a_cols_.bottomRows(k);
    const Matrix gb = c * b_cols_.topRows(k) - s * b_cols_.bottomRows(k);
    g_stack_.middleRows(j * k, k) = w * ga;
    hb_stack_.middleRows(j * k, k) = w * gb;
  }
  constexpr int n_coarse = kProfileGridSize / kCoarseStride;
  g_coarse_.resize(n_coarse * k, k);
  for (int c = 0; c < n_coarse; ++c) g_coarse_.middleRows(c * k, k) = g_stack_.middleRows(c * kCoarseStride * k, k);

  // Nearest Kronecker product of Sigma (rank-one fit of its rearranged
  // blocks), falling back to block traces when the fit is not definite.
  const Matrix& sigma = model.config.sigma;
  Matrix rearranged(4, k * k);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const Matrix blk = sigma.block(a * k, b * k, k, k);
      rearranged.row(2 * b + a) = Eigen::Map<const Vector>(blk.data(), k * k).transpose();
    }
  }
  Eigen::JacobiSVD<Matrix> svd(rearranged, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vector u = svd.matrixU().col(0);
  Vector v = svd.matrixV().col(0);
  if (u(0) < 0.0) {
    u = -u;
    v = -v;
  }
  Matrix omega2(2, 2);
  omega2 << u(0), u(2), u(1), u(3);
  omega2 = 0.5 * (omega2 + omega2.transpose());
  Matrix psi = Eigen::Map<const Matrix>(v.data(), k, k);
  psi = 0.5 * (psi + psi.transpose());
  const auto definite = [](const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff() > kSpdRelativeFloor * eig.eigenvalues().maxCoeff();
  };
  if (!definite(omega2) || !definite(psi)) {
    omega2 << sigma.topLeftCorner(k, k).trace(), 0.0, 0.0, sigma.bottomRightCorner(k, k).trace();
    psi = Matrix::Identity(k, k);
  }
  Matrix kron(2 * k, 2 * k);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) kron.block(a * k, b * k, k, k) = omega2(a, b) * psi;
  }
  const Matrix kron_inv_sqrt = sym_inv_sqrt(kron);
  Eigen::SelfAdjointEigenSolver<Matrix> whitened(kron_inv_sqrt * sigma * kron_inv_sqrt, Eigen::EigenvaluesOnly);
  rho_ = whitened.eigenvalues().maxCoeff();

  const Matrix psi_inv_sqrt = sym_inv_sqrt(psi);
  const Matrix omega_inv_sqrt = sym_inv_sqrt(omega2);
  e_stack_.resize(2 * k, k);
  f_stack_.resize(2 * k, k);
  for (int c = 0; c < 2; ++c) {
    e_stack_.middleRows(c * k, k) =
        psi_inv_sqrt * (omega_inv_sqrt(0, c) * a_cols_.topRows(k) + omega_inv_sqrt(1, c) * a_cols_.bottomRows(k));
    f_stack_.middleRows(c * k, k) =
        psi_inv_sqrt * (omega_inv_sqrt(0, c) * b_cols_.topRows(k) + omega_inv_sqrt(1, c) * b_cols_.bottomRows(k));
  }
}

ConditionalLaw::Workspace::Workspace(Eigen::Index k)
    : q(k), s(k), z(kProfileGridSize * k), zc(kProfileGridSize / kCoarseStride * k), y(2 * k), vec_r(2 * k) {}

ConditionalLaw::ConditionalLaw(const ConditionalKernel& kernel, TestKind kind, const Vector& t,
                               const WeightFunction& weight)
    : kernel_(&kernel), kind_(kind) {
  const RotatedBlocks& blocks = kernel.model().blocks;
  if (t.size() != kernel.k()) throw Error(ErrorKind::DimensionMismatch, "T must have k entries");
  const RankPair ranks = rank_stats(t, blocks);
  switch (kind) {
    case TestKind::AR:
      break;
    case TestKind::CLR:
      h_ = kernel.hb_stack_ * t;
      h_coarse_.resize(kernel.g_coarse_.rows());
      for (int c = 0; c < kProfileGridSize / kCoarseStride; ++c) {
        h_coarse_.segment(c * kernel.k(), kernel.k()) = h_.segment(c * kCoarseStride * kernel.k(), kernel.k());
      }
      bt_ = kernel.b_cols_ * t;
      ft_ = kernel.f_stack_ * t;
      break;
    case TestKind::LM:
    case TestKind::CQLR1:
    case TestKind::CQLR2:
    case TestKind::CLC: {
      const Vector g = blocks.lm_direction * t;
      const double norm = g.norm();
      if (!(norm > kDegenerateDirection)) {
        throw Error(ErrorKind::DegenerateDirection, "LM direction vanishes (T numerically zero)");
      }
      g_hat_ = g / norm;
      r_ = kind == TestKind::CQLR1 ? ranks.r1 : ranks.r2;
      if (kind == TestKind::CLC) {
        if (!weight) throw Error(ErrorKind::InvalidWeight, "CLC needs a weight function");
        w_ = weight(t);
        clc_stat(0.0, 0.0, w_);  // validates the weight
      }
      break;
    }
  }
}

double ConditionalLaw::lm_of(const Vector& s) const {
  const double v = s.dot(g_hat_);
  return v * v;
}

void ConditionalLaw::lr_grid(const Vector& s, Workspace& ws) const {
  const Eigen::Index k = kernel_->k();
  ws.z = h_;
  ws.z.noalias() += kernel_->g_stack_ * s;
  for (int j = 0; j < kProfileGridSize; ++j) ws.grid[j] = ws.z.segment(j * k, k).squaredNorm();
}

double ConditionalLaw::statistic(const Vector& s, Workspace& ws) const {
  const double ar = s.squaredNorm();
  switch (kind_) {
    case TestKind::AR:
      return ar;
    case TestKind::LM:
      return std::min(lm_of(s), ar);
    case TestKind::CQLR1:
    case TestKind::CQLR2:
      return qlr_stat(ar, std::min(lm_of(s), ar), r_);
    case TestKind::CLC:
      return w_ * ar + (1.0 - w_) * std::min(lm_of(s), ar);
    case TestKind::CLR: {
      if (kernel_->k() == 1) return ar;
      lr_grid(s, ws);
      ws.vec_r.noalias() = kernel_->a_cols_ * s;
      ws.vec_r += bt_;
      const QMinimum m = kernel_->profile().minimize_from_grid(ws.grid, ws.vec_r, ar, ws.q);
      return std::max(0.0, ar - m.q_min);
    }
  }
  return 0.0;
}

double ConditionalLaw::lr_floor(const Vector& s, Workspace& ws) const {
  // Every candidate value of Q is at least inf Q >= lambda_min / rho; the
  // margins cover rounding in the candidate evaluations.
  const Eigen::Index k = kernel_->k();
  ws.y = ft_;
  ws.y.noalias() += kernel_->e_stack_ * s;
  const auto c0 = ws.y.head(k);
  const auto c1 = ws.y.tail(k);
  const double p = c0.squaredNorm();
  const double r = c1.squaredNorm();
  const double o = c0.dot(c1);
  const double half_gap = 0.5 * (p - r);
  const double lambda_min = 0.5 * (p + r) - std::sqrt(half_gap * half_gap + o * o);
  return std::max(0.0, (lambda_min * (1.0 - 1e-8) - 1e-12 * (p + r)) / kernel_->rho_);
}

double ConditionalLaw::coarse_min(const Vector& s, Workspace& ws) const {
  const Eigen::Index k = kernel_->k();
  ws.zc = h_coarse_;
  ws.zc.noalias() += kernel_->g_coarse_ * s;
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < ws.zc.size(); c += k) best = std::min(best, ws.zc.segment(c, k).squaredNorm());
  return best;
}

std::pair<double, double> ConditionalLaw::bounds(const Vector& s, Workspace& ws) const {
  if (kind_ != TestKind::CLR) {
    const double v = statistic(s, ws);
    return {v, v};
  }
  const double ar = s.squaredNorm();
  if (kernel_->k() == 1) return {ar, ar};
  const double q_hi = coarse_min(s, ws);
  const double lower = std::max(0.0, ar - q_hi - 1e-12 * (ar + q_hi));
  const double upper = std::min(ar, ar - lr_floor(s, ws));
  return {lower, upper};
}

bool ConditionalLaw::at_least(const Vector& s, double observed, Workspace& ws) const {
  if (kind_ != TestKind::CLR || kernel_->k() == 1) return statistic(s, ws) >= observed;
  // LR* = max(0, AR* - q_min) with q_min taken over the grid, theta0 (value AR*)
  // and the refined local minima; each branch below mirrors statistic().
  if (observed <= 0.0) return true;
  const double ar = s.squaredNorm();
  if (ar < observed) return false;
  if (ar - lr_floor(s, ws) < observed) return false;
  // Any grid direction with AR* - Q_j >= observed settles the comparison, so
  // a coarse subset of the grid is tried first.
  if (ar - coarse_min(s, ws) >= observed) return true;
  lr_grid(s, ws);
  for (double q : ws.grid) {
    if (ar - q >= observed) return true;
  }
  std::array<int, kRefinedMinima> picks{};
  const QProfile& profile = kernel_->profile();
  const int n_picks = profile.local_minima(ws.grid, picks);
  if (n_picks == 0) return false;
  ws.vec_r.noalias() = kernel_->a_cols_ * s;
  ws.vec_r += bt_;
  for (int i = 0; i < n_picks; ++i) {
    double theta = 0.0;
    if (ar - profile.refine(picks[i], ws.grid, ws.vec_r, ws.q, theta) >= observed) return true;
  }
  return false;
}

std::uint64_t conditional_key(std::uint64_t seed, TestKind kind) {
  return stream_key(seed, {kConditionalStream, test_id(kind)});
}

std::uint64_t conditional_key(std::uint64_t seed, TestKind kind, std::uint64_t replication) {
  return stream_key(seed, {kConditionalStream, test_id(kind), replication});
}

std::vector<double> conditional_draws(const ConditionalLaw& law, int n_draws, std::uint64_t key) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_draws));
  ConditionalLaw::Workspace ws(law.k());
  for (int chunk = 0; chunk * kDrawChunk < n_draws; ++chunk) {
    draw_chunk(key, chunk, std::min(kDrawChunk, n_draws - chunk * kDrawChunk), law, ws, out);
  }
  return out;
}

double conditional_quantile(const ConditionalLaw& law, double alpha, int n_draws, std::uint64_t key) {
  require_alpha(alpha);
  require_draws(alpha, n_draws);
  const int m = quantile_rank(alpha, n_draws);
  ConditionalLaw::Workspace ws(law.k());

  if (law.kind() != TestKind::CLR || law.k() == 1) {
    std::vector<double> x = conditional_draws(law, n_draws, key);
    std::nth_element(x.begin(), x.begin() + (m - 1), x.end());
    return x[static_cast<std::size_t>(m - 1)];
  }

  // LR*: bracket every draw by [AR* - grid min, AR*]. Draws whose upper end is
  // below the m-th smallest lower end sit strictly below the target order
  // statistic and need no refinement.
  std::vector<double> lower, upper;
  lower.reserve(static_cast<std::size_t>(n_draws));
  upper.reserve(static_cast<std::size_t>(n_draws));
  std::vector<Vector> draws;
  draws.reserve(static_cast<std::size_t>(n_draws));
  for (int chunk = 0; chunk * kDrawChunk < n_draws; ++chunk) {
    NormalStream normal(stream_key(key, {static_cast<std::uint64_t>(chunk)}));
    const int count = std::min(kDrawChunk, n_draws - chunk * kDrawChunk);
    for (int i = 0; i < count; ++i) {
      normal.fill(ws.s);
      const auto [lo, hi] = law.bounds(ws.s, ws);
      lower.push_back(lo);
      upper.push_back(hi);
      draws.push_back(ws.s);
    }
  }
  std::vector<double> sorted_lower = lower;
  std::nth_element(sorted_lower.begin(), sorted_lower.begin() + (m - 1), sorted_lower.end());
  const double tau = sorted_lower[static_cast<std::size_t>(m - 1)];

  int below = 0;
  std::vector<double> exact;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    if (upper[i] < tau) {
      ++below;
    } else {
      exact.push_back(law.statistic(draws[i], ws));
    }
  }
  const auto rank = static_cast<std::size_t>(m - 1 - below);
  std::nth_element(exact.begin(), exact.begin() + static_cast<std::ptrdiff_t>(rank), exact.end());
  return exact[rank];
}

std::vector<bool> conditional_decisions(const ConditionalLaw& law, double observed,
                                        std::span<const double> alphas, int n_draws, std::uint64_t key) {
  // observed > X_(m)  <=>  #{X_i >= observed} <= n - m.
  std::vector<int> ranks;
  for (double alpha : alphas) {
    require_alpha(alpha);
    require_draws(alpha, n_draws);
    ranks.push_back(quantile_rank(alpha, n_draws));
  }
  ConditionalLaw::Workspace ws(law.k());
  int at_least = 0;
  int below = 0;
  for (int chunk = 0; chunk * kDrawChunk < n_draws; ++chunk) {
    NormalStream normal(stream_key(key, {static_cast<std::uint64_t>(chunk)}));
    const int count = std::min(kDrawChunk, n_draws - chunk * kDrawChunk);
    bool settled = false;
    for (int i = 0; i < count; ++i) {
      normal.fill(ws.s);
      if (law.at_least(ws.s, observed, ws)) ++at_least; else ++below;
      // Rank m is settled once #{>= observed} exceeds n - m (accept) or
      // #{< observed} reaches m (reject).
      settled = true;
      for (int m : ranks) settled = settled && (at_least > n_draws - m || below >= m);
      if (settled) break;
    }
    if (settled) break;
  }
  std::vector<bool> out;
  for (int m : ranks) out.push_back(below >= m);
  return out;
}

double conditional_critical_value(TestKind kind, const Vector& t, const Model& model, double alpha,
                                  int n_draws, std::uint64_t seed, const WeightFunction& weight) {
  require_alpha(alpha);
  require_draws(alpha, n_draws);
  const QProfile profile(model.config);
  const ConditionalKernel kernel(model, profile);
  const ConditionalLaw law(kernel, kind, t, weight);
  return conditional_quantile(law, alpha, n_draws, conditional_key(seed, kind));
}

TestOutcome run_test(TestKind kind, const Vector& vec_r, const Model& model, double alpha,
                     const McOptions& options) {
  const QProfile profile(model.config);
  return run_test(kind, vec_r, model, profile, alpha, options);
}

TestOutcome run_test(TestKind kind, const Vector& vec_r, const Model& model, const QProfile& profile,
                     double alpha, const McOptions& options) {
  require_alpha(alpha);
  if (vec_r.size() != 2 * model.k()) throw Error(ErrorKind::DimensionMismatch, "vec_r must have 2k entries");
  const int k = static_cast<int>(model.k());
  TestOutcome out;
  out.test = kind;
  out.alpha = alpha;
  out.seed = options.seed;

  const StatPair pair = apply(model.map, vec_r);
  const double ar = ar_stat(pair.s);

  if (kind == TestKind::AR || (kind == TestKind::CLR && k == 1)) {
    // At k = 1 the LR statistic equals AR and its conditional law is chi2(1).
    out.statistic = kind == TestKind::AR ? ar : lr_stat(vec_r, model.config);
    out.critical_value = chi2_quantile(1.0 - alpha, k);
    out.reject = out.statistic > out.critical_value;
    return out;
  }

  if (kind == TestKind::CLR) {
    require_draws(alpha, options.n_draws);
    out.statistic = std::max(0.0, ar - profile.minimize(vec_r).q_min);
  } else {
    LmPair lm;
    try {
      lm = lm_stats(pair, model.blocks);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateDirection) throw;
      out.degenerate = true;
      out.statistic = 0.0;
      out.critical_value = kind == TestKind::LM ? chi2_quantile(1.0 - alpha, 1)
                                                : std::numeric_limits<double>::quiet_NaN();
      out.reject = false;
      return out;
    }
    lm.lm = std::min(lm.lm, ar);
    if (kind == TestKind::LM) {
      out.statistic = lm.lm;
      out.critical_value = chi2_quantile(1.0 - alpha, 1);
      out.reject = out.statistic > out.critical_value;
      return out;
    }
    require_draws(alpha, options.n_draws);
    const RankPair ranks = rank_stats(pair.t, model.blocks);
    if (kind == TestKind::CQLR1) out.statistic = qlr_stat(ar, lm.lm, ranks.r1);
    if (kind == TestKind::CQLR2) out.statistic = qlr_stat(ar, lm.lm, ranks.r2);
    if (kind == TestKind::CLC) {
      if (!options.clc_weight) throw Error(ErrorKind::InvalidWeight, "CLC needs a weight function");
      out.statistic = clc_stat(ar, lm.lm, options.clc_weight(pair.t));
    }
  }

  const ConditionalKernel kernel(model, profile);
  const ConditionalLaw law(kernel, kind, pair.t, options.clc_weight);
  out.n_cond_draws = options.n_draws;
  out.critical_value = conditional_quantile(law, alpha, options.n_draws, conditional_key(options.seed, kind));
  out.reject = out.statistic > out.critical_value;
  return out;
}

}  // namespace weakiv
