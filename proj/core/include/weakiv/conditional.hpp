#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "weakiv/model.hpp"
#include "weakiv/q_profile.hpp"

namespace weakiv {

enum class TestKind { AR, LM, CLR, CQLR1, CQLR2, CLC };

inline constexpr std::array<TestKind, 6> kAllTests = {TestKind::AR,    TestKind::LM,    TestKind::CLR,
                                                      TestKind::CQLR1, TestKind::CQLR2, TestKind::CLC};

std::string_view to_string(TestKind kind) noexcept;
/// Case-insensitive. Throws InvalidInput for unknown names.
TestKind parse_test_kind(std::string_view name);
bool is_conditional(TestKind kind) noexcept;

/// CLC weight w(T), required to land in [0, 1].
using WeightFunction = std::function<double(const Vector& t)>;

inline constexpr int kDefaultCondDraws = 10000;
inline constexpr int kMinCondDraws = 1000;
/// Conditional draws come from independent streams of this many draws each.
inline constexpr int kDrawChunk = 1024;
/// Stride of the coarse grid subset tried first when comparing LR draws.
inline constexpr int kCoarseStride = 8;

struct McOptions {
  int n_draws = kDefaultCondDraws;
  std::uint64_t seed = 0;
  WeightFunction clc_weight;
};

struct TestOutcome {
  TestKind test = TestKind::AR;
  double statistic = 0.0;
  double critical_value = 0.0;
  bool reject = false;
  double alpha = 0.05;
  int n_cond_draws = 0;  // 0 for tests with exact critical values
  std::uint64_t seed = 0;
  bool degenerate = false;  // T numerically zero: LM direction undefined
};

/// Throws InvalidWeight unless 0 <= w <= 1.
double clc_stat(double ar, double lm, double w);

/// 1-based rank ceil((1 - alpha) n) of the upper empirical quantile.
int quantile_rank(double alpha, int n_draws);

/// Model-level precomputation shared by every conditional law: vec(R) = A S + B T,
/// and per-grid-direction whitened images of A and B.
class ConditionalKernel {
 public:
  ConditionalKernel(const Model& model, const QProfile& profile);

  const Model& model() const { return *model_; }
  const QProfile& profile() const { return *profile_; }
  Eigen::Index k() const { return model_->k(); }

 private:
  friend class ConditionalLaw;
  const Model* model_;
  const QProfile* profile_;
  Matrix a_cols_, b_cols_;
  Matrix g_stack_, hb_stack_;
  Matrix g_coarse_;  // every kCoarseStride-th grid block of g_stack_
  // Kronecker surrogate Sigma <= rho (Omega2 (x) Psi): then
  // inf Q >= lambda_min(Rw' Rw) / rho with Rw = Psi^{-1/2} [r1 r2] Omega2^{-1/2}
  // and Rw stacked as E S + F T.
  Matrix e_stack_, f_stack_;
  double rho_ = 1.0;
};

/// Null law of a statistic given T: S* ~ N(0, I_k) with T held fixed.
class ConditionalLaw {
 public:
  struct Workspace {
    explicit Workspace(Eigen::Index k);
    QProfile::Workspace q;
    Vector s, z, zc, y, vec_r;
    std::array<double, kProfileGridSize> grid{};
  };

  /// Throws DegenerateDirection for LM-based kinds when T is numerically zero,
  /// InvalidWeight for a CLC weight outside [0, 1].
  ConditionalLaw(const ConditionalKernel& kernel, TestKind kind, const Vector& t,
                 const WeightFunction& weight = {});

  TestKind kind() const { return kind_; }
  Eigen::Index k() const { return kernel_->k(); }

  double statistic(const Vector& s, Workspace& ws) const;
  /// statistic(s) >= observed, resolved with cheap bounds where possible.
  bool at_least(const Vector& s, double observed, Workspace& ws) const;
  /// Interval [lower, upper] containing statistic(s), from cheap LR bounds.
  std::pair<double, double> bounds(const Vector& s, Workspace& ws) const;

 private:
  void lr_grid(const Vector& s, Workspace& ws) const;
  double lr_floor(const Vector& s, Workspace& ws) const;
  double coarse_min(const Vector& s, Workspace& ws) const;
  double lm_of(const Vector& s) const;

  const ConditionalKernel* kernel_;
  TestKind kind_;
  Vector g_hat_;
  double r_ = 0.0;
  double w_ = 0.0;
  Vector h_;   // whitened grid image of B T
  Vector h_coarse_;
  Vector ft_;  // F T
  Vector bt_;  // B T
};

/// Stream key for conditional draws of `kind` under a root seed and optional
/// replication counter.
std::uint64_t conditional_key(std::uint64_t seed, TestKind kind);
std::uint64_t conditional_key(std::uint64_t seed, TestKind kind, std::uint64_t replication);

/// All n_draws conditional statistics, in draw order.
std::vector<double> conditional_draws(const ConditionalLaw& law, int n_draws, std::uint64_t key);

/// Order statistic of rank quantile_rank(alpha, n_draws) among the draws.
double conditional_quantile(const ConditionalLaw& law, double alpha, int n_draws, std::uint64_t key);

/// reject[i] = observed > conditional_quantile(law, alphas[i], ...), decided
/// with early exit; identical to the full comparison.
std::vector<bool> conditional_decisions(const ConditionalLaw& law, double observed,
                                        std::span<const double> alphas, int n_draws, std::uint64_t key);

/// Throws InvalidInput for alpha outside (0, 0.5], InsufficientDraws when
/// n_draws < 1000 or the quantile rank exceeds n_draws.
double conditional_critical_value(TestKind kind, const Vector& t, const Model& model, double alpha,
                                  int n_draws, std::uint64_t seed, const WeightFunction& weight = {});

TestOutcome run_test(TestKind kind, const Vector& vec_r, const Model& model, double alpha,
                     const McOptions& options = {});
/// Variant reusing a profile built once for the model.
TestOutcome run_test(TestKind kind, const Vector& vec_r, const Model& model, const QProfile& profile,
                     double alpha, const McOptions& options = {});

void require_alpha(double alpha);
void require_draws(double alpha, int n_draws);

}  // namespace weakiv
