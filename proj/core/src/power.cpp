#include "weakiv/power.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "weakiv/errors.hpp"
#include "weakiv/parallel.hpp"
#include "weakiv/special.hpp"
#include "weakiv/statistics.hpp"

namespace weakiv {
namespace {

constexpr std::size_t kRepChunk = 128;

struct Counts {
  // [alpha][test][delta]
  std::vector<int> reject;
  std::vector<int> degenerate;  // [test][delta]
};

class Simulator {
 public:
  Simulator(const PowerRequest& req, const std::vector<double>& alphas)
      : req_(req),
        alphas_(alphas),
        model_(make_model(req.config)),
        profile_(model_.config),
        kernel_(model_, profile_),
        n_tests_(req.tests.size()),
        n_delta_(req.delta_grid.size()) {
    const Eigen::Index k = model_.k();
    for (double delta : req.delta_grid) {
      Vector mean(2 * k);
      mean.head(k) = delta * req.mu;
      mean.tail(k) = req.mu;
      means_.push_back(mean);
    }
    for (double alpha : alphas) {
      cv_k_.push_back(chi2_quantile(1.0 - alpha, static_cast<int>(k)));
      cv_1_.push_back(chi2_quantile(1.0 - alpha, 1));
    }
  }

  Counts run() const {
    const std::size_t n = static_cast<std::size_t>(req_.n_outer);
    const std::size_t n_chunks = (n + kRepChunk - 1) / kRepChunk;
    std::vector<Counts> partial(n_chunks);
    parallel_for(n_chunks, req_.threads, [&](std::size_t c) {
      partial[c] = blank();
      const std::size_t end = std::min(n, (c + 1) * kRepChunk);
      for (std::size_t rep = c * kRepChunk; rep < end; ++rep) replicate(rep, partial[c]);
    });
    Counts total = blank();
    for (const Counts& p : partial) {
      for (std::size_t i = 0; i < total.reject.size(); ++i) total.reject[i] += p.reject[i];
      for (std::size_t i = 0; i < total.degenerate.size(); ++i) total.degenerate[i] += p.degenerate[i];
    }
    return total;
  }

  const Model& model() const { return model_; }

 private:
  Counts blank() const {
    Counts c;
    c.reject.assign(alphas_.size() * n_tests_ * n_delta_, 0);
    c.degenerate.assign(n_tests_ * n_delta_, 0);
    return c;
  }

  std::size_t slot(std::size_t a, std::size_t t, std::size_t d) const { return (a * n_tests_ + t) * n_delta_ + d; }

  void replicate(std::size_t rep, Counts& counts) const {
    const Eigen::Index k = model_.k();
    Vector z(2 * k);
    draw_noise(req_.seed, rep, z);
    const Vector noise = model_.sigma0_factor * z;
    for (std::size_t d = 0; d < n_delta_; ++d) {
      const Vector vec_r = from_rotated(means_[d] + noise, model_.config.beta0);
      const StatPair pair = apply(model_.map, vec_r);
      const double ar = ar_stat(pair.s);
      for (std::size_t t = 0; t < n_tests_; ++t) {
        decide(req_.tests[t], rep, vec_r, pair, ar, t, d, counts);
      }
    }
  }

  void decide(TestKind kind, std::size_t rep, const Vector& vec_r, const StatPair& pair, double ar,
              std::size_t t, std::size_t d, Counts& counts) const {
    const int k = static_cast<int>(model_.k());
    auto record = [&](std::size_t a, bool reject) {
      if (reject) ++counts.reject[slot(a, t, d)];
    };
    if (kind == TestKind::AR) {
      for (std::size_t a = 0; a < alphas_.size(); ++a) record(a, ar > cv_k_[a]);
      return;
    }
    if (kind == TestKind::CLR) {
      const double lr = std::max(0.0, ar - profile_.minimize(vec_r).q_min);
      if (k == 1) {
        for (std::size_t a = 0; a < alphas_.size(); ++a) record(a, lr > cv_k_[a]);
        return;
      }
      const ConditionalLaw law(kernel_, kind, pair.t);
      const std::vector<bool> rej = conditional_decisions(law, lr, alphas_, req_.n_cond,
                                                          conditional_key(req_.seed, kind, rep));
      for (std::size_t a = 0; a < alphas_.size(); ++a) record(a, rej[a]);
      return;
    }

    LmPair lm;
    try {
      lm = lm_stats(pair, model_.blocks);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateDirection) throw;
      ++counts.degenerate[t * n_delta_ + d];
      return;
    }
    lm.lm = std::min(lm.lm, ar);
    if (kind == TestKind::LM) {
      for (std::size_t a = 0; a < alphas_.size(); ++a) record(a, lm.lm > cv_1_[a]);
      return;
    }
    const RankPair ranks = rank_stats(pair.t, model_.blocks);
    double observed = 0.0;
    if (kind == TestKind::CQLR1) observed = qlr_stat(ar, lm.lm, ranks.r1);
    if (kind == TestKind::CQLR2) observed = qlr_stat(ar, lm.lm, ranks.r2);
    if (kind == TestKind::CLC) observed = clc_stat(ar, lm.lm, req_.clc_weight(pair.t));
    const ConditionalLaw law(kernel_, kind, pair.t, req_.clc_weight);
    const std::vector<bool> rej = conditional_decisions(law, observed, alphas_, req_.n_cond,
                                                        conditional_key(req_.seed, kind, rep));
    for (std::size_t a = 0; a < alphas_.size(); ++a) record(a, rej[a]);
  }

  const PowerRequest& req_;
  std::vector<double> alphas_;
  Model model_;
  QProfile profile_;
  ConditionalKernel kernel_;
  std::size_t n_tests_, n_delta_;
  std::vector<Vector> means_;
  std::vector<double> cv_k_, cv_1_;
};

void append_number(std::string& out, double v) {
  if (std::isnan(v)) {
    out += "nan";
    return;
  }
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

}  // namespace

void validate(const PowerRequest& req) {
  validate(req.config);
  if (req.mu.size() != req.config.k) throw Error(ErrorKind::DimensionMismatch, "mu must have k entries");
  if (!req.mu.allFinite()) throw Error(ErrorKind::InvalidInput, "mu must be finite");
  if (req.delta_grid.empty()) throw Error(ErrorKind::InvalidInput, "delta grid is empty");
  for (std::size_t i = 0; i < req.delta_grid.size(); ++i) {
    if (!std::isfinite(req.delta_grid[i])) throw Error(ErrorKind::InvalidInput, "delta grid must be finite");
    if (i > 0 && req.delta_grid[i] < req.delta_grid[i - 1]) {
      throw Error(ErrorKind::InvalidInput, "delta grid must be sorted");
    }
  }
  if (req.tests.empty()) throw Error(ErrorKind::InvalidInput, "no tests requested");
  if (req.n_outer < kMinOuterReps) throw Error(ErrorKind::InsufficientDraws, "n_outer must be >= 1000");
  require_alpha(req.alpha);
  for (TestKind kind : req.tests) {
    if (is_conditional(kind)) require_draws(req.alpha, req.n_cond);
    if (kind == TestKind::CLC && !req.clc_weight) throw Error(ErrorKind::InvalidWeight, "CLC needs a weight function");
  }
}

std::vector<PowerTable> power_curves(const PowerRequest& req, const std::vector<double>& alphas) {
  for (double alpha : alphas) {
    PowerRequest check = req;
    check.alpha = alpha;
    validate(check);
  }
  const Simulator sim(req, alphas);
  const Counts counts = sim.run();
  const std::size_t n_tests = req.tests.size();
  const std::size_t n_delta = req.delta_grid.size();
  std::vector<PowerTable> tables(alphas.size());
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    for (std::size_t t = 0; t < n_tests; ++t) {
      for (std::size_t d = 0; d < n_delta; ++d) {
        PowerRow row;
        row.test = req.tests[t];
        row.delta = req.delta_grid[d];
        row.d = make_design_point(req.mu, row.delta, sim.model().blocks).d;
        row.n_outer = req.n_outer;
        row.seed = req.seed;
        row.alpha = alphas[a];
        row.n_degenerate = counts.degenerate[t * n_delta + d];
        const int rejects = counts.reject[(a * n_tests + t) * n_delta + d];
        if (row.n_degenerate == req.n_outer) {
          row.power = std::numeric_limits<double>::quiet_NaN();
          row.mc_se = std::numeric_limits<double>::quiet_NaN();
        } else {
          row.power = static_cast<double>(rejects) / req.n_outer;
          row.mc_se = std::sqrt(row.power * (1.0 - row.power) / req.n_outer);
        }
        tables[a].rows.push_back(row);
      }
    }
  }
  return tables;
}

PowerTable power_curve(const PowerRequest& req) { return power_curves(req, {req.alpha}).front(); }

PowerTable size_sweep(const ModelConfig& config, const std::vector<Vector>& mu_list,
                      const std::vector<TestKind>& tests, double alpha, int n_outer, std::uint64_t seed,
                      int n_cond, unsigned threads) {
  PowerTable out;
  for (std::size_t i = 0; i < mu_list.size(); ++i) {
    PowerRequest req;
    req.config = config;
    req.mu = mu_list[i];
    req.delta_grid = {0.0};
    req.tests = tests;
    req.alpha = alpha;
    req.n_outer = n_outer;
    req.n_cond = n_cond;
    req.seed = seed;
    req.threads = threads;
    for (PowerRow row : power_curve(req).rows) {
      row.mu_index = i;
      out.rows.push_back(row);
    }
  }
  return out;
}

std::string to_csv(const PowerTable& table) {
  std::string out = "test,delta,d,power,mc_se,n_outer,seed\n";
  for (const PowerRow& row : table.rows) {
    out += to_string(row.test);
    out += ',';
    append_number(out, row.delta);
    out += ',';
    append_number(out, row.d);
    out += ',';
    append_number(out, row.power);
    out += ',';
    append_number(out, row.mc_se);
    out += ',';
    out += std::to_string(row.n_outer);
    out += ',';
    out += std::to_string(row.seed);
    out += '\n';
  }
  return out;
}

}  // namespace weakiv
