#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Core>

namespace weakiv {

/// Mixes a root seed with a list of counters (stream ids, draw indices) into
/// an engine seed. Pure function: the same inputs always select the same
/// stream, independent of scheduling.
std::uint64_t stream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) noexcept;

/// Standard-normal stream owned by one logical task.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t key) : engine_(key) {}

  double operator()() { return dist_(engine_); }

  void fill(Eigen::Ref<Eigen::VectorXd> out) {
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = dist_(engine_);
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> dist_;
};

}  // namespace weakiv
