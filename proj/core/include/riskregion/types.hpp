#ifndef RISKREGION_TYPES_HPP
#define RISKREGION_TYPES_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace riskregion {

/// A point in R^d with d <= 3. Unused trailing coordinates are zero.
using Vec = std::array<double, 3>;

/// Raised when an estimation stage cannot produce a result from the data it
/// was given (degenerate spacings, non-heavy tail, empty spectral estimate).
class EstimationError : public std::runtime_error {
 public:
  EstimationError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

inline void check_dimension(int d) {
  if (d != 2 && d != 3) {
    throw std::invalid_argument("dimension must be 2 or 3, got " + std::to_string(d));
  }
}

/// Row-major collection of n vectors in R^d.
class Sample {
 public:
  Sample() = default;
  explicit Sample(int dim) : dim_(dim) { check_dimension(dim); }
  Sample(int dim, std::vector<double> flat) : dim_(dim), data_(std::move(flat)) {
    check_dimension(dim);
    if (data_.size() % static_cast<std::size_t>(dim) != 0) {
      throw std::invalid_argument("Sample: flat data size is not a multiple of the dimension");
    }
  }

  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return data_.size() / static_cast<std::size_t>(dim_); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  Vec point(std::size_t i) const {
    Vec v{0.0, 0.0, 0.0};
    for (int j = 0; j < dim_; ++j) v[j] = data_[i * static_cast<std::size_t>(dim_) + j];
    return v;
  }
  void push_back(std::span<const double> x) {
    if (static_cast<int>(x.size()) != dim_) throw std::invalid_argument("Sample: row dimension mismatch");
    data_.insert(data_.end(), x.begin(), x.end());
  }
  void push_back(const Vec& x) { push_back(std::span<const double>(x.data(), static_cast<std::size_t>(dim_))); }
  void reserve(std::size_t n) { data_.reserve(n * static_cast<std::size_t>(dim_)); }

  const std::vector<double>& flat() const noexcept { return data_; }

  /// Euclidean norms of all rows.
  std::vector<double> radii() const;
  /// a * sample.
  Sample scaled(double a) const;

 private:
  int dim_ = 2;
  std::vector<double> data_;
};

inline double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

inline std::vector<double> Sample::radii() const {
  std::vector<double> r(size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = norm(row(i));
  return r;
}

inline Sample Sample::scaled(double a) const {
  std::vector<double> out(data_);
  for (double& v : out) v *= a;
  return Sample(dim_, std::move(out));
}

/// Seeded 64-bit generator. Uniform variates are formed from the raw bits so
/// that sample streams are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() noexcept {
    // splitmix64
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  /// Uniform on the open interval (0, 1).
  double uniform() noexcept { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) noexcept {
    const auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }
  double normal() noexcept;

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Derive an independent stream seed from a base seed and a list of labels.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> labels) noexcept;

}  // namespace riskregion

#endif  // RISKREGION_TYPES_HPP
