#include "riskregion/types.hpp"

#include <numbers>

namespace riskregion {

double Rng::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> labels) noexcept {
  Rng mix(base ^ 0x5851F42D4C957F2DULL);
  std::uint64_t h = mix.next_u64();
  for (std::uint64_t label : labels) {
    Rng step(h ^ (label * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL));
    h = step.next_u64();
  }
  return h;
}

}  // namespace riskregion
