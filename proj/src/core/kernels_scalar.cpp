#include <cmath>
#include <cstdlib>
#include <cstring>

#include "plk/kernels.hpp"

namespace plk::kernels {

namespace scalar {

double abs_trapezoid(std::span<const double> y, double dt) {
  if (y.size() < 2) return 0.0;
  double interior = 0.0;
  for (std::size_t i = 1; i + 1 < y.size(); ++i) interior += std::abs(y[i]);
  return dt * (interior + 0.5 * (std::abs(y.front()) + std::abs(y.back())));
}

double sum_squares(std::span<const double> y) {
  double acc = 0.0;
  for (double v : y) acc += v * v;
  return acc;
}

double max_abs(std::span<const double> y) {
  double m = 0.0;
  for (double v : y) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace scalar

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::kAvx2:
      return "avx2";
    case Isa::kScalar:
      break;
  }
  return "scalar";
}

bool avx2_available() noexcept {
#if defined(PLK_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

namespace {

Isa detect() noexcept {
  const char* force = std::getenv("PLK_ISA");
  if (force != nullptr && std::strcmp(force, "scalar") == 0) return Isa::kScalar;
  return avx2_available() ? Isa::kAvx2 : Isa::kScalar;
}

}  // namespace

Isa active_isa() noexcept {
  static const Isa isa = detect();
  return isa;
}

double abs_trapezoid(std::span<const double> y, double dt) {
#if defined(PLK_HAVE_AVX2)
  if (active_isa() == Isa::kAvx2) return avx2::abs_trapezoid(y, dt);
#endif
  return scalar::abs_trapezoid(y, dt);
}

double sum_squares(std::span<const double> y) {
#if defined(PLK_HAVE_AVX2)
  if (active_isa() == Isa::kAvx2) return avx2::sum_squares(y);
#endif
  return scalar::sum_squares(y);
}

double max_abs(std::span<const double> y) {
#if defined(PLK_HAVE_AVX2)
  if (active_isa() == Isa::kAvx2) return avx2::max_abs(y);
#endif
  return scalar::max_abs(y);
}

}  // namespace plk::kernels
