#pragma once

// Reduction kernels used on long sampled signals (impulse responses in the
// L1-norm quadrature, closed-loop traces). Each kernel has a portable
// scalar reference and an AVX2 variant; the dispatcher picks one at runtime.
// Variants differ only in summation order, so results agree to rounding.

#include <cstddef>
#include <span>
#include <string_view>

namespace plk::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa) noexcept;

/// True when the running CPU (and the build) supports AVX2.
bool avx2_available() noexcept;

/// ISA used by the dispatching entry points. Detected once; the environment
/// variable PLK_ISA=scalar forces the reference path.
Isa active_isa() noexcept;

/// Trapezoidal integral of |y(t)| for samples spaced by dt.
double abs_trapezoid(std::span<const double> y, double dt);

/// Sum of y_i^2.
double sum_squares(std::span<const double> y);

/// max_i |y_i|, 0 for an empty span.
double max_abs(std::span<const double> y);

namespace scalar {
double abs_trapezoid(std::span<const double> y, double dt);
double sum_squares(std::span<const double> y);
double max_abs(std::span<const double> y);
}  // namespace scalar

namespace avx2 {
// Callable only when avx2_available().
double abs_trapezoid(std::span<const double> y, double dt);
double sum_squares(std::span<const double> y);
double max_abs(std::span<const double> y);
}  // namespace avx2

}  // namespace plk::kernels
