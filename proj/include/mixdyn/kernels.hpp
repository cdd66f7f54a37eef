#pragma once

#include <cstddef>
#include <span>
#include <string_view>

#include "mixdyn/mixture.hpp"

/// Data-parallel inner loops of the lognormal-mixture diffusion. Every kernel
/// has a scalar reference implementation and, where the CPU allows, an AVX2
/// variant selected at runtime. Variants agree to rounding level (see
/// tests/test_kernels.cpp); a given variant is bit-reproducible.
namespace mixdyn::kernels {

inline constexpr std::size_t kMaxComponents = 16;

/// Per-time precomputation of the Lambda weights in the kernel coordinate
/// z = ln y:
///   log Lambda_i ~ log_norm[i] - (z - mean[i])^2 * inv_two_var[i]
/// and the component variance rates nu_i(t)^2.
struct MixtureSlice {
    std::size_t m = 0;
    double log_norm[kMaxComponents];
    double mean[kMaxComponents];
    double inv_two_var[kMaxComponents];
    double rate[kMaxComponents];
    double drift[kMaxComponents];  // mu_i(t) in normal mode, unused otherwise
};

/// Slice of a mixture at time t (kernel coordinate ln y for lognormal
/// mixtures, y for normal ones). For t <= epsilon the slice has a single
/// component carrying the common rate and drift.
MixtureSlice make_slice(const MixtureSpec& spec, const YieldCurve& curve, double t);

/// Lambda-mixtures of the variance rates and drifts at z, and the z-slope of
/// the variance mixture. Scalar only; used by the level schemes.
struct SliceValues {
    double variance_rate;
    double drift;
    double variance_slope;
};
SliceValues evaluate(const MixtureSlice& slice, double z) noexcept;

/// out[k] = sigma_mix^2 at z[k] = ln y[k].
using SigmaSquaredFn = void (*)(const MixtureSlice& slice, const double* z, double* out, std::size_t n);

/// One log-Euler step for n paths:
///   s2 = sigma_mix^2(z); z += carry - s2 dt / 2 + sqrt(s2 dt) normal; acc += s2 dt
/// `carry` is the integrated rate over the step.
using LogEulerStepFn = void (*)(const MixtureSlice& slice, double carry, double dt, double* z,
                                const double* normals, double* variance_acc, std::size_t n);

enum class Isa { scalar, avx2 };

struct KernelTable {
    Isa isa;
    std::string_view name;
    SigmaSquaredFn sigma_squared;
    LogEulerStepFn log_euler_step;
};

bool isa_supported(Isa isa) noexcept;

/// Table for a specific ISA; throws UnsupportedModeError if the CPU lacks it.
const KernelTable& kernel_table(Isa isa);

/// Best ISA for this CPU, overridable with MIXDYN_ISA=scalar|avx2.
Isa preferred_isa();
const KernelTable& active_kernels();

Isa parse_isa(std::string_view name);

namespace detail {
void sigma_squared_scalar(const MixtureSlice& slice, const double* z, double* out, std::size_t n);
void log_euler_step_scalar(const MixtureSlice& slice, double carry, double dt, double* z, const double* normals,
                           double* variance_acc, std::size_t n);
#if defined(MIXDYN_HAVE_AVX2)
void sigma_squared_avx2(const MixtureSlice& slice, const double* z, double* out, std::size_t n);
void log_euler_step_avx2(const MixtureSlice& slice, double carry, double dt, double* z, const double* normals,
                         double* variance_acc, std::size_t n);
#endif
}  // namespace detail

}  // namespace mixdyn::kernels
