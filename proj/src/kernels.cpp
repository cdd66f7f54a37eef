#include "mixdyn/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include "mixdyn/errors.hpp"

namespace mixdyn::kernels {

MixtureSlice make_slice(const MixtureSpec& spec, const YieldCurve& curve, double t) {
    if (spec.size() > kMaxComponents)
        throw UnsupportedModeError("mixture kernels support at most " + std::to_string(kMaxComponents) +
                                   " components");
    MixtureSlice s;
    if (t <= spec.epsilon() || t < kPointMassTime) {
        s.m = 1;
        s.log_norm[0] = 0.0;
        s.mean[0] = 0.0;
        s.inv_two_var[0] = 0.0;
        s.rate[0] = spec.common_vol() * spec.common_vol();
        s.drift[0] = spec.mode() == MixtureMode::normal ? spec.drift_rate(0, t) : 0.0;
        return s;
    }
    s.m = spec.size();
    const auto mom = spec.moments(curve, t);
    for (std::size_t i = 0; i < s.m; ++i) {
        const double w = spec.weight(i);
        s.log_norm[i] = w > 0.0 ? std::log(w) - 0.5 * std::log(mom[i].variance)
                                : -std::numeric_limits<double>::infinity();
        s.mean[i] = mom[i].mean;
        s.inv_two_var[i] = 0.5 / mom[i].variance;
        s.rate[i] = mom[i].variance_rate;
        s.drift[i] = spec.mode() == MixtureMode::normal ? spec.drift_rate(i, t) : 0.0;
    }
    return s;
}

SliceValues evaluate(const MixtureSlice& s, double z) noexcept {
    double lp[kMaxComponents];
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s.m; ++i) {
        const double d = z - s.mean[i];
        lp[i] = s.log_norm[i] - d * d * s.inv_two_var[i];
        top = lp[i] > top ? lp[i] : top;
    }
    double den = 0.0;
    double rate = 0.0;
    double drift = 0.0;
    double score = 0.0;
    double score_rate = 0.0;
    for (std::size_t i = 0; i < s.m; ++i) {
        const double w = std::exp(lp[i] - top);
        const double sc = -2.0 * (z - s.mean[i]) * s.inv_two_var[i];
        den += w;
        rate += w * s.rate[i];
        drift += w * s.drift[i];
        score += w * sc;
        score_rate += w * sc * s.rate[i];
    }
    rate /= den;
    drift /= den;
    score /= den;
    score_rate /= den;
    return {rate, drift, score_rate - score * rate};
}

namespace {

bool cpu_has_avx2() noexcept {
#if defined(MIXDYN_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

constexpr KernelTable kScalar{Isa::scalar, "scalar", detail::sigma_squared_scalar, detail::log_euler_step_scalar};
#if defined(MIXDYN_HAVE_AVX2)
constexpr KernelTable kAvx2{Isa::avx2, "avx2", detail::sigma_squared_avx2, detail::log_euler_step_avx2};
#endif

}  // namespace

bool isa_supported(Isa isa) noexcept {
    switch (isa) {
        case Isa::scalar:
            return true;
        case Isa::avx2:
            return cpu_has_avx2();
    }
    return false;
}

const KernelTable& kernel_table(Isa isa) {
    if (!isa_supported(isa)) throw UnsupportedModeError("instruction set not available on this CPU");
#if defined(MIXDYN_HAVE_AVX2)
    if (isa == Isa::avx2) return kAvx2;
#endif
    return kScalar;
}

Isa parse_isa(std::string_view name) {
    if (name == "scalar") return Isa::scalar;
    if (name == "avx2") return Isa::avx2;
    throw InputError("unknown instruction set '" + std::string(name) + "' (expected scalar or avx2)");
}

Isa preferred_isa() {
    if (const char* env = std::getenv("MIXDYN_ISA"); env != nullptr && *env != '\0') {
        const Isa requested = parse_isa(env);
        if (!isa_supported(requested))
            throw UnsupportedModeError("MIXDYN_ISA requests an instruction set this CPU lacks");
        return requested;
    }
    return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

const KernelTable& active_kernels() {
    static const KernelTable& table = kernel_table(preferred_isa());
    return table;
}

}  // namespace mixdyn::kernels
