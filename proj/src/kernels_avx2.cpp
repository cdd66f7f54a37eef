// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include "mixdyn/kernels.hpp"

namespace mixdyn::kernels::detail {

namespace {

/// exp(x) for x <= 0, about 1 ulp. Inputs below -708 flush to zero.
inline __m256d exp_nonpositive(__m256d x) {
    const __m256d lower = _mm256_set1_pd(-708.0);
    const __m256d underflow = _mm256_cmp_pd(x, lower, _CMP_LT_OQ);
    x = _mm256_max_pd(x, lower);

    const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
    const __m256d ln2_hi = _mm256_set1_pd(6.93145751953125e-1);
    const __m256d ln2_lo = _mm256_set1_pd(1.42860682030941723212e-6);
    const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, ln2_hi, x);
    r = _mm256_fnmadd_pd(n, ln2_lo, r);

    // Taylor series to degree 13 on |r| <= ln2 / 2
    __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

    // 2^n through the exponent field; n is in [-1022, 0] here
    const __m128i n32 = _mm256_cvtpd_epi32(n);
    const __m256i n64 = _mm256_cvtepi32_epi64(n32);
    const __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
    const __m256d scaled = _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
    return _mm256_andnot_pd(underflow, scaled);
}

inline __m256d sigma_squared4(const MixtureSlice& s, __m256d z) {
    __m256d lp[kMaxComponents];
    __m256d top = _mm256_set1_pd(-__builtin_inf());
    for (std::size_t i = 0; i < s.m; ++i) {
        const __m256d d = _mm256_sub_pd(z, _mm256_set1_pd(s.mean[i]));
        const __m256d q = _mm256_mul_pd(_mm256_mul_pd(d, d), _mm256_set1_pd(s.inv_two_var[i]));
        lp[i] = _mm256_sub_pd(_mm256_set1_pd(s.log_norm[i]), q);
        top = _mm256_max_pd(top, lp[i]);
    }
    __m256d num = _mm256_setzero_pd();
    __m256d den = _mm256_setzero_pd();
    for (std::size_t i = 0; i < s.m; ++i) {
        const __m256d w = exp_nonpositive(_mm256_sub_pd(lp[i], top));
        num = _mm256_fmadd_pd(w, _mm256_set1_pd(s.rate[i]), num);
        den = _mm256_add_pd(den, w);
    }
    return _mm256_div_pd(num, den);
}

}  // namespace

void sigma_squared_avx2(const MixtureSlice& slice, const double* z, double* out, std::size_t n) {
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) _mm256_storeu_pd(out + k, sigma_squared4(slice, _mm256_loadu_pd(z + k)));
    if (k < n) sigma_squared_scalar(slice, z + k, out + k, n - k);
}

void log_euler_step_avx2(const MixtureSlice& slice, double carry, double dt, double* z, const double* normals,
                         double* variance_acc, std::size_t n) {
    const __m256d vdt = _mm256_set1_pd(dt);
    const __m256d vcarry = _mm256_set1_pd(carry);
    const __m256d half = _mm256_set1_pd(0.5);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d zk = _mm256_loadu_pd(z + k);
        const __m256d s2dt = _mm256_mul_pd(sigma_squared4(slice, zk), vdt);
        const __m256d drift = _mm256_fnmadd_pd(half, s2dt, vcarry);
        const __m256d shock = _mm256_mul_pd(_mm256_sqrt_pd(s2dt), _mm256_loadu_pd(normals + k));
        _mm256_storeu_pd(z + k, _mm256_add_pd(zk, _mm256_add_pd(drift, shock)));
        _mm256_storeu_pd(variance_acc + k, _mm256_add_pd(_mm256_loadu_pd(variance_acc + k), s2dt));
    }
    if (k < n) log_euler_step_scalar(slice, carry, dt, z + k, normals + k, variance_acc + k, n - k);
}

}  // namespace mixdyn::kernels::detail
