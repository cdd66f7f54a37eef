#include <cmath>
#include <limits>

#include "mixdyn/kernels.hpp"

namespace mixdyn::kernels::detail {

namespace {

inline double sigma_squared_one(const MixtureSlice& s, double z) {
    double lp[kMaxComponents];
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s.m; ++i) {
        const double d = z - s.mean[i];
        lp[i] = s.log_norm[i] - d * d * s.inv_two_var[i];
        top = lp[i] > top ? lp[i] : top;
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < s.m; ++i) {
        const double w = std::exp(lp[i] - top);
        num += w * s.rate[i];
        den += w;
    }
    return num / den;
}

}  // namespace

void sigma_squared_scalar(const MixtureSlice& slice, const double* z, double* out, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) out[k] = sigma_squared_one(slice, z[k]);
}

void log_euler_step_scalar(const MixtureSlice& slice, double carry, double dt, double* z, const double* normals,
                           double* variance_acc, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
        const double s2dt = sigma_squared_one(slice, z[k]) * dt;
        z[k] += carry - 0.5 * s2dt + std::sqrt(s2dt) * normals[k];
        variance_acc[k] += s2dt;
    }
}

}  // namespace mixdyn::kernels::detail
