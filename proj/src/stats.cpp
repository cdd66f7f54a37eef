#include "mixdyn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mixdyn/errors.hpp"

namespace mixdyn::stats {

MeanEstimate mean(std::span<const double> x) {
    if (x.empty()) throw InputError("mean of an empty sample");
    double mu = 0.0;
    double m2 = 0.0;
    std::size_t n = 0;
    for (double v : x) {
        ++n;
        const double d = v - mu;
        mu += d / static_cast<double>(n);
        m2 += d * (v - mu);
    }
    const double var = n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
    return {mu, std::sqrt(var / static_cast<double>(n))};
}

MeanEstimate covariance(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 3) throw InputError("covariance needs two samples of equal size >= 3");
    const double mx = mean(x).mean;
    const double my = mean(y).mean;
    std::vector<double> prod(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) prod[i] = (x[i] - mx) * (y[i] - my);
    const auto est = mean(prod);
    const double n = static_cast<double>(x.size());
    return {est.mean * n / (n - 1.0), est.std_error};
}

CorrelationEstimate correlation(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 3) throw InputError("correlation needs two samples of equal size >= 3");
    const auto n = static_cast<double>(x.size());
    const double mx = mean(x).mean;
    const double my = mean(y).mean;
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    const double scale = std::max(std::abs(mx), std::abs(my));
    const double tiny = 1e-28 * n * std::max(scale * scale, 1e-300);
    if (!(sxx > tiny) || !(syy > tiny)) throw DegenerateError("correlation undefined: a sample has zero variance");
    const double sx = std::sqrt(sxx / n);
    const double sy = std::sqrt(syy / n);
    const double rho = sxy / std::sqrt(sxx * syy);
    double m = 0.0;
    double m2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = (x[i] - mx) / sx;
        const double b = (y[i] - my) / sy;
        const double psi = a * b - 0.5 * rho * (a * a + b * b);
        const double d = psi - m;
        m += d / static_cast<double>(i + 1);
        m2 += d * (psi - m);
    }
    const double var = m2 / (n - 1.0);
    return {std::clamp(rho, -1.0, 1.0), std::sqrt(var / n)};
}

double kolmogorov_survival(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-18) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test(std::span<const double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) throw InputError("KS test on an empty sample");
    std::vector<double> s(sample.begin(), sample.end());
    std::sort(s.begin(), s.end());
    const auto n = static_cast<double>(s.size());
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double f = cdf(s[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    const double root = std::sqrt(n);
    return {d, kolmogorov_survival((root + 0.12 + 0.11 / root) * d)};
}

double silverman_bandwidth(std::span<const double> x) {
    if (x.size() < 2) throw InputError("bandwidth needs at least two points");
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(s.size() - 1);
        const auto lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, s.size() - 1);
        return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
    };
    const auto est = mean(x);
    const double sd = est.std_error * std::sqrt(static_cast<double>(x.size()));
    const double iqr = quantile(0.75) - quantile(0.25);
    const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    return 0.9 * spread * std::pow(static_cast<double>(x.size()), -0.2);
}

}  // namespace mixdyn::stats
