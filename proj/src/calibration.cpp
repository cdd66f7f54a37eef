#include "mixdyn/calibration.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "mixdyn/local_vol.hpp"

namespace mixdyn {

namespace {

struct Market {
    double rd;
    double rf;
    double price;
    double vega;
};

std::vector<Market> market_prices(const CalibrationProblem& p) {
    std::vector<Market> out;
    out.reserve(p.quotes.size());
    for (const auto& q : p.quotes) {
        const double rd = p.curve.integrated_rate(0.0, q.maturity, Leg::domestic);
        const double rf = p.curve.integrated_rate(0.0, q.maturity, Leg::foreign);
        const double v = q.implied_vol * std::sqrt(q.maturity);
        out.push_back({rd, rf, bs_call(p.s0, q.strike, q.maturity, rd, rf, v),
                       bs_vega(p.s0, q.strike, rd, rf, v) * std::sqrt(q.maturity)});
    }
    return out;
}

double logistic(double b) { return 1.0 / (1.0 + std::exp(-b)); }

/// theta = (a_0 .. a_{m-2}, b_0 .. b_{m-1}); a_{m-1} = 0 is fixed.
class Parameterization {
public:
    explicit Parameterization(const CalibrationProblem& p) : p_(p) {}

    std::size_t size() const { return 2 * p_.m - 1; }

    std::vector<double> weights(const Eigen::VectorXd& th) const {
        const std::size_t m = p_.m;
        std::vector<double> a(m, 0.0);
        for (std::size_t i = 0; i + 1 < m; ++i) a[i] = th[static_cast<Eigen::Index>(i)];
        const double top = *std::max_element(a.begin(), a.end());
        double sum = 0.0;
        for (double& x : a) sum += (x = std::exp(x - top));
        const double free = 1.0 - static_cast<double>(m) * p_.weight_floor;
        for (double& x : a) x = p_.weight_floor + free * x / sum;
        return a;
    }

    std::vector<double> vols(const Eigen::VectorXd& th) const {
        std::vector<double> v(p_.m);
        for (std::size_t i = 0; i < p_.m; ++i)
            v[i] = p_.vol_min + (p_.vol_max - p_.vol_min) * logistic(th[static_cast<Eigen::Index>(p_.m - 1 + i)]);
        return v;
    }

    Eigen::VectorXd encode(const std::vector<double>& w, const std::vector<double>& v) const {
        Eigen::VectorXd th(static_cast<Eigen::Index>(size()));
        const double free = 1.0 - static_cast<double>(p_.m) * p_.weight_floor;
        auto share = [&](double wi) { return std::max((wi - p_.weight_floor) / free, 1e-12); };
        for (std::size_t i = 0; i + 1 < p_.m; ++i)
            th[static_cast<Eigen::Index>(i)] = std::log(share(w[i]) / share(w[p_.m - 1]));
        for (std::size_t i = 0; i < p_.m; ++i) {
            double u = (v[i] - p_.vol_min) / (p_.vol_max - p_.vol_min);
            u = std::clamp(u, 1e-9, 1.0 - 1e-9);
            th[static_cast<Eigen::Index>(p_.m - 1 + i)] = std::log(u / (1.0 - u));
        }
        return th;
    }

    MixtureSpec spec(const Eigen::VectorXd& th) const {
        std::vector<VolCurve> curves;
        for (double v : vols(th)) curves.push_back(VolCurve::constant(v));
        return MixtureSpec::lognormal(weights(th), std::move(curves), p_.s0, p_.epsilon);
    }

private:
    const CalibrationProblem& p_;
};

class Objective {
public:
    Objective(const CalibrationProblem& p, const Parameterization& par)
        : p_(p), par_(par), market_(market_prices(p)),
          penalized_(p.quotes.size() < 2 * p.m - 1) {}

    std::size_t size() const { return p_.quotes.size() + (penalized_ ? p_.m : 0); }

    /// Quote residuals followed by the Tikhonov rows, if any.
    Eigen::VectorXd residuals(const Eigen::VectorXd& th) const {
        Eigen::VectorXd r(static_cast<Eigen::Index>(size()));
        const auto spec = par_.spec(th);
        const LocalVolModel model(spec, p_.curve);
        for (std::size_t k = 0; k < p_.quotes.size(); ++k) {
            const auto& q = p_.quotes[k];
            const auto& mk = market_[k];
            const double price = mixture_call(model, q.strike, q.maturity);
            double res;
            if (p_.loss == LossSpace::price) {
                res = price - mk.price;
            } else {
                try {
                    const double otm = mixture_otm_price(model, q.strike, q.maturity);
                    res = implied_vol_otm(otm, p_.s0, q.strike, q.maturity, mk.rd, mk.rf) / std::sqrt(q.maturity) -
                          q.implied_vol;
                } catch (const InversionError&) {
                    // price pinned at a bound: first-order vol error from the market vega
                    res = (price - mk.price) / mk.vega;
                }
            }
            r[static_cast<Eigen::Index>(k)] = res;
        }
        if (penalized_) {
            const auto w = par_.weights(th);
            const double scale = std::sqrt(p_.tikhonov);
            for (std::size_t i = 0; i < p_.m; ++i)
                r[static_cast<Eigen::Index>(p_.quotes.size() + i)] = scale * (w[i] - 1.0 / static_cast<double>(p_.m));
        }
        return r;
    }

    double quote_loss(const Eigen::VectorXd& r) const {
        return r.head(static_cast<Eigen::Index>(p_.quotes.size())).squaredNorm();
    }

private:
    const CalibrationProblem& p_;
    const Parameterization& par_;
    std::vector<Market> market_;
    bool penalized_;
};

struct RunResult {
    Eigen::VectorXd theta;
    double loss = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

RunResult levenberg_marquardt(const Objective& obj, Eigen::VectorXd th, int max_iterations) {
    RunResult out;
    Eigen::VectorXd r = obj.residuals(th);
    double loss = r.squaredNorm();
    double mu = 1e-3;
    const auto p = th.size();
    const auto n = static_cast<Eigen::Index>(obj.size());
    Eigen::MatrixXd jac(n, p);

    int it = 0;
    bool converged = false;
    while (it < max_iterations && !converged) {
        ++it;
        if (loss < 1e-28) {
            converged = true;
            break;
        }
        for (Eigen::Index j = 0; j < p; ++j) {
            const double h = 1e-6 * std::max(1.0, std::abs(th[j]));
            Eigen::VectorXd up = th;
            Eigen::VectorXd dn = th;
            up[j] += h;
            dn[j] -= h;
            jac.col(j) = (obj.residuals(up) - obj.residuals(dn)) / (2.0 * h);
        }
        const Eigen::MatrixXd a = jac.transpose() * jac;
        const Eigen::VectorXd g = jac.transpose() * r;
        // trust-region loop: grow the damping until a step lowers the loss
        while (true) {
            Eigen::MatrixXd damped = a;
            for (Eigen::Index j = 0; j < p; ++j) damped(j, j) += mu * std::max(a(j, j), 1e-12);
            const Eigen::VectorXd step = damped.ldlt().solve(-g);
            const double step_size = step.lpNorm<Eigen::Infinity>() / (1.0 + th.lpNorm<Eigen::Infinity>());
            const Eigen::VectorXd trial = th + step;
            const Eigen::VectorXd r_trial = obj.residuals(trial);
            const double loss_trial = r_trial.squaredNorm();
            if (std::isfinite(loss_trial) && loss_trial < loss) {
                const double rel = (loss - loss_trial) / loss;
                th = trial;
                r = r_trial;
                loss = loss_trial;
                mu = std::max(mu / 3.0, 1e-15);
                if (step_size < 1e-10 || rel < 1e-12) converged = true;
                break;
            }
            if (step_size < 1e-10 || !step.allFinite()) {
                converged = true;
                break;
            }
            mu *= 4.0;
            if (mu > 1e16) {
                // damping saturated without a decrease: treat as a stationary point
                converged = true;
                break;
            }
        }
    }
    out.theta = th;
    out.loss = loss;
    out.iterations = it;
    out.converged = converged;
    return out;
}

std::vector<Eigen::VectorXd> starting_points(const CalibrationProblem& p, const Parameterization& par,
                                             const std::optional<MixtureSpec>& init) {
    std::vector<Eigen::VectorXd> starts;
    const auto [lo_it, hi_it] = std::minmax_element(p.quotes.begin(), p.quotes.end(), [](const auto& a, const auto& b) {
        return a.implied_vol < b.implied_vol;
    });
    const double lo = std::clamp(0.8 * lo_it->implied_vol, p.vol_min, p.vol_max);
    const double hi = std::clamp(2.0 * hi_it->implied_vol, p.vol_min, p.vol_max);

    if (init) {
        if (init->size() != p.m || init->mode() != MixtureMode::lognormal)
            throw InputError("initial spec must be a lognormal mixture with m components");
        std::vector<double> w(init->weights().begin(), init->weights().end());
        std::vector<double> v;
        for (std::size_t i = 0; i < p.m; ++i) v.push_back(init->vol(i).level(1.0));
        starts.push_back(par.encode(w, v));
    }
    // equal weights, vols spread geometrically across the quoted range
    {
        std::vector<double> w(p.m, 1.0 / static_cast<double>(p.m));
        std::vector<double> v(p.m);
        for (std::size_t i = 0; i < p.m; ++i) {
            const double f = p.m == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(p.m - 1);
            v[i] = lo * std::pow(hi / lo, f);
        }
        starts.push_back(par.encode(w, v));
    }
    std::mt19937_64 rng(p.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    while (starts.size() < std::max<std::size_t>(p.starts, 1)) {
        std::vector<double> w(p.m);
        std::vector<double> v(p.m);
        double sum = 0.0;
        for (auto& x : w) sum += (x = -std::log(1.0 - unit(rng)));
        for (auto& x : w) x /= sum;
        for (auto& x : v) x = lo * std::pow(hi / lo, unit(rng));
        starts.push_back(par.encode(w, v));
    }
    starts.resize(std::max<std::size_t>(p.starts, 1));
    return starts;
}

void validate_problem(const CalibrationProblem& p) {
    if (p.m == 0 || p.m > 16) throw InputError("component count must be in [1, 16]");
    if (!(p.vol_min > 0.0) || !(p.vol_max > p.vol_min)) throw InputError("vol bounds must satisfy 0 < min < max");
    if (!(p.weight_floor >= 0.0) || static_cast<double>(p.m) * p.weight_floor >= 1.0)
        throw InputError("weight floor must satisfy 0 <= m * floor < 1");
    if (!(p.s0 > 0.0)) throw InputError("s0 must be positive");
    if (p.quotes.empty()) throw InputError("no quotes to calibrate to");
    for (const auto& q : p.quotes)
        if (q.t != 0.0) throw InputError("calibration takes time-0 smiles only");
}

}  // namespace

std::vector<QuoteDiagnostic> screen_quotes(const CalibrationProblem& p) {
    std::vector<QuoteDiagnostic> bad;
    for (std::size_t k = 0; k < p.quotes.size(); ++k) {
        const auto& q = p.quotes[k];
        auto reject = [&](std::string why) { bad.push_back({k, q.maturity, q.strike, q.implied_vol, std::move(why)}); };
        if (!(q.maturity > 0.0) || !std::isfinite(q.maturity)) {
            reject("maturity must be positive");
            continue;
        }
        if (!(q.strike > 0.0) || !std::isfinite(q.strike)) {
            reject("strike must be positive");
            continue;
        }
        if (!(q.implied_vol > 0.0) || !std::isfinite(q.implied_vol)) {
            reject("implied vol must be positive and finite");
            continue;
        }
        if (q.maturity > p.curve.last_maturity()) {
            reject("maturity beyond the last curve pillar");
            continue;
        }
        const double rd = p.curve.integrated_rate(0.0, q.maturity, Leg::domestic);
        const double rf = p.curve.integrated_rate(0.0, q.maturity, Leg::foreign);
        const double price = bs_call(p.s0, q.strike, q.maturity, rd, rf, q.implied_vol * std::sqrt(q.maturity));
        const auto b = call_bounds(p.s0, q.strike, rd, rf);
        std::ostringstream why;
        if (!(price > b.lower)) {
            why << "price " << price << " at or below the lower bound " << b.lower;
            reject(why.str());
        } else if (!(price < b.upper)) {
            why << "price " << price << " at or above the upper bound " << b.upper;
            reject(why.str());
        }
    }
    return bad;
}

std::vector<double> model_smile(const MixtureSpec& spec, const YieldCurve& curve,
                                const std::vector<SmilePoint>& quotes) {
    const LocalVolModel model(spec, curve);
    std::vector<double> out;
    out.reserve(quotes.size());
    for (const auto& q : quotes) {
        const double rd = curve.integrated_rate(0.0, q.maturity, Leg::domestic);
        const double rf = curve.integrated_rate(0.0, q.maturity, Leg::foreign);
        const double otm = mixture_otm_price(model, q.strike, q.maturity);
        out.push_back(implied_vol_otm(otm, spec.s0(), q.strike, q.maturity, rd, rf) / std::sqrt(q.maturity));
    }
    return out;
}

CalibrationResult calibrate(const CalibrationProblem& problem, const std::optional<MixtureSpec>& init) {
    validate_problem(problem);
    if (auto bad = screen_quotes(problem); !bad.empty()) {
        std::ostringstream msg;
        msg << bad.size() << " infeasible quote(s); first: #" << bad.front().index << " (K=" << bad.front().strike
            << ", T=" << bad.front().maturity << "): " << bad.front().reason;
        throw InfeasibleQuotesError(msg.str(), std::move(bad));
    }

    const Parameterization par(problem);
    const Objective obj(problem, par);
    const auto starts = starting_points(problem, par, init);

    std::vector<std::future<RunResult>> runs;
    runs.reserve(starts.size());
    for (const auto& th : starts)
        runs.push_back(std::async(std::launch::async, [&obj, th, &problem] {
            return levenberg_marquardt(obj, th, problem.max_iterations);
        }));
    std::vector<RunResult> results;
    for (auto& f : runs) results.push_back(f.get());

    std::size_t best = 0;
    for (std::size_t i = 1; i < results.size(); ++i)
        if (results[i].loss < results[best].loss) best = i;
    const auto& win = results[best];

    // sort components by vol to remove the label permutation
    const auto w = par.weights(win.theta);
    const auto v = par.vols(win.theta);
    std::vector<std::size_t> order(problem.m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ws;
    std::vector<VolCurve> vs;
    for (std::size_t i : order) {
        ws.push_back(w[i]);
        vs.push_back(VolCurve::constant(v[i]));
    }

    const auto r = obj.residuals(win.theta);
    const double loss = obj.quote_loss(r);
    return CalibrationResult{MixtureSpec::lognormal(std::move(ws), std::move(vs), problem.s0, problem.epsilon),
                             loss,
                             r.squaredNorm() - loss,
                             win.iterations,
                             win.converged,
                             std::vector<double>(r.data(), r.data() + problem.quotes.size()),
                             best};
}

}  // namespace mixdyn
