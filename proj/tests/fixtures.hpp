#pragma once

#include <string>
#include <vector>

#include "mixdyn/config.hpp"
#include "mixdyn/local_vol.hpp"

namespace fixtures {

inline std::string data(const std::string& name) { return std::string(MIXDYN_TEST_DATA_DIR) + "/" + name; }

/// Table 1 discount factors.
inline mixdyn::YieldCurve table1() { return mixdyn::load_curve(data("table1_curve.json")); }

/// Published EUR/USD mixture with the weight-vol pairing that reproduces the
/// 0y smile row.
inline mixdyn::LocalVolModel eurusd() {
    const auto c = mixdyn::load_model_config(data("eurusd_2003.json"));
    return {c.spec, c.curve};
}

/// Generic two-component lognormal mixture on a flat curve.
inline mixdyn::LocalVolModel two_component() {
    const auto c = mixdyn::load_model_config(data("two_component.json"));
    return {c.spec, c.curve};
}

inline mixdyn::LocalVolModel normal_mixture() {
    const auto c = mixdyn::load_model_config(data("normal_mixture.json"));
    return {c.spec, c.curve};
}

inline mixdyn::LocalVolModel gbm(double vol, double rd = 0.03, double rf = 0.01, double s0 = 1.0) {
    return {mixdyn::MixtureSpec::lognormal({1.0}, {mixdyn::VolCurve::constant(vol)}, s0),
            mixdyn::YieldCurve::flat(rd, rf)};
}

/// Three components with a piecewise vol curve, on the Table 1 curve.
inline mixdyn::LocalVolModel three_component() {
    using namespace mixdyn;
    return {MixtureSpec::lognormal({0.2, 0.5, 0.3},
                                   {VolCurve::constant(0.3),
                                    VolCurve::piecewise({{0.5, 0.15}, {2.0, 0.1}, {1e300, 0.12}}),
                                    VolCurve::constant(0.07)},
                                   1.07),
            table1()};
}

inline const std::vector<double> kTable2Moneyness{0.8, 0.85, 0.9, 0.95, 1.0, 1.05, 1.1, 1.15, 1.2};

}  // namespace fixtures
