#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mixdyn/mixture.hpp"
#include "mixdyn/pricing.hpp"
#include "mixdyn/yield_curve.hpp"

/// JSON model documents and CSV quote files.
///
/// Model document (schema "mixdyn.model/1"):
///
///   {
///     "schema": "mixdyn.model/1",
///     "mode": "lognormal",            // or "normal"
///     "s0": 1.07,
///     "epsilon": 1e-4,                // optional
///     "weights": [0.0253, 0.9747],
///     "vols": [0.7572, {"pieces": [{"end": 2, "level": 0.09}, {"level": 0.1}]}],
///     "drifts": [0.0, -0.1],          // normal mode only, same shapes as vols
///     "curve": {"pillars": [{"maturity": 1, "domestic_df": 0.97, "foreign_df": 0.98}]}
///   }
///
/// "curve" may also be a path (relative to the model file) to a curve
/// document {"schema": "mixdyn.curve/1", "pillars": [...]}, or
/// {"flat": {"domestic": r_d, "foreign": r_f, "last": 100}}. The last vol
/// piece may omit "end"; it extends indefinitely either way.
namespace mixdyn {

struct ModelConfig {
    MixtureSpec spec;
    YieldCurve curve;
};

ModelConfig parse_model_config(std::string_view text, const std::filesystem::path& base_dir = {});
ModelConfig load_model_config(const std::filesystem::path& path);

YieldCurve parse_curve(std::string_view text);
YieldCurve load_curve(const std::filesystem::path& path);

/// Canonical document with the curve inlined. Parsing it back gives the
/// same model; identical models give identical text.
std::string model_config_json(const MixtureSpec& spec, const YieldCurve& curve);

/// FNV-1a 64-bit hash of the canonical document, as 16 hex digits.
std::string config_hash(const ModelConfig& config);
std::uint64_t fnv1a(std::string_view bytes);

/// Quotes CSV: header "T,K,implied_vol" (any column order), one quote per row,
/// annualized implied vol as a decimal. Returned points have t = 0.
std::vector<SmilePoint> parse_quotes_csv(std::string_view text);
std::vector<SmilePoint> load_quotes_csv(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace mixdyn
