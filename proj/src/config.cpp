#include "mixdyn/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "json.hpp"
#include "mixdyn/errors.hpp"

namespace mixdyn {

using nlohmann::json;

namespace {

constexpr const char* kModelSchema = "mixdyn.model/1";
constexpr const char* kCurveSchema = "mixdyn.curve/1";

double number(const json& j, const char* key) {
    if (!j.contains(key)) throw InputError(std::string("missing field \"") + key + "\"");
    const auto& v = j.at(key);
    if (!v.is_number()) throw InputError(std::string("field \"") + key + "\" must be a number");
    return v.get<double>();
}

std::vector<CurvePiece> parse_pieces(const json& v, const char* what) {
    if (v.is_number()) return {{std::numeric_limits<double>::infinity(), v.get<double>()}};
    if (!v.is_object() || !v.contains("pieces") || !v.at("pieces").is_array() || v.at("pieces").empty())
        throw InputError(std::string(what) + " entries must be numbers or {\"pieces\": [...]}");
    std::vector<CurvePiece> out;
    const auto& arr = v.at("pieces");
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto& p = arr[i];
        const bool last = i + 1 == arr.size();
        const double end = (last && !p.contains("end")) ? std::numeric_limits<double>::infinity() : number(p, "end");
        out.push_back({end, number(p, "level")});
    }
    return out;
}

json dump_pieces(const PiecewiseConstant& c) {
    if (c.is_constant()) return c.pieces().front().level;
    json arr = json::array();
    for (std::size_t i = 0; i < c.pieces().size(); ++i) {
        const auto& p = c.pieces()[i];
        json o{{"level", p.level}};
        if (i + 1 < c.pieces().size()) o["end"] = p.end;
        arr.push_back(o);
    }
    return json{{"pieces", arr}};
}

YieldCurve curve_from_json(const json& j) {
    if (j.contains("flat")) {
        const auto& f = j.at("flat");
        const double last = f.contains("last") ? number(f, "last") : 100.0;
        return YieldCurve::flat(number(f, "domestic"), number(f, "foreign"), last);
    }
    if (!j.contains("pillars") || !j.at("pillars").is_array())
        throw InputError("curve needs a \"pillars\" array or a \"flat\" object");
    std::vector<CurvePillar> pillars;
    for (const auto& p : j.at("pillars"))
        pillars.push_back({number(p, "maturity"), number(p, "domestic_df"), number(p, "foreign_df")});
    return YieldCurve(std::move(pillars));
}

json curve_to_json(const YieldCurve& c) {
    json arr = json::array();
    for (const auto& p : c.pillars())
        arr.push_back({{"maturity", p.maturity}, {"domestic_df", p.domestic_df}, {"foreign_df", p.foreign_df}});
    return json{{"pillars", arr}};
}

json parse_document(std::string_view text) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw InputError(std::string("invalid JSON: ") + e.what());
    }
}

void check_schema(const json& j, const char* expected) {
    if (!j.contains("schema")) return;
    if (!j.at("schema").is_string() || j.at("schema").get<std::string>() != expected)
        throw InputError(std::string("unsupported schema (expected \"") + expected + "\")");
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& s, std::size_t line) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size())
        throw InputError("line " + std::to_string(line) + ": \"" + s + "\" is not a number");
    return v;
}

}  // namespace

ModelConfig parse_model_config(std::string_view text, const std::filesystem::path& base_dir) {
    const json j = parse_document(text);
    if (!j.is_object()) throw InputError("model document must be a JSON object");
    check_schema(j, kModelSchema);
    try {
        const std::string mode = j.value("mode", std::string("lognormal"));
        const double eps = j.contains("epsilon") ? number(j, "epsilon") : kDefaultEpsilon;
        if (!j.contains("weights") || !j.at("weights").is_array()) throw InputError("missing \"weights\" array");
        const auto weights = j.at("weights").get<std::vector<double>>();
        if (!j.contains("vols") || !j.at("vols").is_array()) throw InputError("missing \"vols\" array");
        const auto& vols = j.at("vols");
        if (vols.size() != weights.size()) throw InputError("\"vols\" and \"weights\" differ in length");

        if (!j.contains("curve")) throw InputError("missing \"curve\"");
        const auto& cj = j.at("curve");
        YieldCurve curve = cj.is_string() ? load_curve(base_dir / cj.get<std::string>()) : curve_from_json(cj);

        if (mode == "lognormal") {
            std::vector<VolCurve> curves;
            for (const auto& v : vols) curves.push_back(VolCurve::piecewise(parse_pieces(v, "vols")));
            return {MixtureSpec::lognormal(weights, std::move(curves), number(j, "s0"), eps), std::move(curve)};
        }
        if (mode == "normal") {
            std::vector<GaussianComponent> comps;
            const json drifts = j.contains("drifts") ? j.at("drifts") : json::array();
            if (!drifts.empty() && drifts.size() != weights.size())
                throw InputError("\"drifts\" and \"weights\" differ in length");
            for (std::size_t i = 0; i < weights.size(); ++i) {
                auto drift = drifts.empty() ? PiecewiseConstant::constant(0.0)
                                            : PiecewiseConstant::steps(parse_pieces(drifts[i], "drifts"));
                comps.push_back({std::move(drift), VolCurve::piecewise(parse_pieces(vols[i], "vols"))});
            }
            const double s0 = j.contains("s0") ? number(j, "s0") : 0.0;
            return {MixtureSpec::normal(weights, std::move(comps), s0, eps), std::move(curve)};
        }
        throw InputError("mode must be \"lognormal\" or \"normal\"");
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed model document: ") + e.what());
    } catch (const InputError&) {
        throw;
    } catch (const Error& e) {
        throw InputError(std::string("invalid model: ") + e.what());
    }
}

ModelConfig load_model_config(const std::filesystem::path& path) {
    return parse_model_config(read_text_file(path), path.parent_path());
}

YieldCurve parse_curve(std::string_view text) {
    const json j = parse_document(text);
    check_schema(j, kCurveSchema);
    try {
        return curve_from_json(j);
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed curve document: ") + e.what());
    } catch (const InputError&) {
        throw;
    } catch (const Error& e) {
        throw InputError(std::string("invalid curve: ") + e.what());
    }
}

YieldCurve load_curve(const std::filesystem::path& path) { return parse_curve(read_text_file(path)); }

std::string model_config_json(const MixtureSpec& spec, const YieldCurve& curve) {
    json j;
    j["schema"] = kModelSchema;
    j["mode"] = spec.mode() == MixtureMode::lognormal ? "lognormal" : "normal";
    j["s0"] = spec.s0();
    j["epsilon"] = spec.epsilon();
    j["weights"] = std::vector<double>(spec.weights().begin(), spec.weights().end());
    json vols = json::array();
    json drifts = json::array();
    for (const auto& c : spec.components()) {
        vols.push_back(dump_pieces(c.vol.curve()));
        drifts.push_back(dump_pieces(c.drift));
    }
    j["vols"] = vols;
    if (spec.mode() == MixtureMode::normal) j["drifts"] = drifts;
    j["curve"] = curve_to_json(curve);
    return j.dump(2) + "\n";
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const ModelConfig& config) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(model_config_json(config.spec, config.curve))));
    return buf;
}

std::vector<SmilePoint> parse_quotes_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    std::map<std::string, std::size_t> col;
    std::vector<SmilePoint> out;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
        const auto cells = split_csv_line(line);
        if (col.empty()) {
            for (std::size_t i = 0; i < cells.size(); ++i) col[cells[i]] = i;
            for (const char* need : {"T", "K", "implied_vol"})
                if (!col.count(need)) throw InputError(std::string("quotes CSV header lacks column ") + need);
            continue;
        }
        if (cells.size() != col.size())
            throw InputError("line " + std::to_string(lineno) + ": expected " + std::to_string(col.size()) +
                             " fields");
        out.push_back({0.0, parse_number(cells[col["T"]], lineno), parse_number(cells[col["K"]], lineno),
                       parse_number(cells[col["implied_vol"]], lineno)});
    }
    if (col.empty()) throw InputError("quotes CSV is empty");
    return out;
}

std::vector<SmilePoint> load_quotes_csv(const std::filesystem::path& path) {
    return parse_quotes_csv(read_text_file(path));
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace mixdyn
