#pragma once

// Resolved run configuration and its JSON form. Every CLI stage writes the
// config it actually used next to its outputs; loading that file and running
// the same command regenerates the outputs.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "robustsc/errors.hpp"
#include "robustsc/estimators.hpp"
#include "robustsc/io.hpp"
#include "robustsc/rng.hpp"
#include "robustsc/signal.hpp"
#include "robustsc/spectral.hpp"
#include "robustsc/synthesis.hpp"

namespace robustsc {

struct RenderConfig {
    double width_in = 8.0;
    double height_in = 6.0;
    double dpi = 100.0;
    friend bool operator==(const RenderConfig&, const RenderConfig&) = default;
};

struct RunConfig {
    std::string command;
    double fs = 25000.0;
    std::size_t length = 50000;
    Seed seed{1, 0};
    ImpulseTrainSpec impulse;
    NoiseModel noise = AlphaStable{};
    AcpConfig acp;
    EstimatorKind estimator = SampleAcvf{};
    bool column_profile = false;
    RenderConfig render;

    std::string input;        // empty: none
    std::string input_format; // "csv", "wav" or empty for the file extension
    std::optional<double> input_fs;
    std::string output;
    std::string png; // empty: no image

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline std::string_view spearman_transform_id(SpearmanTransform t) {
    return t == SpearmanTransform::Printed ? "printed" : "standard";
}

inline SpearmanTransform parse_spearman_transform(std::string_view s) {
    if (s == "standard") return SpearmanTransform::Standard;
    if (s == "printed") return SpearmanTransform::Printed;
    throw InvalidParameter("unknown Spearman transform '" + std::string(s) + "' (standard or printed)");
}

inline std::optional<SignalFormat> parse_signal_format(std::string_view s) {
    if (s.empty() || s == "auto") return std::nullopt;
    if (s == "csv") return SignalFormat::Csv;
    if (s == "wav") return SignalFormat::Wav;
    throw InvalidParameter("unknown signal format '" + std::string(s) + "' (csv or wav)");
}

inline NoiseModel make_noise_model(std::string_view id) {
    if (id == "mixture") return Mixture{};
    if (id == "student") return StudentT{};
    if (id == "stable") return AlphaStable{};
    throw InvalidParameter("unknown noise model '" + std::string(id) + "' (mixture, student or stable)");
}

using Json = nlohmann::ordered_json;

inline Json to_json(const NoiseModel& m) {
    return std::visit(
        [](const auto& v) -> Json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Mixture>) return {{"model", "mixture"}, {"a", v.a}, {"p", v.p}, {"D", v.D}};
            else if constexpr (std::is_same_v<T, StudentT>)
                return {{"model", "student"}, {"nu", v.nu}, {"delta", v.delta}};
            else return {{"model", "stable"}, {"alpha", v.alpha}, {"sigma", v.sigma}};
        },
        m);
}

inline Json to_json(const EstimatorKind& k) {
    Json j = {{"id", std::string(estimator_id(k))}};
    if (const auto* t = std::get_if<Trimmed>(&k)) j["trim_c"] = t->c;
    if (const auto* s = std::get_if<Spearman>(&k)) j["spearman_transform"] = std::string(spearman_transform_id(s->transform));
    return j;
}

inline Json to_json(const RunConfig& c) {
    Json j;
    j["command"] = c.command;
    j["fs"] = c.fs;
    j["length"] = c.length;
    j["seed"] = c.seed.seed;
    j["stream_id"] = c.seed.stream_id;
    j["impulse"] = {{"amplitude", c.impulse.amplitude},
                    {"carrier_hz", c.impulse.carrier_hz},
                    {"band", {c.impulse.band.lo, c.impulse.band.hi}},
                    {"decay", c.impulse.decay},
                    {"fault_hz", c.impulse.fault_hz},
                    {"phase_offset_s", c.impulse.phase_offset_s}};
    j["noise"] = to_json(c.noise);
    j["acp"] = {{"nfft", c.acp.nfft},       {"win_len", c.acp.win_len},   {"nover", c.acp.nover},
                {"eps_min", c.acp.eps_min}, {"eps_max", c.acp.eps_max},   {"eps_step", c.acp.eps_step},
                {"threads", c.acp.threads}};
    j["estimator"] = to_json(c.estimator);
    j["column_profile"] = c.column_profile;
    j["render"] = {{"width_in", c.render.width_in}, {"height_in", c.render.height_in}, {"dpi", c.render.dpi}};
    j["input"] = c.input;
    j["input_format"] = c.input_format;
    j["input_fs"] = c.input_fs ? Json(*c.input_fs) : Json(nullptr);
    j["output"] = c.output;
    j["png"] = c.png;
    return j;
}

namespace detail {

template <class T>
void read_opt(const Json& j, const char* key, T& out) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidParameter(std::string("config key '") + key + "': " + e.what());
    }
}

inline void check_keys(const Json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
    if (!j.is_object()) throw InvalidParameter("config section '" + std::string(where) + "' must be an object");
    for (const auto& [k, v] : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || a == k;
        if (!ok) throw InvalidParameter("unknown config key '" + k + "' in " + std::string(where));
    }
}

} // namespace detail

inline NoiseModel noise_from_json(const Json& j) {
    std::string id = "stable";
    detail::read_opt(j, "model", id);
    NoiseModel m = make_noise_model(id);
    std::visit(
        [&](auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Mixture>) {
                detail::check_keys(j, {"model", "a", "p", "D"}, "noise");
                detail::read_opt(j, "a", v.a);
                detail::read_opt(j, "p", v.p);
                detail::read_opt(j, "D", v.D);
            } else if constexpr (std::is_same_v<T, StudentT>) {
                detail::check_keys(j, {"model", "nu", "delta"}, "noise");
                detail::read_opt(j, "nu", v.nu);
                detail::read_opt(j, "delta", v.delta);
            } else {
                detail::check_keys(j, {"model", "alpha", "sigma"}, "noise");
                detail::read_opt(j, "alpha", v.alpha);
                detail::read_opt(j, "sigma", v.sigma);
            }
        },
        m);
    return m;
}

inline EstimatorKind estimator_from_json(const Json& j) {
    detail::check_keys(j, {"id", "trim_c", "spearman_transform"}, "estimator");
    std::string id = "acvf";
    double c = Trimmed{}.c;
    std::string tr = "standard";
    detail::read_opt(j, "id", id);
    detail::read_opt(j, "trim_c", c);
    detail::read_opt(j, "spearman_transform", tr);
    return parse_estimator(id, c, parse_spearman_transform(tr));
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline RunConfig run_config_from_json(const Json& j) {
    detail::check_keys(j,
                       {"command", "fs", "length", "seed", "stream_id", "impulse", "noise", "acp", "estimator",
                        "column_profile", "render", "input", "input_format", "input_fs", "output", "png"},
                       "run config");
    RunConfig c;
    detail::read_opt(j, "command", c.command);
    detail::read_opt(j, "fs", c.fs);
    detail::read_opt(j, "length", c.length);
    detail::read_opt(j, "seed", c.seed.seed);
    detail::read_opt(j, "stream_id", c.seed.stream_id);
    if (j.contains("impulse")) {
        const auto& s = j.at("impulse");
        detail::check_keys(s, {"amplitude", "carrier_hz", "band", "decay", "fault_hz", "phase_offset_s"}, "impulse");
        detail::read_opt(s, "amplitude", c.impulse.amplitude);
        detail::read_opt(s, "carrier_hz", c.impulse.carrier_hz);
        detail::read_opt(s, "decay", c.impulse.decay);
        detail::read_opt(s, "fault_hz", c.impulse.fault_hz);
        detail::read_opt(s, "phase_offset_s", c.impulse.phase_offset_s);
        if (s.contains("band")) {
            std::vector<double> b;
            detail::read_opt(s, "band", b);
            if (b.size() != 2) throw InvalidParameter("impulse.band must be [lo, hi]");
            c.impulse.band = {b[0], b[1]};
        }
    }
    if (j.contains("noise")) c.noise = noise_from_json(j.at("noise"));
    if (j.contains("acp")) {
        const auto& a = j.at("acp");
        detail::check_keys(a, {"nfft", "win_len", "nover", "eps_min", "eps_max", "eps_step", "threads"}, "acp");
        detail::read_opt(a, "nfft", c.acp.nfft);
        detail::read_opt(a, "win_len", c.acp.win_len);
        detail::read_opt(a, "nover", c.acp.nover);
        detail::read_opt(a, "eps_min", c.acp.eps_min);
        detail::read_opt(a, "eps_max", c.acp.eps_max);
        detail::read_opt(a, "eps_step", c.acp.eps_step);
        detail::read_opt(a, "threads", c.acp.threads);
    }
    if (j.contains("estimator")) c.estimator = estimator_from_json(j.at("estimator"));
    detail::read_opt(j, "column_profile", c.column_profile);
    if (j.contains("render")) {
        const auto& r = j.at("render");
        detail::check_keys(r, {"width_in", "height_in", "dpi"}, "render");
        detail::read_opt(r, "width_in", c.render.width_in);
        detail::read_opt(r, "height_in", c.render.height_in);
        detail::read_opt(r, "dpi", c.render.dpi);
    }
    detail::read_opt(j, "input", c.input);
    detail::read_opt(j, "input_format", c.input_format);
    if (j.contains("input_fs") && !j.at("input_fs").is_null()) {
        double v = 0.0;
        detail::read_opt(j, "input_fs", v);
        c.input_fs = v;
    }
    detail::read_opt(j, "output", c.output);
    detail::read_opt(j, "png", c.png);
    return c;
}

inline Json parse_json_file(const std::filesystem::path& path) {
    const std::string text = detail::read_file(path);
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string() + ": byte " + std::to_string(e.byte) + ": invalid JSON");
    }
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    try {
        return run_config_from_json(parse_json_file(path));
    } catch (const InvalidParameter& e) {
        throw InvalidParameter(path.string() + ": " + e.what());
    }
}

inline void save_json(const Json& j, const std::filesystem::path& path) { write_file_atomic(path, j.dump(2) + "\n"); }

inline void save_run_config(const RunConfig& c, const std::filesystem::path& path) { save_json(to_json(c), path); }

/// "<output>.config.json" next to an output file.
inline std::filesystem::path sidecar_path(const std::filesystem::path& output) {
    std::filesystem::path p = output;
    p += ".config.json";
    return p;
}

/// Key-value report: tau, cyclic frequencies, band, R_gamma curve and optional R'_gamma.
inline Json to_json(const MetricsReport& r) {
    Json j;
    j["tau_gamma"] = r.tau_gamma;
    j["fault_hz"] = r.fault_hz;
    j["band"] = {r.band.lo, r.band.hi};
    j["cyclic_eps"] = r.cyclic_eps;
    Json curve = Json::array();
    for (const auto& p : r.amp_ratio) curve.push_back({{"eps", p.eps}, {"r_gamma", p.value}});
    j["amp_ratio"] = std::move(curve);
    if (r.column_profile) {
        Json prof = Json::array();
        for (const auto& p : *r.column_profile) prof.push_back({{"eps", p.eps}, {"r_prime", p.value}});
        j["column_profile"] = std::move(prof);
        j["column_dispersion"] = dispersion(*r.column_profile);
    }
    return j;
}

inline void write_report(const MetricsReport& r, const std::filesystem::path& path) { save_json(to_json(r), path); }

inline MetricsReport read_report(const std::filesystem::path& path) {
    const Json j = parse_json_file(path);
    MetricsReport r;
    try {
        r.tau_gamma = j.at("tau_gamma").get<double>();
        r.fault_hz = j.at("fault_hz").get<double>();
        const auto b = j.at("band").get<std::vector<double>>();
        if (b.size() != 2) throw FormatError(path.string() + ": band must have two entries");
        r.band = {b[0], b[1]};
        r.cyclic_eps = j.at("cyclic_eps").get<std::vector<double>>();
        for (const auto& p : j.at("amp_ratio")) r.amp_ratio.push_back({p.at("eps").get<double>(), p.at("r_gamma").get<double>()});
        if (j.contains("column_profile")) {
            EpsCurve prof;
            for (const auto& p : j.at("column_profile"))
                prof.push_back({p.at("eps").get<double>(), p.at("r_prime").get<double>()});
            r.column_profile = std::move(prof);
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return r;
}

} // namespace robustsc
