#pragma once

// Parameter sweeps: for every swept value and replicate a signal is
// synthesized (or, when the baseline names an input file, impulses are
// injected into it), one map per estimator is computed and tau is recorded.
//
// Replicate r uses noise stream derive_stream("noise", r) under the base
// seed for every swept value, so neighbouring values see the same underlying
// random numbers and the curves are smoother than with fresh draws.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "robustsc/config.hpp"
#include "robustsc/errors.hpp"
#include "robustsc/estimators.hpp"
#include "robustsc/metrics.hpp"
#include "robustsc/rng.hpp"
#include "robustsc/spectral.hpp"
#include "robustsc/synthesis.hpp"

namespace robustsc {

inline constexpr std::string_view kSweepParameters[] = {"a", "p", "nu", "delta", "alpha", "sigma", "B"};

struct SweepSpec {
    std::string parameter;
    std::vector<double> values;
    RunConfig baseline;
    std::vector<EstimatorKind> estimators; // empty: the baseline estimator
    std::size_t replicates = 1;
    std::uint64_t base_seed = 1;
    unsigned workers = 1;
};

struct RunRecord {
    double value = 0.0;
    std::size_t replicate = 0;
    std::string estimator;
    Seed seed;
    bool ok = false;
    double tau = 0.0;
    std::size_t degenerate_cells = 0;
    std::string error;
};

struct AggregateRow {
    double value = 0.0;
    std::string estimator;
    std::size_t n_ok = 0;
    std::size_t n_failed = 0;
    double mean_tau = 0.0; // NaN when n_ok == 0
    double std_tau = 0.0;  // sample standard deviation, 0 when n_ok < 2
};

struct SweepResult {
    std::string parameter;
    std::vector<RunRecord> runs;
    std::vector<AggregateRow> aggregate;

    std::size_t failures() const {
        std::size_t n = 0;
        for (const auto& r : runs) n += r.ok ? 0 : 1;
        return n;
    }
};

/// Sets the named model parameter; the noise model must be the one it belongs to.
inline void apply_parameter(RunConfig& cfg, std::string_view name, double value) {
    auto need = [&](auto* p, const char* model) {
        if (!p)
            throw InvalidParameter("parameter '" + std::string(name) + "' requires the " + model + " noise model, not " +
                                   std::string(noise_model_id(cfg.noise)));
        return p;
    };
    if (name == "a") need(std::get_if<Mixture>(&cfg.noise), "mixture")->a = value;
    else if (name == "p") need(std::get_if<Mixture>(&cfg.noise), "mixture")->p = value;
    else if (name == "nu") need(std::get_if<StudentT>(&cfg.noise), "student")->nu = value;
    else if (name == "delta") need(std::get_if<StudentT>(&cfg.noise), "student")->delta = value;
    else if (name == "alpha") need(std::get_if<AlphaStable>(&cfg.noise), "stable")->alpha = value;
    else if (name == "sigma") need(std::get_if<AlphaStable>(&cfg.noise), "stable")->sigma = value;
    else if (name == "B") cfg.impulse.amplitude = value;
    else throw InvalidParameter("unknown sweep parameter '" + std::string(name) + "' (a, p, nu, delta, alpha, sigma, B)");
}

inline std::vector<EstimatorKind> sweep_estimators(const SweepSpec& s) {
    return s.estimators.empty() ? std::vector<EstimatorKind>{s.baseline.estimator} : s.estimators;
}

inline void validate(const SweepSpec& s) {
    if (s.values.empty()) throw InvalidParameter("sweep needs at least one value");
    if (s.replicates < 1) throw InvalidParameter("sweep needs at least one replicate");
    RunConfig probe = s.baseline;
    apply_parameter(probe, s.parameter, s.values.front());
    for (const auto& k : sweep_estimators(s)) validate(k);
    validate(s.baseline.acp, s.baseline.fs);
}

/// The fully resolved configuration of one run.
inline RunConfig run_config_for(const SweepSpec& s, double value, std::size_t replicate, const EstimatorKind& kind) {
    RunConfig c = s.baseline;
    c.command = "scmap";
    apply_parameter(c, s.parameter, value);
    c.estimator = kind;
    c.seed = {s.base_seed, derive_stream("noise", replicate)};
    return c;
}

/// Signal described by a config: the input file with impulses added, or a
/// synthetic impulse train in noise.
inline Signal prepare_signal(const RunConfig& c) {
    if (!c.input.empty()) {
        const Signal base = read_signal(c.input, parse_signal_format(c.input_format), c.input_fs);
        return inject_impulses(base, c.impulse);
    }
    return synthesize(c.impulse, c.noise, c.length, c.fs, c.seed);
}

using SweepProgress = std::function<void(const RunRecord&)>;

inline SweepResult run_sweep(const SweepSpec& s, const SweepProgress& progress = {}) {
    validate(s);
    const auto kinds = sweep_estimators(s);
    const std::size_t units = s.values.size() * s.replicates;

    std::optional<Signal> base_input;
    if (!s.baseline.input.empty())
        base_input = read_signal(s.baseline.input, parse_signal_format(s.baseline.input_format), s.baseline.input_fs);

    SweepResult result;
    result.parameter = s.parameter;
    result.runs.resize(units * kinds.size());

    const unsigned workers = static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(s.workers, units)));
    std::atomic<std::size_t> next{0};
    std::mutex progress_mutex;

    auto run_unit = [&](std::size_t u) {
        const std::size_t vi = u / s.replicates;
        const std::size_t rep = u % s.replicates;
        const double value = s.values[vi];
        std::optional<Signal> sig;
        std::string sig_error;
        RunConfig cfg;
        try {
            cfg = run_config_for(s, value, rep, kinds.front());
            if (workers > 1) cfg.acp.threads = 1;
            sig = base_input ? inject_impulses(*base_input, cfg.impulse)
                             : synthesize(cfg.impulse, cfg.noise, cfg.length, cfg.fs, cfg.seed);
            check_fault_frequency(cfg.acp, sig->fs(), cfg.impulse.fault_hz);
        } catch (const std::exception& e) {
            sig.reset();
            sig_error = e.what();
        }
        for (std::size_t k = 0; k < kinds.size(); ++k) {
            RunRecord& rec = result.runs[u * kinds.size() + k];
            rec.value = value;
            rec.replicate = rep;
            rec.estimator = estimator_label(kinds[k]);
            rec.seed = {s.base_seed, derive_stream("noise", rep)};
            if (!sig) {
                rec.error = sig_error;
            } else {
                try {
                    const SCMap m = robust_spectral_coherence(*sig, cfg.acp, kinds[k]);
                    rec.tau = compute_metrics(m, cfg.impulse.band, cfg.impulse.fault_hz).tau_gamma;
                    rec.degenerate_cells = m.degenerate_cells;
                    rec.ok = true;
                } catch (const std::exception& e) {
                    rec.error = e.what();
                }
            }
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(rec);
            }
        }
    };

    if (workers == 1) {
        for (std::size_t u = 0; u < units; ++u) run_unit(u);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t u = next++; u < units; u = next++) run_unit(u);
            });
    }

    for (std::size_t vi = 0; vi < s.values.size(); ++vi) {
        for (std::size_t k = 0; k < kinds.size(); ++k) {
            AggregateRow row;
            row.value = s.values[vi];
            row.estimator = estimator_label(kinds[k]);
            double sum = 0.0;
            for (std::size_t rep = 0; rep < s.replicates; ++rep) {
                const auto& rec = result.runs[(vi * s.replicates + rep) * kinds.size() + k];
                if (rec.ok) {
                    ++row.n_ok;
                    sum += rec.tau;
                } else {
                    ++row.n_failed;
                }
            }
            row.mean_tau = row.n_ok ? sum / static_cast<double>(row.n_ok) : std::nan("");
            if (row.n_ok > 1) {
                double ss = 0.0;
                for (std::size_t rep = 0; rep < s.replicates; ++rep) {
                    const auto& rec = result.runs[(vi * s.replicates + rep) * kinds.size() + k];
                    if (rec.ok) ss += (rec.tau - row.mean_tau) * (rec.tau - row.mean_tau);
                }
                row.std_tau = std::sqrt(ss / static_cast<double>(row.n_ok - 1));
            }
            result.aggregate.push_back(row);
        }
    }
    return result;
}

inline std::string format_aggregate_csv(const SweepResult& r) {
    std::string out = "parameter,value,estimator,n_ok,n_failed,mean_tau,std_tau\n";
    for (const auto& a : r.aggregate) {
        out += r.parameter + ',' + detail::format_double(a.value) + ',' + a.estimator + ',' + std::to_string(a.n_ok) +
               ',' + std::to_string(a.n_failed) + ',';
        out += a.n_ok ? detail::format_double(a.mean_tau) + ',' + detail::format_double(a.std_tau) : std::string("NA,NA");
        out += '\n';
    }
    return out;
}

namespace detail {
inline std::string csv_quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + '"';
}
} // namespace detail

inline std::string format_runs_csv(const SweepResult& r) {
    std::string out = "parameter,value,replicate,estimator,seed,stream_id,status,tau,degenerate_cells,error\n";
    for (const auto& x : r.runs) {
        out += r.parameter + ',' + detail::format_double(x.value) + ',' + std::to_string(x.replicate) + ',' +
               x.estimator + ',' + std::to_string(x.seed.seed) + ',' + std::to_string(x.seed.stream_id) + ',' +
               (x.ok ? "ok," + detail::format_double(x.tau) : std::string("failed,NA")) + ',' +
               std::to_string(x.degenerate_cells) + ',' + detail::csv_quote(x.error) + '\n';
    }
    return out;
}

inline Json to_json(const SweepSpec& s) {
    Json j;
    j["parameter"] = s.parameter;
    j["values"] = s.values;
    Json ests = Json::array();
    for (const auto& k : sweep_estimators(s)) ests.push_back(to_json(k));
    j["estimators"] = std::move(ests);
    j["replicates"] = s.replicates;
    j["base_seed"] = s.base_seed;
    j["workers"] = s.workers;
    j["baseline"] = to_json(s.baseline);
    return j;
}

/// Estimators may be given as ids ("kendall") or objects ({"id": "trimmed", "trim_c": 0.025}).
inline SweepSpec sweep_spec_from_json(const Json& j) {
    detail::check_keys(j, {"parameter", "values", "estimators", "replicates", "base_seed", "workers", "baseline"},
                       "sweep");
    SweepSpec s;
    detail::read_opt(j, "parameter", s.parameter);
    detail::read_opt(j, "values", s.values);
    detail::read_opt(j, "replicates", s.replicates);
    detail::read_opt(j, "base_seed", s.base_seed);
    detail::read_opt(j, "workers", s.workers);
    if (j.contains("baseline")) s.baseline = run_config_from_json(j.at("baseline"));
    if (j.contains("estimators")) {
        for (const auto& e : j.at("estimators")) {
            if (e.is_string()) s.estimators.push_back(parse_estimator(e.get<std::string>()));
            else s.estimators.push_back(estimator_from_json(e));
        }
    }
    return s;
}

} // namespace robustsc
