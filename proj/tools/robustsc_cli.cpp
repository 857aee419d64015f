// robustsc: command-line front end.
//
//   simulate     impulse train + heavy-tailed noise -> signal CSV
//   inject       add an impulse train to a recorded signal
//   spectrogram  Hann STFT magnitudes -> CSV (+ PNG)
//   scmap        spectral coherence map -> CSV (+ PNG)
//   metrics      R_gamma curve and tau from a map CSV -> JSON report + CSV curve
//   sweep        tau over a parameter grid, replicates and estimators
//
// Each command writes "<output>.config.json" with the resolved configuration;
// passing it back with --config reruns the same stage.
//
// Exit status: 0 success, 1 runtime failure, 2 usage error, 3 sweep finished
// with failed runs.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "robustsc.hpp"

namespace rs = robustsc;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitSweepFailures = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

rs::Band parse_band(const std::string& s) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw UsageError("--band expects lo:hi, got '" + s + "'");
    const auto lo = rs::detail::parse_double(std::string_view(s).substr(0, colon));
    const auto hi = rs::detail::parse_double(std::string_view(s).substr(colon + 1));
    if (!lo || !hi || !(*lo >= 0.0) || !(*lo < *hi)) throw UsageError("--band expects 0 <= lo < hi, got '" + s + "'");
    return {*lo, *hi};
}

std::string band_string(const rs::Band& b) {
    return rs::detail::format_double(b.lo) + ":" + rs::detail::format_double(b.hi);
}

/// Finds "--name value" or "--name=value" before CLI11 sees the arguments, so
/// that a config file can seed the defaults the flags then override.
std::string prescan(int argc, char** argv, const std::string& name) {
    const std::string flag = "--" + name;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == flag && i + 1 < argc) return argv[i + 1];
        if (a.rfind(flag + "=", 0) == 0) return a.substr(flag.size() + 1);
    }
    return {};
}

// Flag groups bind directly into a RunConfig seeded from --config.
struct Options {
    rs::RunConfig cfg;
    std::string config_path;
    std::string band;
    std::string noise_id;
    rs::Mixture mix;
    rs::StudentT student;
    rs::AlphaStable stable;
    std::string estimator_id;
    double trim_c = rs::Trimmed{}.c;
    std::string spearman_transform = "standard";
    std::optional<double> fs_override;
    bool progress = false;

    std::vector<CLI::Option*> mixture_flags, student_flags, stable_flags;

    explicit Options(rs::RunConfig c) : cfg(std::move(c)) {
        band = band_string(cfg.impulse.band);
        noise_id = std::string(rs::noise_model_id(cfg.noise));
        if (auto* m = std::get_if<rs::Mixture>(&cfg.noise)) mix = *m;
        if (auto* t = std::get_if<rs::StudentT>(&cfg.noise)) student = *t;
        if (auto* a = std::get_if<rs::AlphaStable>(&cfg.noise)) stable = *a;
        estimator_id = std::string(rs::estimator_id(cfg.estimator));
        if (auto* t = std::get_if<rs::Trimmed>(&cfg.estimator)) trim_c = t->c;
        if (auto* s = std::get_if<rs::Spearman>(&cfg.estimator))
            spearman_transform = std::string(rs::spearman_transform_id(s->transform));
        fs_override = cfg.input_fs;
    }

    void add_config(CLI::App* app) {
        app->add_option("--config", config_path, "Resolved config JSON to start from (flags override it)");
    }

    void add_impulse(CLI::App* app) {
        app->add_option("-B,--amplitude", cfg.impulse.amplitude, "Impulse amplitude B")->capture_default_str();
        app->add_option("--carrier", cfg.impulse.carrier_hz, "Impulse carrier frequency [Hz]")->capture_default_str();
        app->add_option("--decay", cfg.impulse.decay, "Impulse decay rate d [1/s]")->capture_default_str();
        app->add_option("--offset", cfg.impulse.phase_offset_s, "Time of the first impulse [s]")->capture_default_str();
        add_fault(app);
        add_band(app);
    }

    void add_fault(CLI::App* app) {
        app->add_option("--fault-freq", cfg.impulse.fault_hz, "Fault frequency f_f [Hz]")->capture_default_str();
    }

    void add_band(CLI::App* app) {
        app->add_option("--band", band, "Informative band lo:hi [Hz]")->capture_default_str();
    }

    void add_noise(CLI::App* app) {
        app->add_option("--noise", noise_id, "Noise model")
            ->check(CLI::IsMember({"mixture", "student", "stable"}))
            ->capture_default_str();
        mixture_flags = {app->add_option("--mix-a", mix.a, "Mixture impulse amplitude bound a")->capture_default_str(),
                         app->add_option("--mix-p", mix.p, "Mixture impulse probability p")->capture_default_str(),
                         app->add_option("--mix-D", mix.D, "Mixture Gaussian scale D")->capture_default_str()};
        student_flags = {app->add_option("--nu", student.nu, "Student-t degrees of freedom")->capture_default_str(),
                         app->add_option("--delta", student.delta, "Student-t scale")->capture_default_str()};
        stable_flags = {app->add_option("--alpha", stable.alpha, "Stability index")->capture_default_str(),
                        app->add_option("--sigma", stable.sigma, "Stable scale")->capture_default_str()};
    }

    void add_synthesis(CLI::App* app) {
        app->add_option("--fs", cfg.fs, "Sampling rate [Hz]")->capture_default_str();
        app->add_option("-L,--length", cfg.length, "Number of samples")->capture_default_str();
        app->add_option("--seed", cfg.seed.seed, "Base seed")->capture_default_str();
        app->add_option("--stream", cfg.seed.stream_id, "Stream id")->capture_default_str();
        add_impulse(app);
        add_noise(app);
    }

    void add_input(CLI::App* app, bool required = true, bool with_fs = true) {
        auto* o = app->add_option("-i,--input", cfg.input, "Input signal (CSV or WAV)");
        if (required && cfg.input.empty()) o->required();
        app->add_option("--format", cfg.input_format, "Input format (csv, wav; default from extension)")
            ->check(CLI::IsMember({"", "auto", "csv", "wav"}));
        if (with_fs)
            app->add_option("--fs", fs_override, "Sampling rate for CSV input without an fs= header [Hz]");
    }

    void add_acp(CLI::App* app) {
        app->add_option("--nfft", cfg.acp.nfft, "DFT length")->capture_default_str();
        app->add_option("--win-len", cfg.acp.win_len, "Window length n")->capture_default_str();
        app->add_option("--nover", cfg.acp.nover, "Window overlap")->capture_default_str();
        app->add_option("--eps-min", cfg.acp.eps_min, "First cyclic frequency [Hz]")->capture_default_str();
        app->add_option("--eps-max", cfg.acp.eps_max, "Last cyclic frequency [Hz]")->capture_default_str();
        app->add_option("--eps-step", cfg.acp.eps_step, "Cyclic frequency step [Hz]")->capture_default_str();
        app->add_option("--threads", cfg.acp.threads, "Worker threads (0: all cores)")->capture_default_str();
    }

    void add_estimator(CLI::App* app) {
        app->add_option("-e,--estimator", estimator_id, "acvf, acf, trimmed, kendall, spearman or ncv")
            ->capture_default_str();
        app->add_option("--trim", trim_c, "Trimming constant c for the trimmed estimator")->capture_default_str();
        app->add_option("--spearman-transform", spearman_transform, "standard or printed")->capture_default_str();
    }

    void add_output(CLI::App* app, const std::string& fallback) {
        if (cfg.output.empty()) cfg.output = fallback;
        app->add_option("-o,--out", cfg.output, "Output file")->capture_default_str();
    }

    void add_png(CLI::App* app) {
        app->add_option("--png", cfg.png, "Also render a PNG heatmap to this path");
        app->add_option("--dpi", cfg.render.dpi, "Image resolution")->capture_default_str();
        app->add_option("--width-in", cfg.render.width_in, "Image width [in]")->capture_default_str();
        app->add_option("--height-in", cfg.render.height_in, "Image height [in]")->capture_default_str();
    }

    /// Folds the loose flag values back into cfg and checks cross-flag consistency.
    void finish() {
        cfg.impulse.band = parse_band(band);
        cfg.input_fs = fs_override;
        auto used = [](const std::vector<CLI::Option*>& v) {
            for (auto* o : v)
                if (o->count() > 0) return o->get_name();
            return std::string();
        };
        const std::string wrong = noise_id == "mixture" ? used(student_flags) + used(stable_flags)
                                  : noise_id == "student" ? used(mixture_flags) + used(stable_flags)
                                                          : used(mixture_flags) + used(student_flags);
        if (!wrong.empty()) throw UsageError(wrong + " does not apply to the " + noise_id + " noise model");
        if (noise_id == "mixture") cfg.noise = mix;
        else if (noise_id == "student") cfg.noise = student;
        else cfg.noise = stable;
        cfg.estimator = rs::parse_estimator(estimator_id, trim_c, rs::parse_spearman_transform(spearman_transform));
    }

    rs::RenderOptions render_options() const {
        rs::RenderOptions o;
        o.width_in = cfg.render.width_in;
        o.height_in = cfg.render.height_in;
        o.dpi = cfg.render.dpi;
        return o;
    }
};

void write_sidecar(const rs::RunConfig& cfg) { rs::save_run_config(cfg, rs::sidecar_path(cfg.output)); }

rs::Signal load_input(const rs::RunConfig& cfg) {
    return rs::read_signal(cfg.input, rs::parse_signal_format(cfg.input_format), cfg.input_fs);
}

void check_band_nyquist(const rs::Band& band, double fs) {
    if (band.hi > fs / 2.0)
        throw UsageError("band upper edge " + rs::detail::format_double(band.hi) + " Hz exceeds the Nyquist frequency " +
                         rs::detail::format_double(fs / 2.0) + " Hz");
}

int cmd_simulate(rs::RunConfig cfg) {
    cfg.command = "simulate";
    const rs::Signal x = rs::synthesize(cfg.impulse, cfg.noise, cfg.length, cfg.fs, cfg.seed);
    rs::write_signal(x, cfg.output);
    write_sidecar(cfg);
    std::printf("wrote %s (%zu samples at %g Hz)\n", cfg.output.c_str(), x.size(), x.fs());
    return 0;
}

int cmd_inject(rs::RunConfig cfg) {
    cfg.command = "inject";
    const rs::Signal base = load_input(cfg);
    const rs::Signal x = rs::inject_impulses(base, cfg.impulse);
    rs::write_signal(x, cfg.output);
    write_sidecar(cfg);
    std::printf("wrote %s (%zu samples at %g Hz, B = %g)\n", cfg.output.c_str(), x.size(), x.fs(),
                cfg.impulse.amplitude);
    return 0;
}

int cmd_spectrogram(rs::RunConfig cfg, rs::RenderOptions ropt) {
    cfg.command = "spectrogram";
    const rs::Signal x = load_input(cfg);
    const rs::Spectrogram s = rs::spectrogram(x, cfg.acp);
    rs::write_spectrogram(s, cfg.output);
    if (!cfg.png.empty()) {
        ropt.band = cfg.impulse.band;
        rs::render_heatmap(s, cfg.png, ropt);
    }
    write_sidecar(cfg);
    std::printf("wrote %s (%zu bins x %zu frames)\n", cfg.output.c_str(), s.magnitudes.rows(), s.magnitudes.cols());
    return 0;
}

int cmd_scmap(rs::RunConfig cfg, rs::RenderOptions ropt, bool progress) {
    cfg.command = "scmap";
    const rs::Signal x = load_input(cfg);
    rs::validate(cfg.acp, x.fs());
    rs::check_fault_frequency(cfg.acp, x.fs(), cfg.impulse.fault_hz);
    check_band_nyquist(cfg.impulse.band, x.fs());
    rs::ProgressFn report;
    if (progress) {
        report = [](std::size_t done, std::size_t total) {
            std::fprintf(stderr, "\r%zu/%zu columns", done, total);
            if (done == total) std::fputc('\n', stderr);
        };
    }
    const rs::SCMap m = rs::robust_spectral_coherence(x, cfg.acp, cfg.estimator, report);
    rs::write_map(m, cfg.output);
    if (!cfg.png.empty()) {
        ropt.band = cfg.impulse.band;
        ropt.cyclic_eps = rs::cyclic_frequencies(cfg.impulse.fault_hz, m.eps_grid);
        rs::render_heatmap(m, cfg.png, ropt);
    }
    write_sidecar(cfg);
    std::printf("wrote %s (%zu f x %zu eps, estimator %s, %zu degenerate cells)\n", cfg.output.c_str(),
                m.values.rows(), m.values.cols(), rs::estimator_label(m.estimator).c_str(), m.degenerate_cells);
    return 0;
}

std::filesystem::path ratios_path(const std::filesystem::path& report) {
    auto p = report;
    p.replace_extension();
    p += ".ratios.csv";
    return p;
}

int cmd_metrics(rs::RunConfig cfg) {
    cfg.command = "metrics";
    const rs::SCMap m = rs::read_map(cfg.input);
    const rs::MetricsReport r = rs::compute_metrics(m, cfg.impulse.band, cfg.impulse.fault_hz, cfg.column_profile);
    rs::write_report(r, cfg.output);
    rs::write_file_atomic(ratios_path(cfg.output), rs::format_ratio_csv(r));
    write_sidecar(cfg);
    std::printf("tau_gamma %s\n", rs::detail::format_double(r.tau_gamma).c_str());
    const auto top = rs::top_eps(r.amp_ratio, 3);
    std::printf("top R_gamma at eps:");
    for (double e : top) std::printf(" %g", e);
    std::printf("\nwrote %s\n", cfg.output.c_str());
    return 0;
}

int cmd_sweep(rs::SweepSpec spec, const std::filesystem::path& out_dir, bool progress) {
    spec.baseline.command = "sweep";
    rs::validate(spec);
    namespace fs = std::filesystem;
    const auto kinds = rs::sweep_estimators(spec);

    // Per-run configs first, so they exist even if the sweep is interrupted.
    std::size_t index = 0;
    for (std::size_t vi = 0; vi < spec.values.size(); ++vi)
        for (std::size_t rep = 0; rep < spec.replicates; ++rep)
            for (const auto& k : kinds) {
                auto c = rs::run_config_for(spec, spec.values[vi], rep, k);
                char name[64];
                std::snprintf(name, sizeof name, "run_%04zu.json", index++);
                c.output.clear();
                rs::save_run_config(c, out_dir / "runs" / name);
            }
    rs::save_json(rs::to_json(spec), out_dir / "sweep.json");

    rs::SweepProgress report;
    if (progress) {
        report = [](const rs::RunRecord& r) {
            std::fprintf(stderr, "value %g replicate %zu %s: %s\n", r.value, r.replicate, r.estimator.c_str(),
                         r.ok ? rs::detail::format_double(r.tau).c_str() : r.error.c_str());
        };
    }
    const rs::SweepResult res = rs::run_sweep(spec, report);
    rs::write_file_atomic(out_dir / "aggregate.csv", rs::format_aggregate_csv(res));
    rs::write_file_atomic(out_dir / "runs.csv", rs::format_runs_csv(res));
    std::fputs(rs::format_aggregate_csv(res).c_str(), stdout);
    if (res.failures() > 0) {
        std::fprintf(stderr, "%zu of %zu runs failed; see %s\n", res.failures(), res.runs.size(),
                     (out_dir / "runs.csv").c_str());
        return kExitSweepFailures;
    }
    return 0;
}

int run(int argc, char** argv) {
    rs::RunConfig seed_cfg;
    if (const auto path = prescan(argc, argv, "config"); !path.empty()) seed_cfg = rs::load_run_config(path);
    rs::SweepSpec sweep_seed;
    if (const auto path = prescan(argc, argv, "recipe"); !path.empty()) {
        sweep_seed = rs::sweep_spec_from_json(rs::parse_json_file(path));
        seed_cfg = sweep_seed.baseline;
    }

    CLI::App app{"Robust spectral coherence for cyclostationarity detection in heavy-tailed noise"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "robustsc 0.1.0");

    // One Options instance per subcommand so that defaults never leak between them.
    Options sim(seed_cfg), inj(seed_cfg), spg(seed_cfg), scm(seed_cfg), met(seed_cfg), swp(seed_cfg);

    auto* c_sim = app.add_subcommand("simulate", "Synthesize an impulse train in heavy-tailed noise");
    sim.add_config(c_sim);
    sim.add_synthesis(c_sim);
    sim.add_output(c_sim, "signal.csv");

    auto* c_inj = app.add_subcommand("inject", "Add an impulse train to a recorded signal");
    inj.add_config(c_inj);
    inj.add_input(c_inj);
    inj.add_impulse(c_inj);
    inj.add_output(c_inj, "injected.csv");

    auto* c_spg = app.add_subcommand("spectrogram", "Hann-window STFT magnitudes");
    spg.add_config(c_spg);
    spg.add_input(c_spg);
    spg.add_acp(c_spg);
    spg.add_band(c_spg);
    spg.add_output(c_spg, "spectrogram.csv");
    spg.add_png(c_spg);

    auto* c_scm = app.add_subcommand("scmap", "Spectral coherence map for one estimator");
    scm.add_config(c_scm);
    scm.add_input(c_scm);
    scm.add_acp(c_scm);
    scm.add_estimator(c_scm);
    scm.add_fault(c_scm);
    scm.add_band(c_scm);
    scm.add_output(c_scm, "map.csv");
    scm.add_png(c_scm);
    c_scm->add_flag("--progress", scm.progress, "Report column progress on stderr");

    auto* c_met = app.add_subcommand("metrics", "Amplitude ratios and the performance indicator of a map");
    met.add_config(c_met);
    {
        auto* o = c_met->add_option("-m,--map,-i,--input", met.cfg.input, "Map CSV");
        if (met.cfg.input.empty()) o->required();
    }
    met.add_fault(c_met);
    met.add_band(c_met);
    c_met->add_flag("--profile,!--no-profile", met.cfg.column_profile, "Include the column-mean profile");
    met.add_output(c_met, "report.json");

    auto* c_swp = app.add_subcommand("sweep", "Performance indicator over a parameter grid");
    std::string recipe;
    std::string out_dir = "sweep_out";
    std::string param = sweep_seed.parameter;
    std::vector<double> values = sweep_seed.values;
    std::vector<std::string> estimators;
    std::size_t replicates = sweep_seed.replicates;
    std::uint64_t base_seed = sweep_seed.base_seed;
    unsigned workers = sweep_seed.workers;
    c_swp->add_option("--recipe", recipe, "Sweep recipe JSON (flags override it)");
    auto* o_param = c_swp->add_option("--param", param, "Swept parameter: a, p, nu, delta, alpha, sigma or B");
    if (param.empty()) o_param->required();
    c_swp->add_option("--values", values, "Comma-separated values")->delimiter(',');
    c_swp->add_option("--estimators", estimators, "Comma-separated estimator ids (default: --estimator)")
        ->delimiter(',');
    c_swp->add_option("--replicates", replicates, "Replicates per value")->capture_default_str();
    c_swp->add_option("--base-seed", base_seed, "Base seed shared by all runs")->capture_default_str();
    c_swp->add_option("--workers", workers, "Concurrent runs")->capture_default_str();
    c_swp->add_option("--out-dir", out_dir, "Directory for sweep outputs")->capture_default_str();
    c_swp->add_flag("--progress", swp.progress, "Report each finished run on stderr");
    swp.add_synthesis(c_swp);
    swp.add_input(c_swp, false, false);
    swp.add_acp(c_swp);
    swp.add_estimator(c_swp);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitUsage;
    }

    if (c_sim->parsed()) {
        sim.finish();
        return cmd_simulate(sim.cfg);
    }
    if (c_inj->parsed()) {
        inj.finish();
        return cmd_inject(inj.cfg);
    }
    if (c_spg->parsed()) {
        spg.finish();
        return cmd_spectrogram(spg.cfg, spg.render_options());
    }
    if (c_scm->parsed()) {
        scm.finish();
        return cmd_scmap(scm.cfg, scm.render_options(), scm.progress);
    }
    if (c_met->parsed()) {
        met.finish();
        return cmd_metrics(met.cfg);
    }
    swp.finish();
    rs::SweepSpec spec;
    spec.parameter = param;
    spec.values = values;
    spec.baseline = swp.cfg;
    for (const auto& id : estimators)
        spec.estimators.push_back(rs::parse_estimator(id, swp.trim_c, rs::parse_spearman_transform(swp.spearman_transform)));
    if (estimators.empty() && !sweep_seed.estimators.empty()) spec.estimators = sweep_seed.estimators;
    spec.replicates = replicates;
    spec.base_seed = base_seed;
    spec.workers = workers;
    return cmd_sweep(spec, out_dir, swp.progress);
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const rs::InvalidParameter& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
}
