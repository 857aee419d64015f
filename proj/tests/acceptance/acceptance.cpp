// Acceptance suite. Each criterion runs on its own (`acceptance N`) so that
// ctest can give the long Monte Carlo criteria their own timeouts; `acceptance
// all` runs every criterion in order. One PASS/FAIL line is printed per
// criterion and the exit status is non-zero if any of them fails.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "robustsc.hpp"

using namespace robustsc;
namespace fs = std::filesystem;

namespace {

constexpr double kFs = 25000.0;
constexpr std::size_t kLength = 50000;

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string list(const std::vector<double>& v) {
    std::string s = "{";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt("%g", v[i]);
    return s + "}";
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

bool top3_cyclic(const EpsCurve& r, const std::vector<double>& cyclic) {
    auto top = top_eps(r, 3);
    std::sort(top.begin(), top.end());
    return top == cyclic;
}

bool any_top3_cyclic(const EpsCurve& r, const std::vector<double>& cyclic) {
    for (double e : top_eps(r, 3))
        if (std::find(cyclic.begin(), cyclic.end(), e) != cyclic.end()) return true;
    return false;
}

Signal case3(std::uint64_t seed, double amplitude = 45.0) {
    ImpulseTrainSpec spec;
    spec.amplitude = amplitude;
    return synthesize(spec, AlphaStable{1.7, 3.0}, kLength, kFs, Seed{seed, derive_stream("noise", 0)});
}

// 1. Estimators against definitional brute-force implementations.
Outcome criterion1() {
    Stopwatch clock;
    RandomStream rng(Seed{2024, 1});
    double worst[6] = {};
    for (std::size_t n : {5u, 50u, 200u}) {
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> a(n), b(n);
            for (std::size_t i = 0; i < n; ++i) {
                a[i] = rng.normal() * (rng.uniform() < 0.1 ? 50.0 : 1.0);
                b[i] = 0.5 * a[i] + rng.normal();
            }
            const std::span<const double> sa(a), sb(b);
            const double got[6] = {sample_cov(sa, sb),      sample_corr(sa, sb),   trimmed_cov(sa, sb, 0.1),
                                   kendall_corr(sa, sb),    spearman_corr(sa, sb), ncv(sa, sb)};
            const double want[6] = {oracle::cov(a, b),        oracle::corr(a, b),        oracle::trimmed(a, b, 0.1),
                                    oracle::kendall_m3(a, b), oracle::spearman_m4(a, b), oracle::ncv(a, b)};
            for (int k = 0; k < 6; ++k) worst[k] = std::max(worst[k], std::abs(got[k] - want[k]));
        }
    }
    const double err = *std::max_element(std::begin(worst), std::end(worst));
    const double t = clock.seconds();
    return {err <= 1e-12 && t < 10.0, "max abs error " + fmt("%.3g", err) + ", " + fmt("%.2f", t) + " s"};
}

// 2. Kendall and Spearman transforms recover rho for Gaussian pairs.
Outcome criterion2() {
    Stopwatch clock;
    constexpr std::size_t n = 100000;
    bool pass = true;
    std::string detail;
    for (double rho : {0.0, 0.5, 0.9}) {
        int ok3 = 0, ok4 = 0;
        double worst = 0.0;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            RandomStream rng(Seed{seed, 200});
            std::vector<double> x(n), y(n);
            for (std::size_t i = 0; i < n; ++i) {
                x[i] = rng.normal();
                y[i] = rho * x[i] + std::sqrt(1.0 - rho * rho) * rng.normal();
            }
            const std::span<const double> sx(x), sy(y);
            const double e3 = std::abs(kendall_corr(sx, sy) - rho);
            const double e4 = std::abs(spearman_corr(sx, sy) - rho);
            ok3 += e3 <= 0.02;
            ok4 += e4 <= 0.02;
            worst = std::max({worst, e3, e4});
        }
        pass = pass && ok3 >= 9 && ok4 >= 9;
        detail += "rho " + fmt("%g", rho) + ": M3 " + std::to_string(ok3) + "/10, M4 " + std::to_string(ok4) +
                  "/10 (worst " + fmt("%.4f", worst) + "); ";
    }
    const double t = clock.seconds();
    return {pass && t < 30.0, detail + fmt("%.1f", t) + " s"};
}

// 3. Noise model moments at one million samples.
Outcome criterion3() {
    Stopwatch clock;
    constexpr std::size_t n = 1000000;
    auto variance = [](const Signal& s) {
        double m = 0.0, m2 = 0.0;
        for (double v : s.samples()) {
            m += v;
            m2 += v * v;
        }
        m /= static_cast<double>(s.size());
        return m2 / static_cast<double>(s.size()) - m * m;
    };
    auto quantile = [](std::vector<double> v, double q) {
        const auto k = static_cast<std::ptrdiff_t>(q * static_cast<double>(v.size() - 1));
        std::nth_element(v.begin(), v.begin() + k, v.end());
        return v[static_cast<std::size_t>(k)];
    };
    constexpr double sigma = 3.0;
    const double v_mix = variance(sample_gaussian_mixture({300.0, 0.001, 8.0}, n, kFs, {31, 0}));
    const double v_t = variance(sample_student_t({3.0, 1.0}, n, kFs, {32, 0}));
    const double v_s2 = variance(sample_alpha_stable({2.0, sigma}, n, kFs, {33, 0}));
    const Signal cauchy = sample_alpha_stable({1.0, sigma}, n, kFs, {34, 0});
    const double iqr = quantile(cauchy.samples(), 0.75) - quantile(cauchy.samples(), 0.25);

    const double r_mix = std::abs(v_mix / 94.0 - 1.0);
    const double r_t = std::abs(v_t / 3.0 - 1.0);
    const double r_s2 = std::abs(v_s2 / (2.0 * sigma * sigma) - 1.0);
    const double r_c = std::abs(iqr / (2.0 * sigma) - 1.0);
    const double t = clock.seconds();
    return {r_mix <= 0.03 && r_t <= 0.05 && r_s2 <= 0.03 && r_c <= 0.03 && t < 30.0,
            "mixture var " + fmt("%.3f", v_mix) + ", t(3,1) var " + fmt("%.4f", v_t) + ", S(2,3) var " +
                fmt("%.3f", v_s2) + ", S(1,3) IQR " + fmt("%.4f", iqr) + ", " + fmt("%.1f", t) + " s"};
}

// 4. Segment count and map shape.
Outcome criterion4() {
    const AcpConfig cfg;
    const std::size_t k = cfg.segment_count(kLength);
    const auto f = frequency_grid(cfg, kFs);
    const auto e = eps_grid(cfg);
    const Signal x(std::vector<double>(kLength, 0.0), kFs);
    const auto slices = demodulated_spectral_slices(x, 30.0, cfg);
    const bool pass = k == 2771 && slices.segments == 2771 && f.size() == 257 && e.size() == 98 && e.front() == 3.0 &&
                      e.back() == 100.0;
    return {pass, "K = " + std::to_string(slices.segments) + ", shape " + std::to_string(f.size()) + " x " +
                      std::to_string(e.size())};
}

// 5. AM tone: the three largest R_gamma sit at 30, 60 and 90 Hz for every estimator.
Outcome criterion5() {
    RandomStream rng(Seed{5, 0});
    std::vector<double> v(kLength);
    for (std::size_t k = 0; k < kLength; ++k) {
        const double t = static_cast<double>(k) / kFs;
        v[k] = (1.0 + std::cos(2.0 * std::numbers::pi * 30.0 * t)) * std::sin(2.0 * std::numbers::pi * 5000.0 * t) +
               0.1 * rng.normal();
    }
    const Signal x(std::move(v), kFs);
    const AcpConfig cfg;
    const std::vector<double> cyclic{30, 60, 90};
    bool pass = true;
    std::string detail;
    for (const EstimatorKind& kind :
         {EstimatorKind{SampleAcvf{}}, EstimatorKind{SampleAcf{}}, EstimatorKind{Trimmed{}}, EstimatorKind{Kendall{}},
          EstimatorKind{Spearman{}}, EstimatorKind{Ncv{}}}) {
        Stopwatch clock;
        const SCMap m = robust_spectral_coherence(x, cfg, kind);
        const double t = clock.seconds();
        const auto r = amplitude_ratio(m, Band{});
        const bool ok = top3_cyclic(r, cyclic) && t < 180.0;
        pass = pass && ok;
        detail += std::string(estimator_id(kind)) + (ok ? " ok" : " MISS") + " top " + list(top_eps(r, 3)) + " " +
                  fmt("%.0f", t) + " s; ";
    }
    return {pass, detail};
}

// 6. Case 3: robust maps beat the classical one and kendall locates the harmonics.
Outcome criterion6() {
    const AcpConfig cfg;
    const std::vector<double> cyclic{30, 60, 90};
    const EstimatorKind kinds[] = {SampleAcvf{}, Kendall{}, Spearman{}, Trimmed{0.015}};
    std::vector<double> tau[4];
    int kendall_hits = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Signal x = case3(seed);
        for (int k = 0; k < 4; ++k) {
            const SCMap m = robust_spectral_coherence(x, cfg, kinds[k]);
            const auto rep = compute_metrics(m, Band{}, 30.0);
            tau[k].push_back(rep.tau_gamma);
            if (k == 1) kendall_hits += top3_cyclic(rep.amp_ratio, cyclic);
        }
        std::fprintf(stderr, "criterion 6 seed %llu: acvf %.4f kendall %.4f spearman %.4f trimmed %.4f\n",
                     static_cast<unsigned long long>(seed), tau[0].back(), tau[1].back(), tau[2].back(),
                     tau[3].back());
    }
    const double med[4] = {median(tau[0]), median(tau[1]), median(tau[2]), median(tau[3])};
    const bool pass = med[1] > med[0] && med[2] > med[0] && med[3] > med[0] && kendall_hits >= 8;
    return {pass, "median tau acvf " + fmt("%.4f", med[0]) + ", kendall " + fmt("%.4f", med[1]) + ", spearman " +
                      fmt("%.4f", med[2]) + ", trimmed " + fmt("%.4f", med[3]) + "; kendall top-3 at {30,60,90} in " +
                      std::to_string(kendall_hits) + "/10 seeds"};
}

// 7. Alpha sweep: kendall beats acvf in heavy tails, and tau does not rise as tails get heavier.
Outcome criterion7() {
    Stopwatch clock;
    SweepSpec s;
    s.parameter = "alpha";
    s.values = {1.2, 1.5, 1.8};
    s.baseline.noise = AlphaStable{1.7, 3.0};
    s.estimators = {SampleAcvf{}, Kendall{}};
    s.replicates = 5;
    s.base_seed = 7;
    const SweepResult r = run_sweep(s, [](const RunRecord& rec) {
        std::fprintf(stderr, "criterion 7 alpha %g replicate %zu %s: %s\n", rec.value, rec.replicate,
                     rec.estimator.c_str(), rec.ok ? fmt("%.4f", rec.tau).c_str() : rec.error.c_str());
    });
    const double t = clock.seconds();

    auto row = [&](double value, const std::string& est) -> const AggregateRow& {
        for (const auto& a : r.aggregate)
            if (a.value == value && a.estimator == est) return a;
        throw std::logic_error("missing aggregate row");
    };
    bool pass = r.failures() == 0;
    std::string detail;
    for (double a : {1.2, 1.5}) {
        const bool better = row(a, "kendall").mean_tau > row(a, "acvf").mean_tau;
        pass = pass && better;
        detail += "alpha " + fmt("%g", a) + " kendall " + fmt("%.4f", row(a, "kendall").mean_tau) +
                  (better ? " > " : " <= ") + "acvf " + fmt("%.4f", row(a, "acvf").mean_tau) + "; ";
    }
    for (const std::string est : {"acvf", "kendall"}) {
        for (std::size_t i = 0; i + 1 < s.values.size(); ++i) {
            const AggregateRow& heavy = row(s.values[i], est);
            const AggregateRow& light = row(s.values[i + 1], est);
            const double n1 = static_cast<double>(heavy.n_ok), n2 = static_cast<double>(light.n_ok);
            const double pooled_var = ((n1 - 1.0) * heavy.std_tau * heavy.std_tau +
                                       (n2 - 1.0) * light.std_tau * light.std_tau) / (n1 + n2 - 2.0);
            const double se = std::sqrt(pooled_var * (1.0 / n1 + 1.0 / n2));
            const bool ok = heavy.mean_tau <= light.mean_tau + se;
            pass = pass && ok;
            if (!ok)
                detail += est + " rises from alpha " + fmt("%g", s.values[i + 1]) + " to " + fmt("%g", s.values[i]) +
                          " by more than one SE; ";
        }
    }
    pass = pass && t < 1800.0;
    return {pass, detail + "trend check " + (pass ? "ok" : "see above") + ", " + fmt("%.0f", t) + " s"};
}

// 8. Noise-only Case 3: the kendall profile is flatter and no harmonic structure appears.
Outcome criterion8() {
    const AcpConfig cfg;
    const std::vector<double> cyclic{30, 60, 90};
    int flatter = 0, clean_kendall = 0, clean_acvf = 0;
    for (std::uint64_t seed = 101; seed <= 110; ++seed) {
        const Signal x = case3(seed, 0.0);
        const auto rk = compute_metrics(robust_spectral_coherence(x, cfg, Kendall{}), Band{}, 30.0, true);
        const auto ra = compute_metrics(robust_spectral_coherence(x, cfg, SampleAcvf{}), Band{}, 30.0, true);
        const double dk = dispersion(*rk.column_profile);
        const double da = dispersion(*ra.column_profile);
        flatter += dk < da;
        clean_kendall += !any_top3_cyclic(rk.amp_ratio, cyclic);
        clean_acvf += !any_top3_cyclic(ra.amp_ratio, cyclic);
        std::fprintf(stderr, "criterion 8 seed %llu: dispersion kendall %.4f acvf %.4f\n",
                     static_cast<unsigned long long>(seed), dk, da);
    }
    return {flatter >= 8 && clean_kendall >= 8 && clean_acvf >= 8,
            "kendall dispersion below acvf in " + std::to_string(flatter) + "/10 seeds; top-3 free of cyclic eps in " +
                std::to_string(clean_kendall) + "/10 (kendall), " + std::to_string(clean_acvf) + "/10 (acvf)"};
}

// 9. Every map is rescaled to max 1 and a flat ratio curve sits at chance level.
Outcome criterion9() {
    const fs::path dir = fs::temp_directory_path() / ("robustsc_accept9_" + std::to_string(::getpid()));
    AcpConfig cfg;
    cfg.threads = 0;
    const Signal x = synthesize(ImpulseTrainSpec{}, AlphaStable{}, 12500, kFs, Seed{9, 0});
    bool maps_ok = true;
    for (const EstimatorKind& kind :
         {EstimatorKind{SampleAcvf{}}, EstimatorKind{SampleAcf{}}, EstimatorKind{Trimmed{}}, EstimatorKind{Kendall{}},
          EstimatorKind{Spearman{}}, EstimatorKind{Ncv{}}}) {
        const SCMap m = robust_spectral_coherence(x, cfg, kind);
        write_map(m, dir / "map.csv");
        maps_ok = maps_ok && m.values.max() == 1.0 && read_map(dir / "map.csv").values.max() == 1.0;
    }
    fs::remove_all(dir);

    EpsCurve flat;
    for (double e : eps_grid(AcpConfig{})) flat.push_back({e, 0.37});
    const double tau = performance_indicator(flat, cyclic_frequencies(30.0, eps_grid(AcpConfig{})));
    const double err = std::abs(tau - 3.0 / 98.0);
    return {maps_ok && err <= 1e-12,
            std::string("maps rescaled to max 1: ") + (maps_ok ? "yes" : "no") + "; uniform tau error " +
                fmt("%.3g", err)};
}

#ifdef ROBUSTSC_CLI_PATH
int run_cli(const fs::path& dir, const std::string& args) {
    const std::string cmd =
        "cd '" + dir.string() + "' && '" + ROBUSTSC_CLI_PATH + "' " + args + " >>cli.log 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
#endif

// 10. Inject workflow: B = 0 is an identity and B = 0.25 yields a valid report.
Outcome criterion10() {
    const fs::path dir = fs::temp_directory_path() / ("robustsc_accept10_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const Signal recorded = sample_noise(Mixture{}, kLength, kFs, Seed{10, 0});
    write_signal(recorded, dir / "recorded.csv");
    const std::string original = detail::read_file(dir / "recorded.csv");

    bool identity = false, report_ok = false;
    std::string detail;
#ifdef ROBUSTSC_CLI_PATH
    identity = run_cli(dir, "inject -i recorded.csv -B 0 -o same.csv") == 0 &&
               detail::read_file(dir / "same.csv") == original;
    const bool ran = run_cli(dir, "inject -i recorded.csv -B 0.25 -o injected.csv") == 0 &&
                     run_cli(dir, "scmap -i injected.csv -e kendall -o map.csv --png map.png") == 0 &&
                     run_cli(dir, "metrics -m map.csv -o report.json") == 0;
    detail = "via command line; ";
#else
    ImpulseTrainSpec spec;
    spec.amplitude = 0.0;
    write_signal(inject_impulses(read_signal(dir / "recorded.csv"), spec), dir / "same.csv");
    identity = detail::read_file(dir / "same.csv") == original;
    spec.amplitude = 0.25;
    write_signal(inject_impulses(read_signal(dir / "recorded.csv"), spec), dir / "injected.csv");
    const SCMap m = robust_spectral_coherence(read_signal(dir / "injected.csv"), AcpConfig{}, Kendall{});
    write_map(m, dir / "map.csv");
    write_report(compute_metrics(read_map(dir / "map.csv"), spec.band, spec.fault_hz, true), dir / "report.json");
    const bool ran = true;
    detail = "via library; ";
#endif
    if (!ran) detail += "command failed (see cli.log); ";
    if (ran) {
        const MetricsReport r = read_report(dir / "report.json");
        report_ok = std::isfinite(r.tau_gamma) && r.tau_gamma >= 0.0 && r.tau_gamma <= 1.0 &&
                    r.amp_ratio.size() == 98 && r.cyclic_eps == std::vector<double>{30, 60, 90} &&
                    read_map(dir / "map.csv").values.max() == 1.0;
        detail += "tau " + fmt("%.4f", r.tau_gamma) + "; ";
    }
    fs::remove_all(dir);
    return {identity && report_ok, detail + "B = 0 identity: " + (identity ? "yes" : "no") +
                                       ", B = 0.25 report valid: " + (report_ok ? "yes" : "no")};
}

const std::vector<std::pair<std::string, std::function<Outcome()>>> kCriteria = {
    {"estimator oracle equivalence", criterion1},
    {"elliptical consistency of the rank transforms", criterion2},
    {"noise model moments", criterion3},
    {"segment count and map shape", criterion4},
    {"AM tone detection for every estimator", criterion5},
    {"Case 3 ordering of robust and classical maps", criterion6},
    {"alpha sweep trend", criterion7},
    {"noise-only disturbance profile", criterion8},
    {"rescaling and chance-level anchors", criterion9},
    {"inject workflow", criterion10},
};

bool run_one(std::size_t n) {
    const auto& [name, fn] = kCriteria[n - 1];
    Outcome o;
    try {
        o = fn();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %zu: %s (%s)\n", o.pass ? "PASS" : "FAIL", n, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    return o.pass;
}

} // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: %s <1-%zu|all>\n", argv[0], kCriteria.size());
        return 2;
    }
    const std::string arg = argv[1];
    bool all_pass = true;
    if (arg == "all") {
        for (std::size_t n = 1; n <= kCriteria.size(); ++n) all_pass = run_one(n) && all_pass;
    } else {
        const int n = std::atoi(arg.c_str());
        if (n < 1 || n > static_cast<int>(kCriteria.size())) {
            std::fprintf(stderr, "unknown criterion '%s'\n", arg.c_str());
            return 2;
        }
        all_pass = run_one(static_cast<std::size_t>(n));
    }
    return all_pass ? 0 : 1;
}
