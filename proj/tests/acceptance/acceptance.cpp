// End-to-end acceptance checks. One line per criterion; exit status is the
// number of failures (capped). Pass criterion numbers as arguments to run a
// subset, e.g. `acceptance 1 8`.

#include "chypnosim/cli.hpp"
#include "chypnosim/countermeasure.hpp"
#include "chypnosim/hibernation_scan.hpp"
#include "chypnosim/sensor_sim.hpp"
#include "chypnosim/sidechannel.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace chypnosim;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;

    // Records the first failing check; later ones only add to the count.
    int failures = 0;
    void require(bool ok, const std::string &what) {
        if (ok)
            return;
        if (failures++ == 0)
            detail = what;
        pass = false;
    }
};

std::string fmt(const char *f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// ---------------------------------------------------------------------------

RaceResult race_with(const DeviceProfile &p, const SensorConfig &s, double fall, double f,
                     double v_to, std::uint64_t trials, std::uint64_t seed) {
    RaceParams rp;
    rp.fall_time = fall;
    rp.f_clk = f;
    rp.v_to = v_to;
    rp.trials = trials;
    rp.seed = seed;
    return race(p, s, rp);
}

Verdict sensor_race_table(double elapsed_limit) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    const auto k = profiles::kintex7();
    const auto pf = profiles::polarfire();
    const std::uint64_t n = 200;

    const auto adc_fast = race_with(k, AdcSensorConfig{}, 80e-6, 10e6, 0.555, n, 1);
    const auto adc_slow = race_with(k, AdcSensorConfig{}, 0.4, 10e6, 0.555, n, 1);
    const auto at_fast = race_with(pf, AntiTamperConfig{}, 430e-9, 10e6, 0.88, n, 1);
    const auto at_slow = race_with(pf, AntiTamperConfig{}, 61.6e-3, 10e6, 0.88, n, 1);

    v.require(adc_fast.success_rate == 1.0, "ADC 80 us not bypassed in every trial");
    v.require(adc_slow.success_rate == 0.0, "ADC 400 ms bypassed in some trial");
    v.require(at_fast.success_rate == 1.0, "anti-tamper 430 ns not bypassed in every trial");
    v.require(at_fast.flags_histogram.size() == 1 && at_fast.flags_histogram.count("none"),
              "anti-tamper 430 ns raised a visible flag");
    v.require(at_slow.success_rate == 0.0, "anti-tamper 61.6 ms bypassed in some trial");
    v.require(at_slow.flags_histogram.size() == 1 &&
                  at_slow.flags_histogram.count("SLOW_CLOCK+VOLT_DETECT_LOW"),
              "anti-tamper 61.6 ms did not raise both flags");

    // The zeroization itself, on one explicit trial.
    const auto w = VoltageWaveform::ramp_and_hold(1.0, 0.88, 61.6e-3, 1e-3);
    v.require(run_anti_tamper(pf, AntiTamperConfig{}, w, 10e6, 0.0, 0.0).response_completed,
              "anti-tamper 61.6 ms did not zeroize");

    const auto again = race_with(pf, AntiTamperConfig{}, 430e-9, 10e6, 0.88, n, 1);
    v.require(again.successes == at_fast.successes &&
                  again.flags_histogram == at_fast.flags_histogram,
              "race not deterministic");

    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    v.require(dt < elapsed_limit, fmt("runtime %.2f s over budget", dt));
    if (v.pass)
        v.detail = "ADC 80us bypass, ADC 400ms respond, AT 430ns bypass, AT 61.6ms "
                   "flags+zeroize (" + std::to_string(n) + " trials each)";
    return v;
}

Verdict frequency_dependence() {
    Verdict v;
    const auto k = profiles::kintex7();
    const auto pf = profiles::polarfire();
    std::ostringstream rates;
    double prev = 2.0;
    for (double f : {1e6, 5e6, 10e6, 25e6, 50e6}) {
        const auto at = race_with(pf, AntiTamperConfig{}, 430e-9, f, 0.88, 500, 7);
        const auto adc = race_with(k, AdcSensorConfig{}, 80e-6, f, 0.555, 500, 7);
        rates << (f == 1e6 ? "" : " ") << f / 1e6 << "MHz:" << at.success_rate;
        v.require(at.success_rate <= prev, fmt("anti-tamper rate rises at %.0f Hz", f));
        v.require(adc.success_rate == 1.0, fmt("ADC rate below 1 at %.0f Hz", f));
        if (f == 1e6)
            v.require(at.success_rate == 1.0, "anti-tamper rate below 1 at 1 MHz");
        prev = at.success_rate;
    }
    if (v.pass)
        v.detail = "anti-tamper " + rates.str() + "; ADC 1.0 at every f";
    return v;
}

Verdict countermeasure_matrix() {
    Verdict v;
    int cells = 0;
    for (const auto &p : {profiles::artix7(), profiles::kintex7(), profiles::polarfire()}) {
        for (const auto &sc : scenarios::all(p)) {
            for (auto kind : {CountermeasureKind::BtPll, CountermeasureKind::BtAsync,
                              CountermeasureKind::CompReg}) {
                ++cells;
                const auto r = evaluate_countermeasure(kind, p, sc, 11);
                const std::string at = p.name + "/" + sc.name + "/" + to_string(kind) + ": ";
                const bool bt = kind != CountermeasureKind::CompReg;
                const bool drop = sc.name == "hibernation_drop" || sc.name == "slow_hibernation_drop";
                if (bt && drop)
                    v.require(r.detected && !r.cleared && r.secret_recoverable,
                              at + "expected detected, not cleared, recoverable");
                if (bt && sc.name == "nominal_clock_stop")
                    v.require(r.cleared, at + "expected cleared");
                if (!bt && !r.crashed)
                    v.require(!r.secret_recoverable, at + "secret recoverable");
            }
        }
    }
    if (v.pass)
        v.detail = std::to_string(cells) + " profile x scenario x countermeasure cells";
    return v;
}

Verdict transition_balance() {
    Verdict v;
    for (bool d : {false, true})
        for (bool r : {false, true})
            for (auto s : {DeviceState::Run, DeviceState::Hibernate}) {
                const auto w = comp_reg_write({}, d, r, DeviceState::Run);
                const auto c = comp_reg_clear(w.reg, s);
                v.require(w.success && c.success, "write or clear did not land");
                v.require(c.rising == c.falling, "rising != falling on a clear");
                v.require(c.reg.read() == r, "post-clear read differs from the selector");
            }

    std::mt19937_64 gen(2024);
    std::bernoulli_distribution coin(0.5);
    double table[2][2] = {{0, 0}, {0, 0}};
    const int n = 100000;
    for (int d = 0; d < 2; ++d)
        for (int i = 0; i < n; ++i) {
            const bool r = coin(gen);
            const auto c = comp_reg_clear(comp_reg_write({}, d, r, DeviceState::Run).reg,
                                          DeviceState::Hibernate);
            v.require(c.reg.read() == r, "post-clear read differs from the selector");
            table[d][(c.rising + c.falling) != 0] += 1;
        }
    const double total = 2.0 * n;
    double chi2 = 0;
    for (int d = 0; d < 2; ++d)
        for (int k = 0; k < 2; ++k) {
            const double e = (table[d][0] + table[d][1]) * (table[0][k] + table[1][k]) / total;
            chi2 += (table[d][k] - e) * (table[d][k] - e) / e;
        }
    const double p = std::erfc(std::sqrt(chi2 / 2.0));
    v.require(p > 0.01, fmt("flip count depends on the stored bit (p = %.3g)", p));
    if (v.pass)
        v.detail = "4 cases balanced; chi2 = " + fmt("%.3f", chi2) + ", p = " + fmt("%.3f", p);
    return v;
}

Verdict hibernation_scan(double elapsed_limit) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    const auto a = profiles::artix7();
    ScanConfig c;
    c.v_low = 0.505; // 1.000 down to 0.505: 100 voltages
    const auto nf = c.frequencies().size();
    const auto nv = c.voltages().size();
    v.require(nf == 25 && nv == 100, "grid is not 25 x 100");
    const auto recs = run_scan(a, c);
    const auto [clock, assign] = emit_heatmaps(recs);
    const auto lines = [](const std::string &s) {
        return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
    };
    v.require(lines(clock) == 1 + nf * nv && lines(assign) == 1 + nf * nv,
              "CSV row count differs from the grid size");

    double prev_boundary = -1.0;
    for (std::size_t col = 0; col < nf; ++col) {
        int region = 0; // run, hibernate, crash in falling-voltage order
        std::set<int> seen;
        double boundary = 0.0;
        for (std::size_t i = 0; i < nv; ++i) {
            const auto &r = recs[col * nv + i];
            int here = r.crash ? 2 : (r.clock_count < kCountNearZero ? 1 : 0);
            v.require(here >= region, fmt("regions interleave at f = %.4g", r.f));
            region = here;
            seen.insert(here);
            if (here == 0)
                v.require(r.reg_assign == c.expected_assign, "running cell missed the write");
            if (here == 1) {
                v.require(r.reg_assign == c.baseline_assign, "hibernating cell took the write");
                boundary = std::max(boundary, r.v);
            }
            if (here == 2)
                v.require(r.reg_assign == 0xff, "crashed cell did not read 0xff");
            v.require(r.crash == (r.v < a.v_drv), fmt("crash floor off v_drv at f = %.4g", r.f));
        }
        v.require(seen.size() == 3, fmt("column f = %.4g lacks a region", recs[col * nv].f));
        v.require(boundary >= prev_boundary, "hibernation boundary decreases with f");
        prev_boundary = boundary;
    }
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    v.require(dt < elapsed_limit, fmt("runtime %.2f s over budget", dt));
    if (v.pass)
        v.detail = "25x100 grid, 3 ordered regions per column, floor at " +
                   fmt("%.3f V", a.v_drv) + ", " + fmt("%.3f s", dt);
    return v;
}

Verdict oracle_equivalence() {
    Verdict v;
    std::mt19937_64 gen(606);
    std::normal_distribution<double> g(0.0, 1.0);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n = 6 + rep % 20, m = 3 + rep % 7;
        TraceSet ts(m, 1);
        std::vector<std::vector<double>> x;
        std::vector<int> y;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> row(m);
            for (auto &e : row)
                e = g(gen) * (1 + rep);
            const int b = i < 2 ? static_cast<int>(i) : static_cast<int>(gen() & 1u);
            ts.add(row, static_cast<BitMask>(b));
            x.push_back(row);
            y.push_back(b);
        }
        const auto want = oracle::naive_snr(x, y);
        const auto got = compute_snr(ts, 0).values;
        for (std::size_t f = 0; f < m; ++f) {
            const double rel = want[f] == 0.0 ? std::abs(got[f])
                                              : std::abs(got[f] - want[f]) / std::abs(want[f]);
            worst = std::max(worst, rel);
        }
    }
    v.require(worst < 1e-12, fmt("SNR relative error %.3g", worst));

    std::uniform_real_distribution<double> u(0.0, 10.0);
    int mismatches = 0;
    for (int rep = 0; rep < 50; ++rep) {
        SnrCurve s;
        s.values.resize(20);
        for (auto &e : s.values)
            e = u(gen);
        const std::size_t d = 1 + rep % 6, k = 1 + rep % 5;
        mismatches += select_pois(s, 0.3, d, k) != oracle::brute_pois(s.values, 0.3, d, k);
    }
    v.require(mismatches == 0, std::to_string(mismatches) + " POI sets differ from brute force");
    if (v.pass)
        v.detail = "max SNR rel. error " + fmt("%.2g", worst) + "; 50/50 POI sets identical";
    return v;
}

Verdict template_attack(double elapsed_limit) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    const auto model = LeakageModel::make_default(0);
    const std::vector<ClassifierKind> kinds = {ClassifierKind::GaussianLda,
                                               ClassifierKind::StumpEnsemble};
    const int trials = 100, low_trials = 20;
    int bytes[2] = {0, 0}, full[2] = {0, 0};
    long bits_hi = 0, bits_lo = 0, total_hi = 0, total_lo = 0;
    std::mt19937_64 keys(0x62);
    for (int t = 0; t < trials; ++t) {
        std::array<std::uint8_t, 3> shares{};
        for (auto &s : shares)
            s = static_cast<std::uint8_t>(keys());
        const auto reps = run_attack_multi(model, shares, 20000, 400, kinds, 1000 + t);
        for (std::size_t c = 0; c < 2; ++c) {
            bytes[c] += reps[c].correct;
            full[c] += reps[c].all_bits_correct;
        }
        for (const auto &b : reps[0].bits)
            bits_hi += b.prediction == b.truth;
        total_hi += kLeakBits;
        if (t < low_trials) {
            const auto lo = run_attack(model, shares, 20000, 1, ClassifierKind::GaussianLda,
                                       1000 + t);
            for (const auto &b : lo.bits)
                bits_lo += b.prediction == b.truth;
            total_lo += kLeakBits;
        }
    }
    const double acc_hi = double(bits_hi) / total_hi, acc_lo = double(bits_lo) / total_lo;
    for (std::size_t c = 0; c < 2; ++c) {
        const std::string name = to_string(kinds[c]);
        v.require(bytes[c] >= 95, name + ": key byte in " + std::to_string(bytes[c]) + "/100");
        v.require(full[c] >= 90, name + ": all bits in " + std::to_string(full[c]) + "/100");
    }
    v.require(acc_lo < acc_hi, fmt("n_avg = 1 bit accuracy %.3f not below n_avg = 400", acc_lo));
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    v.require(dt < elapsed_limit, fmt("runtime %.0f s over budget", dt));
    std::ostringstream d;
    d << "lda " << bytes[0] << "/" << full[0] << ", stumps " << bytes[1] << "/" << full[1]
      << " (byte/all-bits of 100); bit accuracy n_avg=1 " << fmt("%.3f", acc_lo)
      << " vs n_avg=400 " << fmt("%.3f", acc_hi) << ", " << fmt("%.0f s", dt);
    if (v.pass)
        v.detail = d.str();
    else
        v.detail += " [" + d.str() + "]";
    return v;
}

Verdict alert_threshold() {
    Verdict v;
    const auto k = profiles::kintex7();
    const AlertHandlerConfig c; // hw path, zero sensor latency
    const double f = 10e6, v_from = 1.0, v_to = 0.555;
    const double vh = hibernation_threshold(k, f);
    const double span = (c.v_alarm_low - vh) / (v_from - v_to);
    // Ramp duration that gives a response window of `w` seconds.
    const auto fall_for = [&](double w) { return w / span; };
    const auto bypassed = [&](double w) {
        const auto wave = VoltageWaveform::ramp_and_hold(v_from, v_to, fall_for(w), 1e-3);
        return !run_alert_handler(k, c, wave, f).response_completed;
    };
    const double boundary = 4.0 / 24e6;
    v.require(std::abs(c.path_latency() - boundary) < 1e-15, "path latency is not 4 / 24 MHz");
    v.require(bypassed(160e-9), "160 ns window responded");
    v.require(!bypassed(175e-9), "175 ns window bypassed");
    v.require(bypassed(boundary - 0.01e-9), "flip not at the analytic boundary (below)");
    v.require(!bypassed(boundary + 0.01e-9), "flip not at the analytic boundary (above)");
    double worst = 0.0;
    for (double w : {160e-9, boundary, 175e-9, 1e-6}) {
        const auto wave = VoltageWaveform::ramp_and_hold(v_from, v_to, fall_for(w), 1e-3);
        const auto got = alert_response_window(k, c, wave, f);
        v.require(got.has_value(), "no alert raised");
        if (got)
            worst = std::max(worst, std::abs(*got - w));
    }
    v.require(worst < 0.1e-9, fmt("window off the closed form by %.3g s", worst));
    if (v.pass)
        v.detail = "flip at " + fmt("%.3f ns", boundary * 1e9) + "; window error " +
                   fmt("%.2g s", worst);
    return v;
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path &p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

int invoke(const std::vector<std::string> &args, std::string &out) {
    std::vector<const char *> argv = {"chypnosim"};
    for (const auto &a : args)
        argv.push_back(a.c_str());
    std::ostringstream o, e;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), o, e);
    out = o.str() + e.str();
    return code;
}

Verdict determinism() {
    Verdict v;
    const auto root = fs::temp_directory_path() / "chypnosim_acceptance";
    fs::remove_all(root);
    const std::vector<std::vector<std::string>> runs = {
        {"scan"},
        {"race", "--sensor", "adc"},
        {"race", "--profile", "polarfire", "--fall-time", "430e-9", "--clock", "25e6",
         "--v-to", "0.88", "--trials", "500"},
        {"defend"},
        {"attack", "--classifier", "both", "--snr-csv"},
    };
    int files = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        std::vector<std::string> outputs[2];
        for (int rep = 0; rep < 2; ++rep) {
            const auto dir = root / std::to_string(rep);
            fs::create_directories(dir);
            auto args = runs[i];
            const auto prefix = (dir / ("r" + std::to_string(i))).string();
            args.insert(args.end(), {"--seed", "12345", "--out", prefix});
            std::string msg;
            v.require(invoke(args, msg) == 0, runs[i][0] + " failed: " + msg);
            // stdout mode too
            auto args2 = runs[i];
            args2.insert(args2.end(), {"--seed", "12345"});
            std::string text;
            v.require(invoke(args2, text) == 0, runs[i][0] + " failed on stdout");
            outputs[rep].push_back(text);
            if (runs[i][0] == "defend") {
                std::string sum;
                v.require(invoke({"report", "--in", prefix + "_defend.json", "--out",
                                  (dir / "rep").string()},
                                 sum) == 0,
                          "report failed: " + sum);
            }
        }
        v.require(outputs[0] == outputs[1], runs[i][0] + " stdout differs between runs");
    }
    for (const auto &e : fs::recursive_directory_iterator(root / "0")) {
        if (!e.is_regular_file())
            continue;
        const auto twin = root / "1" / fs::relative(e.path(), root / "0");
        ++files;
        v.require(fs::exists(twin) && slurp(e.path()) == slurp(twin),
                  e.path().filename().string() + " differs between runs");
    }
    fs::remove_all(root);
    if (v.pass)
        v.detail = std::to_string(files) + " output files and " + std::to_string(runs.size()) +
                   " stdout streams byte-identical across runs";
    return v;
}

} // namespace

int main(int argc, char **argv) {
    struct Criterion {
        int id;
        const char *name;
        std::function<Verdict()> run;
    };
    const std::vector<Criterion> all = {
        {1, "sensor race table", [] { return sensor_race_table(1.0); }},
        {2, "frequency dependence", frequency_dependence},
        {3, "countermeasure matrix", countermeasure_matrix},
        {4, "transition balance", transition_balance},
        {5, "hibernation scan", [] { return hibernation_scan(60.0); }},
        {6, "SNR/POI oracle equivalence", oracle_equivalence},
        {7, "template attack", [] { return template_attack(600.0); }},
        {8, "alert-handler threshold", alert_threshold},
        {9, "determinism", determinism},
    };
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i)
        wanted.insert(std::atoi(argv[i]));

    int failed = 0;
    for (const auto &c : all) {
        if (!wanted.empty() && !wanted.count(c.id))
            continue;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception &e) {
            v.pass = false;
            v.detail = std::string("exception: ") + e.what();
        }
        const double dt =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s criterion %d (%s): %s [%.2f s]\n", v.pass ? "PASS" : "FAIL", c.id,
                    c.name, v.detail.c_str(), dt);
        std::fflush(stdout);
        failed += !v.pass;
    }
    return failed == 0 ? 0 : 1;
}
