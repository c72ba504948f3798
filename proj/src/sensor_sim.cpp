#include "chypnosim/sensor_sim.hpp"

#include "chypnosim/errors.hpp"
#include "chypnosim/parallel.hpp"
#include "chypnosim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace chypnosim {

void AdcSensorConfig::validate() const {
    if (!(sample_period > 0.0))
        throw ConfigError("sensors.adc.sample_period", "must be > 0");
    if (!(detect_latency >= 0.0))
        throw ConfigError("sensors.adc.detect_latency", "must be >= 0");
    if (!(v_alarm_low < v_alarm_high))
        throw ConfigError("sensors.adc.v_alarm_low", "must be below v_alarm_high");
}

void AntiTamperConfig::validate() const {
    if (!(f_ctrl_brownout > 0.0) || !(f_ctrl_brownout < f_ctrl_nominal))
        throw ConfigError("sensors.anti_tamper.f_ctrl_brownout",
                          "need 0 < f_ctrl_brownout < f_ctrl_nominal");
    if (watchdog_cycles == 0)
        throw ConfigError("sensors.anti_tamper.watchdog_cycles", "must be > 0");
    if (detect_cycles == 0)
        throw ConfigError("sensors.anti_tamper.detect_cycles", "must be > 0");
    if (sync_cycles == 0)
        throw ConfigError("sensors.anti_tamper.sync_cycles", "must be > 0");
}

void AlertHandlerConfig::validate() const {
    if (!(f_periph > 0.0))
        throw ConfigError("sensors.alert_handler.f_periph", "must be > 0");
    if (hw_path_cycles < 1)
        throw ConfigError("sensors.alert_handler.hw_path_cycles", "must be >= 1");
    if (!(sw_path_latency >= 0.0))
        throw ConfigError("sensors.alert_handler.sw_path_latency", "must be >= 0");
    if (!(sensor_latency >= 0.0))
        throw ConfigError("sensors.alert_handler.sensor_latency", "must be >= 0");
}

const char *sensor_kind(const SensorConfig &c) {
    switch (c.index()) {
    case 0:
        return "adc";
    case 1:
        return "anti_tamper";
    default:
        return "alert_handler";
    }
}

const char *to_string(TamperFlag f) {
    return f == TamperFlag::SlowClock ? "SLOW_CLOCK" : "VOLT_DETECT_LOW";
}

std::string flags_key(const std::set<TamperFlag> &flags) {
    if (flags.empty())
        return "none";
    std::string key;
    for (auto f : flags) {
        if (!key.empty())
            key += "+";
        key += to_string(f);
    }
    return key;
}

// ---------------------------------------------------------------------------
// ADC monitor

SensorOutcome run_adc_sensor(const DeviceProfile &p, const AdcSensorConfig &c,
                             const VoltageWaveform &w, double f_clk, double phase,
                             bool record_samples) {
    c.validate();
    if (phase < 0.0 || phase >= c.sample_period)
        throw PreconditionError("ADC phase must lie in [0, sample_period)");
    const double t0 = w.t_begin();
    const double t1 = w.t_end();
    const StateTimeline tl(p, f_clk, w, t0, t1);
    SensorOutcome out;

    auto sample_time = [&](std::uint64_t n) {
        return t0 + phase + static_cast<double>(n) * c.sample_period;
    };
    auto out_of_band = [&](double v) { return v < c.v_alarm_low || v > c.v_alarm_high; };

    std::uint64_t n = 0;
    while (sample_time(n) <= t1) {
        const double ts = sample_time(n);
        const double v = w.at(ts);
        const double t_ready = ts + c.detect_latency;
        const bool ready_in_span = t_ready <= t1;
        // The conversion result only lands if the digital side is alive.
        const bool valid = ready_in_span && tl.state_at(t_ready) == DeviceState::Run;
        if (record_samples)
            out.samples.push_back({ts, v, valid});

        if (out_of_band(v) && valid) {
            out.alarm_time = t_ready;
            const double t_done = t_ready + c.response_cycles / f_clk;
            if (t_done <= t1 && tl.run_throughout(t_ready, t_done)) {
                out.response_completed = true;
                out.response_time = t_done;
            }
            break;
        }

        std::uint64_t next = n + 1;
        if (!record_samples && !out_of_band(v)) {
            // Jump to the first sample that could be out of band.
            auto lo = w.first_below(c.v_alarm_low, ts, t1);
            auto hi = w.first_at_or_above(std::nextafter(c.v_alarm_high, 2.0 * c.v_alarm_high),
                                          ts, t1);
            std::optional<double> target;
            if (lo)
                target = lo;
            if (hi && (!target || *hi < *target))
                target = hi;
            if (!target)
                break;
            const double k = std::ceil((*target - t0 - phase) / c.sample_period);
            if (k > static_cast<double>(next))
                next = static_cast<std::uint64_t>(k);
        }
        n = next;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Anti-tamper controller

namespace {

/// Time at which `k` consecutive RUN device-clock edges after `t_raise` have
/// occurred; the synchronizer stalls while the clock is stopped.
std::optional<double> synchronize(const StateTimeline &tl, double t_raise, double t0,
                                  double f_clk, double dev_phase, unsigned k) {
    const double period = 1.0 / f_clk;
    const double origin = t0 + dev_phase;
    double n = std::floor((t_raise - origin) / period) + 1.0;
    unsigned count = 0;
    while (true) {
        double e = origin + n * period;
        if (e <= t_raise) {
            n += 1.0;
            continue;
        }
        if (e > tl.t_end())
            return std::nullopt;
        const DeviceState s = tl.state_at(e);
        if (s == DeviceState::Run) {
            if (++count == k)
                return e;
            n += 1.0;
        } else if (s == DeviceState::Crash) {
            return std::nullopt;
        } else {
            auto r = tl.next_run(e);
            if (!r)
                return std::nullopt;
            n = std::max(n + 1.0, std::ceil((*r - origin) / period));
        }
    }
}

} // namespace

SensorOutcome run_anti_tamper(const DeviceProfile &p, const AntiTamperConfig &c,
                              const VoltageWaveform &w, double f_clk, double ctrl_phase,
                              double dev_phase) {
    c.validate();
    const double p_nom = 1.0 / c.f_ctrl_nominal;
    const double p_slow = 1.0 / c.f_ctrl_brownout;
    if (ctrl_phase < 0.0 || ctrl_phase >= p_nom)
        throw PreconditionError("controller phase must lie in [0, 1/f_ctrl_nominal)");
    if (dev_phase < 0.0 || dev_phase >= 1.0 / f_clk)
        throw PreconditionError("device clock phase must lie in [0, 1/f_clk)");

    const double t0 = w.t_begin();
    const double t1 = w.t_end();
    const StateTimeline tl(p, f_clk, w, t0, t1);
    SensorOutcome out;

    std::optional<double> raised_slow;
    std::optional<double> raised_low;
    unsigned low_ticks = 0;
    unsigned watchdog = 0;

    auto on_raise = [&](TamperFlag flag, double t_raise) {
        out.raised_flags.insert(flag);
        auto cap = synchronize(tl, t_raise, t0, f_clk, dev_phase, c.sync_cycles);
        if (!cap)
            return;
        out.flags.insert(flag);
        if (!out.alarm_time || *cap < *out.alarm_time)
            out.alarm_time = cap;
    };

    double tick = t0 + ctrl_phase;
    while (tick < t1) {
        const double v = w.at(tick);
        const bool slowed = v < c.v_slow_clock;
        // Ticks with a fixed period, the supply above the detect level and no
        // watchdog counting change nothing, so jump over them in one step.
        const bool quiet = v >= c.v_detect_low && low_ticks == 0 && (raised_slow || !slowed) &&
                           (!out.alarm_time || out.response_completed);
        if (quiet) {
            const double period = slowed ? p_slow : p_nom;
            double limit = t1;
            if (auto a = slowed ? w.first_at_or_above(c.v_slow_clock, tick, t1)
                                : w.first_below(c.v_slow_clock, tick, t1))
                limit = std::min(limit, *a);
            if (auto a = w.first_below(c.v_detect_low, tick, t1))
                limit = std::min(limit, *a);
            if (auto e = tl.run_end(tick))
                limit = std::min(limit, *e);
            const double skip = std::floor((limit - tick) / period) - 1.0;
            if (skip >= 1.0) {
                tick += skip * period;
                continue;
            }
        }

        const double period = v >= c.v_slow_clock ? p_nom : p_slow;
        const double next = tick + period;
        if (next > t1)
            break;
        if (tl.state_at(next) != DeviceState::Run) {
            // Controller frozen with the core supply; resumes on wake.
            auto r = tl.next_run(next);
            if (!r)
                break;
            tick = *r;
            continue;
        }
        tick = next;

        if (period == p_slow && !raised_slow) {
            raised_slow = tick;
            on_raise(TamperFlag::SlowClock, tick);
        }
        if (w.at(tick) < c.v_detect_low) {
            if (++low_ticks >= c.detect_cycles && !raised_low) {
                raised_low = tick;
                on_raise(TamperFlag::VoltDetectLow, tick);
            }
        } else {
            low_ticks = 0;
        }

        if (out.alarm_time && !out.response_completed) {
            if (c.immediate_path) {
                out.response_completed = true;
                out.response_time = out.alarm_time;
            } else if (tick > *out.alarm_time && ++watchdog >= c.watchdog_cycles) {
                out.response_completed = true;
                out.response_time = tick;
            }
        }

        if (raised_slow && raised_low && (out.response_completed || !out.alarm_time))
            break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Alert handler

SensorOutcome run_alert_handler(const DeviceProfile &p, const AlertHandlerConfig &c,
                                const VoltageWaveform &w, double f_clk) {
    c.validate();
    const double t0 = w.t_begin();
    const double t1 = w.t_end();
    const StateTimeline tl(p, f_clk, w, t0, t1);
    SensorOutcome out;

    auto below = w.first_below(c.v_alarm_low, t0, t1);
    if (!below)
        return out;
    const double t_alarm = *below + c.sensor_latency;
    if (t_alarm > t1 || tl.state_at(t_alarm) != DeviceState::Run)
        return out;
    out.alarm_time = t_alarm;
    const double t_done = t_alarm + c.path_latency();
    if (t_done <= t1 && tl.run_throughout(t_alarm, t_done)) {
        out.response_completed = true;
        out.response_time = t_done;
    }
    return out;
}

std::optional<double> alert_response_window(const DeviceProfile &p, const AlertHandlerConfig &c,
                                            const VoltageWaveform &w, double f_clk) {
    const auto out = run_alert_handler(p, c, w, f_clk);
    if (!out.alarm_time)
        return std::nullopt;
    const StateTimeline tl(p, f_clk, w, w.t_begin(), w.t_end());
    return *tl.run_end(*out.alarm_time) - *out.alarm_time;
}

// ---------------------------------------------------------------------------
// Race

SensorOutcome race_trial(const DeviceProfile &p, const SensorConfig &sensor,
                         const VoltageWaveform &w, double f_clk, double phase,
                         double dev_phase) {
    return std::visit(
        [&](const auto &cfg) -> SensorOutcome {
            using T = std::decay_t<decltype(cfg)>;
            if constexpr (std::is_same_v<T, AdcSensorConfig>)
                return run_adc_sensor(p, cfg, w, f_clk, phase, false);
            else if constexpr (std::is_same_v<T, AntiTamperConfig>)
                return run_anti_tamper(p, cfg, w, f_clk, phase, dev_phase);
            else
                return run_alert_handler(p, cfg, w, f_clk);
        },
        sensor);
}

RaceResult race(const DeviceProfile &p, const SensorConfig &sensor, const RaceParams &params) {
    if (params.trials < 1)
        throw PreconditionError("race needs at least one trial");
    if (!(params.fall_time > 0.0))
        throw PreconditionError("fall_time must be > 0");
    if (params.v_to < p.v_drv)
        throw PreconditionError("v_to below v_drv: that is a crash, not a bypass");
    if (params.v_to >= hibernation_threshold(p, params.f_clk))
        throw PreconditionError("v_to is not in the hibernation band at f_clk");
    if (!(params.v_from > params.v_to))
        throw PreconditionError("v_from must exceed v_to");

    const auto w = VoltageWaveform::ramp_and_hold(params.v_from, params.v_to, params.fall_time,
                                                  params.hold);
    const double phase_span = std::visit(
        [](const auto &cfg) -> double {
            using T = std::decay_t<decltype(cfg)>;
            if constexpr (std::is_same_v<T, AdcSensorConfig>)
                return cfg.sample_period;
            else if constexpr (std::is_same_v<T, AntiTamperConfig>)
                return 1.0 / cfg.f_ctrl_nominal;
            else
                return 0.0;
        },
        sensor);
    const bool retained = !StateTimeline(p, params.f_clk, w, w.t_begin(), w.t_end()).first_crash();

    std::vector<SensorOutcome> outcomes(params.trials);
    parallel_for(params.trials, [&](std::size_t i) {
        auto gen = make_stream(params.seed, streams::race_trial, i);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        // generate_canonical may round up to 1.0; keep phases half-open.
        auto draw = [&] { return std::min(u(gen), std::nextafter(1.0, 0.0)); };
        const double phase = draw() * phase_span;
        const double dev_phase = draw() / params.f_clk;
        outcomes[i] = race_trial(p, sensor, w, params.f_clk, phase, dev_phase);
    });

    RaceResult r;
    r.params = params;
    r.sensor = sensor_kind(sensor);
    for (const auto &o : outcomes) {
        if (retained && !o.response_completed)
            ++r.successes;
        ++r.flags_histogram[flags_key(o.flags)];
    }
    r.success_rate = static_cast<double>(r.successes) / static_cast<double>(params.trials);
    return r;
}

} // namespace chypnosim
