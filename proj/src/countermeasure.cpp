#include "chypnosim/countermeasure.hpp"

#include "chypnosim/errors.hpp"
#include "chypnosim/rng.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>

namespace chypnosim {

std::optional<double> detect_clock_stop(ClockStopDetector &det, double clock_stop_time,
                                        const StateTimeline &history) {
    const double t_alarm = clock_stop_time + det.detect_window;
    if (t_alarm < history.t_begin() || t_alarm > history.t_end())
        return std::nullopt;
    if (history.state_at(t_alarm) == DeviceState::Crash)
        return std::nullopt;
    det.alarm_latched = true;
    return t_alarm;
}

MaskedClearUnit MaskedClearUnit::predrawn(std::size_t bytes, std::uint64_t seed) {
    MaskedClearUnit u;
    if (bytes == 0)
        return u;
    auto gen = make_stream(seed, streams::scenario, 1);
    std::uniform_int_distribution<int> byte(0, 255);
    do {
        u.rng_stream.clear();
        for (std::size_t i = 0; i < bytes; ++i)
            u.rng_stream.push_back(static_cast<std::uint8_t>(byte(gen)));
    } while (std::all_of(u.rng_stream.begin(), u.rng_stream.end(),
                         [](std::uint8_t b) { return b == 0; }));
    return u;
}

MaskedClearResult masked_clear(MaskedClearUnit &u, SimDevice &device, const VoltageWaveform &w,
                               double alarm_time) {
    if (u.rng_stream.size() < device.size())
        throw PreconditionError("masked clear needs one random byte per register");
    MaskedClearResult r;
    const auto before = device.read_back();
    const double t_edge = alarm_time + u.edge_delay;
    u.pending = true;
    bool ok = true;
    for (std::size_t a = 0; a < device.size(); ++a)
        ok = device.sync_write(w, {t_edge, a, u.rng_stream[a], WriteKind::Sync}) && ok;
    u.pending = false;
    r.completed = ok;

    const auto after = device.read_back();
    std::uint64_t flipped = 0;
    if (ok)
        for (std::size_t a = 0; a < before.size(); ++a)
            flipped += std::popcount(static_cast<unsigned>(before[a] ^ after[a]));
    const std::uint64_t bits = 8 * before.size();
    if (bits - flipped)
        r.transition_histogram[0] = bits - flipped;
    if (flipped)
        r.transition_histogram[1] = flipped;
    return r;
}

CompRegWrite comp_reg_write(const ComplementaryRegister &reg, bool d, bool r, DeviceState s) {
    if (s != DeviceState::Run)
        return {reg, false};
    ComplementaryRegister out = reg;
    if (!r) {
        out.cell_reset = d;
        out.cell_preset = !d;
    } else {
        out.cell_preset = d;
        out.cell_reset = !d;
    }
    out.selector = r;
    return {out, true};
}

CompRegClear comp_reg_clear(const ComplementaryRegister &reg, DeviceState s) {
    if (s == DeviceState::Crash)
        return {reg, false, 0, 0};
    ComplementaryRegister out = reg;
    out.cell_reset = false;
    out.cell_preset = true;
    unsigned rising = 0, falling = 0;
    if (reg.cell_reset)
        ++falling;
    if (!reg.cell_preset)
        ++rising;
    return {out, true, rising, falling};
}

const char *to_string(CountermeasureKind k) {
    switch (k) {
    case CountermeasureKind::BtPll:
        return "BT_PLL";
    case CountermeasureKind::BtAsync:
        return "BT_ASYNC";
    case CountermeasureKind::CompReg:
        return "COMP_REG";
    }
    return "?";
}

std::optional<CountermeasureKind> parse_countermeasure(const std::string &name) {
    std::string n = name;
    std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::toupper(c); });
    std::replace(n.begin(), n.end(), '-', '_');
    for (auto k : {CountermeasureKind::BtPll, CountermeasureKind::BtAsync,
                   CountermeasureKind::CompReg})
        if (n == to_string(k))
            return k;
    return std::nullopt;
}

namespace scenarios {

static double attack_voltage(const DeviceProfile &p, double f_clk) {
    if (p.v_attack)
        return *p.v_attack;
    return 0.5 * (p.v_drv + hibernation_threshold(p, f_clk));
}

Scenario nominal_clock_stop(const DeviceProfile &p, double f_clk) {
    return {"nominal_clock_stop", VoltageWaveform::constant(p.v_nominal, 0.0, 100e-6), f_clk,
            10e-6};
}

Scenario hibernation_drop(const DeviceProfile &p, double f_clk) {
    return {"hibernation_drop",
            VoltageWaveform::ramp_and_hold(p.v_nominal, attack_voltage(p, f_clk), 80e-6, 1e-3),
            f_clk, std::nullopt};
}

Scenario slow_hibernation_drop(const DeviceProfile &p, double f_clk) {
    return {"slow_hibernation_drop",
            VoltageWaveform::ramp_and_hold(p.v_nominal, attack_voltage(p, f_clk), 0.4, 10e-3),
            f_clk, std::nullopt};
}

Scenario crash_drop(const DeviceProfile &p, double f_clk) {
    const double v_low = std::max(0.0, p.v_drv - 0.05);
    return {"crash_drop", VoltageWaveform::ramp_and_hold(p.v_nominal, v_low, 1e-6, 100e-6),
            f_clk, std::nullopt};
}

std::vector<Scenario> all(const DeviceProfile &p, double f_clk) {
    return {nominal_clock_stop(p, f_clk), hibernation_drop(p, f_clk),
            slow_hibernation_drop(p, f_clk), crash_drop(p, f_clk)};
}

std::optional<Scenario> by_name(const DeviceProfile &p, const std::string &name, double f_clk) {
    for (auto &s : all(p, f_clk))
        if (s.name == name)
            return s;
    return std::nullopt;
}

} // namespace scenarios

CountermeasureReport evaluate_countermeasure(CountermeasureKind kind, const DeviceProfile &p,
                                             const Scenario &sc, std::uint64_t seed,
                                             const CountermeasureOptions &opt) {
    if (opt.secret_bytes == 0)
        throw PreconditionError("secret_bytes must be >= 1");
    const auto &w = sc.waveform;
    const double t0 = w.t_begin();
    const double t1 = w.t_end();
    StateTimeline history(p, sc.f_clk, w, t0, t1);

    CountermeasureReport rep;
    rep.kind = kind;
    rep.scenario = sc.name;
    auto event = [&](double t, const char *sig, const char *val) {
        rep.events.push_back({t, sig, val});
    };

    // Secret, masks and selectors are all drawn up front.
    auto gen = make_stream(seed, streams::scenario, 0);
    std::uniform_int_distribution<int> byte(0, 255);
    std::vector<std::uint8_t> secret(opt.secret_bytes), selectors(opt.secret_bytes);
    for (auto &b : secret)
        b = static_cast<std::uint8_t>(byte(gen));
    for (auto &b : selectors)
        b = static_cast<std::uint8_t>(byte(gen));
    MaskedClearUnit unit = MaskedClearUnit::predrawn(opt.secret_bytes, seed);
    unit.edge_delay = opt.edge_delay;

    SimDevice device(p, sc.f_clk, secret);

    // The clock stops at the source or when the device leaves RUN.
    std::optional<double> stop = sc.external_clock_stop;
    for (const auto &iv : history.intervals())
        if (iv.state != DeviceState::Run) {
            if (!stop || iv.t_start < *stop)
                stop = iv.t_start;
            break;
        }
    rep.clock_stop_time = stop;
    if (stop)
        event(*stop, "clk", "stopped");

    ClockStopDetector det;
    switch (kind) {
    case CountermeasureKind::BtPll:
        det = ClockStopDetector::pll(opt.pll_window);
        break;
    case CountermeasureKind::BtAsync:
        det = ClockStopDetector::delay_chain(opt.delay_chain_window);
        break;
    case CountermeasureKind::CompReg:
        det = opt.comp_reg_detector == DetectorKind::Pll
                  ? ClockStopDetector::pll(opt.pll_window)
                  : ClockStopDetector::delay_chain(opt.delay_chain_window);
        break;
    }
    if (stop)
        rep.alarm_time = detect_clock_stop(det, *stop, history);
    if (rep.alarm_time)
        event(*rep.alarm_time, "stop_detect", "1");

    if (kind == CountermeasureKind::CompReg) {
        std::vector<ComplementaryRegister> cells(8 * opt.secret_bytes);
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const bool d = (secret[i / 8] >> (i % 8)) & 1;
            const bool r = (selectors[i / 8] >> (i % 8)) & 1;
            auto wr = comp_reg_write(cells[i], d, r, history.state_at(t0));
            if (!wr.success)
                throw InvariantError("complementary register load failed at scenario start");
            cells[i] = wr.reg;
        }
        if (rep.alarm_time) {
            const double ta = *rep.alarm_time;
            const auto s = history.state_at(ta);
            bool ok = true;
            for (std::size_t i = 0; i < cells.size(); ++i) {
                auto cl = comp_reg_clear(cells[i], s);
                ok = ok && cl.success;
                if (cl.success) {
                    cells[i] = cl.reg;
                    rep.transition_histogram[cl.rising + cl.falling] += 1;
                }
            }
            if (ok) {
                // Reflect the post-clear contents (the selector bits) in the device.
                for (std::size_t a = 0; a < opt.secret_bytes; ++a) {
                    std::uint8_t v = 0;
                    for (int b = 0; b < 8; ++b)
                        v |= static_cast<std::uint8_t>(cells[8 * a + b].read() << b);
                    if (!device.async_clear(w, {ta, a, v, WriteKind::AsyncClear}))
                        throw InvariantError("async clear disagrees with the state timeline");
                }
            }
            rep.cleared = ok;
            event(ta, "async_clear", ok ? "done" : "failed");
        }
    } else if (rep.alarm_time) {
        auto res = masked_clear(unit, device, w, *rep.alarm_time);
        rep.cleared = res.completed;
        rep.transition_histogram = res.transition_histogram;
        event(*rep.alarm_time + unit.edge_delay, "delayed_edge",
              res.completed ? "latched" : "no_clock");
    }

    device.advance(w, t1);
    rep.crashed = device.crashed();
    if (auto c = history.first_crash())
        event(*c, "supply", "crash");
    // The detection latch is volatile logic; a crash erases it.
    rep.detected = det.alarm_latched && !rep.crashed;
    rep.secret_recoverable = !rep.crashed && !rep.cleared;

    if (rep.secret_recoverable != (device.read_back() == secret))
        throw InvariantError("secret_recoverable disagrees with the register contents");
    std::stable_sort(rep.events.begin(), rep.events.end(),
                     [](const TimingEvent &a, const TimingEvent &b) { return a.t < b.t; });
    return rep;
}

} // namespace chypnosim
