#include "chypnosim/device_sim.hpp"

#include "chypnosim/errors.hpp"

#include <algorithm>
#include <cmath>

namespace chypnosim {

StateTimeline::StateTimeline(const DeviceProfile &p, double f_clk, const VoltageWaveform &w,
                             double t0, double t1, bool crashed_at_start) {
    if (!(t1 >= t0))
        throw PreconditionError("timeline needs t1 >= t0");
    if (!w.covers(t0, t1))
        throw CoverageError("waveform does not cover the requested interval");
    const double v_hib = hibernation_threshold(p, f_clk);

    auto pts = w.breakpoints({p.v_drv, v_hib}, t0, t1);
    pts.insert(pts.begin(), t0);
    pts.push_back(t1);

    bool crashed = crashed_at_start;
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
        const double a = pts[i];
        const double b = pts[i + 1];
        if (!(b > a))
            continue;
        DeviceState s = crashed ? DeviceState::Crash
                                : classify_state(p, w.at(0.5 * (a + b)), f_clk);
        if (s == DeviceState::Crash)
            crashed = true;
        if (!intervals_.empty() && intervals_.back().state == s)
            intervals_.back().t_end = b;
        else
            intervals_.push_back({a, b, s});
    }
    if (intervals_.empty()) {
        // Zero-length span: classify the single instant.
        DeviceState s = crashed ? DeviceState::Crash : classify_state(p, w.at(t0), f_clk);
        intervals_.push_back({t0, t1, s});
    }
}

size_t StateTimeline::index_of(double t) const {
    if (t < t_begin() || t > t_end())
        throw RangeError("time outside timeline");
    auto it = std::upper_bound(intervals_.begin(), intervals_.end(), t,
                               [](double x, const StateInterval &iv) { return x < iv.t_end; });
    if (it == intervals_.end())
        --it;
    return static_cast<size_t>(it - intervals_.begin());
}

DeviceState StateTimeline::state_at(double t) const { return intervals_[index_of(t)].state; }

std::optional<double> StateTimeline::run_end(double t) const {
    const auto &iv = intervals_[index_of(t)];
    if (iv.state != DeviceState::Run)
        return std::nullopt;
    return iv.t_end;
}

std::optional<double> StateTimeline::next_run(double t) const {
    for (size_t i = index_of(t); i < intervals_.size(); ++i) {
        if (intervals_[i].state == DeviceState::Run)
            return std::max(t, intervals_[i].t_start);
    }
    return std::nullopt;
}

std::optional<double> StateTimeline::first_crash() const {
    for (const auto &iv : intervals_)
        if (iv.state == DeviceState::Crash)
            return iv.t_start;
    return std::nullopt;
}

double StateTimeline::run_measure(double a, double b) const {
    double total = 0.0;
    for (const auto &iv : intervals_) {
        if (iv.state != DeviceState::Run)
            continue;
        const double lo = std::max(a, iv.t_start);
        const double hi = std::min(b, iv.t_end);
        if (hi > lo)
            total += hi - lo;
    }
    return total;
}

bool StateTimeline::run_throughout(double a, double b) const {
    if (a < t_begin() || b > t_end())
        return false;
    const auto end = run_end(a);
    if (!end)
        return false;
    // The last interval is closed on the right.
    return b < *end || (b == *end && *end == t_end());
}

// ---------------------------------------------------------------------------

SimDevice::SimDevice(DeviceProfile profile, double f_clk, std::vector<std::uint8_t> defaults)
    : profile_(std::move(profile)), f_clk_(f_clk), defaults_(std::move(defaults)),
      registers_(defaults_) {
    profile_.validate();
    // Range check on the clock.
    (void)hibernation_threshold(profile_, f_clk_);
}

void SimDevice::advance(const VoltageWaveform &w, double t_end) {
    if (t_end < now_)
        throw PreconditionError("advance target lies in the past");
    if (!w.covers(now_, t_end))
        throw CoverageError("waveform does not cover [now, t_end]");
    if (t_end == now_) {
        if (!crashed_)
            state_ = classify_state(profile_, w.at(now_), f_clk_);
        crashed_ = crashed_ || state_ == DeviceState::Crash;
        return;
    }

    StateTimeline tl(profile_, f_clk_, w, now_, t_end, crashed_);
    const double run_time = tl.run_measure(now_, t_end);
    // Integrate edges exactly; carry the fractional period across calls.
    const double cycles = cycle_fraction_ + run_time * f_clk_;
    const double whole = std::floor(cycles);
    clock_count_ += static_cast<std::uint64_t>(whole);
    cycle_fraction_ = cycles - whole;

    if (tl.first_crash())
        crashed_ = true;
    state_ = crashed_ ? DeviceState::Crash : classify_state(profile_, w.at(t_end), f_clk_);
    now_ = t_end;
}

void SimDevice::check_address(std::size_t address) const {
    if (address >= registers_.size())
        throw RangeError("register address " + std::to_string(address) + " out of range");
}

bool SimDevice::sync_write(const VoltageWaveform &w, const WriteAttempt &a) {
    if (a.kind != WriteKind::Sync)
        throw PreconditionError("sync_write needs a SYNC attempt");
    check_address(a.address);
    advance(w, a.t);
    if (state() != DeviceState::Run)
        return false;
    registers_[a.address] = a.value;
    return true;
}

bool SimDevice::async_clear(const VoltageWaveform &w, const WriteAttempt &a) {
    if (a.kind != WriteKind::AsyncClear)
        throw PreconditionError("async_clear needs an ASYNC_CLEAR attempt");
    check_address(a.address);
    advance(w, a.t);
    if (state() == DeviceState::Crash)
        return false;
    registers_[a.address] = a.value;
    return true;
}

std::vector<std::uint8_t> SimDevice::read_back() const {
    if (crashed_)
        return std::vector<std::uint8_t>(registers_.size(), 0xff);
    return registers_;
}

void SimDevice::reprogram() {
    crashed_ = false;
    registers_ = defaults_;
    clock_count_ = 0;
    cycle_fraction_ = 0.0;
    state_ = DeviceState::Run;
}

void SimDevice::reset_clock_count() {
    clock_count_ = 0;
    cycle_fraction_ = 0.0;
}

} // namespace chypnosim
