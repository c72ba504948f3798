#pragma once

#include "chypnosim/power_model.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace chypnosim {

struct StateInterval {
    double t_start;
    double t_end;
    DeviceState state;
};

/// Device regime over a time span, resolved exactly at every threshold
/// crossing. Intervals are half-open [t_start, t_end) except the last. Once a
/// crash interval appears, every later interval is CRASH.
class StateTimeline {
public:
    StateTimeline(const DeviceProfile &p, double f_clk, const VoltageWaveform &w, double t0,
                  double t1, bool crashed_at_start = false);

    const std::vector<StateInterval> &intervals() const { return intervals_; }
    double t_begin() const { return intervals_.front().t_start; }
    double t_end() const { return intervals_.back().t_end; }

    DeviceState state_at(double t) const;
    /// End of the contiguous RUN stretch containing t; nullopt if not in RUN at t.
    std::optional<double> run_end(double t) const;
    /// Earliest time >= t at which the device is in RUN.
    std::optional<double> next_run(double t) const;
    std::optional<double> first_crash() const;
    /// Lebesgue measure of {s in [a, b] : RUN}.
    double run_measure(double a, double b) const;
    /// True iff the device is in RUN over the whole closed interval [a, b].
    bool run_throughout(double a, double b) const;

private:
    size_t index_of(double t) const;
    std::vector<StateInterval> intervals_;
};

enum class WriteKind { Sync, AsyncClear };

struct WriteAttempt {
    double t = 0.0;
    std::size_t address = 0;
    std::uint8_t value = 0;
    WriteKind kind = WriteKind::Sync;
};

/// Target device: byte-addressed registers that retain their contents down to
/// V_DRV, a clock that only ticks in RUN, and a crash latch.
class SimDevice {
public:
    SimDevice(DeviceProfile profile, double f_clk, std::vector<std::uint8_t> defaults);

    const DeviceProfile &profile() const { return profile_; }
    double f_clk() const { return f_clk_; }
    double now() const { return now_; }
    bool crashed() const { return crashed_; }
    std::uint64_t clock_count() const { return clock_count_; }
    std::size_t size() const { return registers_.size(); }
    /// Regime at `now()`; CRASH whenever the latch is set.
    DeviceState state() const { return crashed_ ? DeviceState::Crash : state_; }

    /// Evolve to t_end under `w`. Throws PreconditionError if t_end < now()
    /// and CoverageError if `w` does not span [now(), t_end].
    void advance(const VoltageWaveform &w, double t_end);

    /// Clocked latch: advances to a.t, then succeeds iff the device is in RUN.
    bool sync_write(const VoltageWaveform &w, const WriteAttempt &a);
    /// Reset/preset path: succeeds in RUN or HIBERNATE.
    bool async_clear(const VoltageWaveform &w, const WriteAttempt &a);

    /// Register contents, or all 0xff once crashed.
    std::vector<std::uint8_t> read_back() const;
    /// Clears the crash latch, restores defaults and zeroes the clock counter.
    void reprogram();
    /// Zeroes the clock counter without touching registers.
    void reset_clock_count();

private:
    void check_address(std::size_t address) const;

    DeviceProfile profile_;
    double f_clk_;
    std::vector<std::uint8_t> defaults_;
    std::vector<std::uint8_t> registers_;
    std::uint64_t clock_count_ = 0;
    double cycle_fraction_ = 0.0;
    bool crashed_ = false;
    DeviceState state_ = DeviceState::Run;
    double now_ = 0.0;
};

} // namespace chypnosim
