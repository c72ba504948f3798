#pragma once

#include "chypnosim/device_sim.hpp"
#include "chypnosim/power_model.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace chypnosim {

enum class DetectorKind { Pll, DelayChain };

/// Clock-stop sensor with an SR-latched alarm.
struct ClockStopDetector {
    DetectorKind kind = DetectorKind::DelayChain;
    double detect_window = 100e-9;
    bool alarm_latched = false;

    static ClockStopDetector pll(double window = 1e-6) {
        return {DetectorKind::Pll, window, false};
    }
    static ClockStopDetector delay_chain(double window = 100e-9) {
        return {DetectorKind::DelayChain, window, false};
    }
};

/// Alarm time for a clock that stopped at `clock_stop_time`, or nullopt when
/// the device has crashed (no live logic) by then. The detector is
/// asynchronous, so a hibernated device still raises the alarm.
std::optional<double> detect_clock_stop(ClockStopDetector &det, double clock_stop_time,
                                        const StateTimeline &history);

/// Synchronous masked clear: overwrite every register with pre-drawn random
/// bytes on an edge `edge_delay` after the alarm.
struct MaskedClearUnit {
    std::vector<std::uint8_t> rng_stream;
    double edge_delay = 10e-9;
    bool pending = false;

    /// Draws `bytes` random values; never all zero.
    static MaskedClearUnit predrawn(std::size_t bytes, std::uint64_t seed);
};

struct MaskedClearResult {
    bool completed = false;
    /// Bits that flipped in the clear (0 or 1 per bit) -> count.
    std::map<int, std::uint64_t> transition_histogram;
};

MaskedClearResult masked_clear(MaskedClearUnit &u, SimDevice &device, const VoltageWaveform &w,
                               double alarm_time);

/// One sensitive bit stored as a reset-to-0 cell and a preset-to-1 cell that
/// always hold complementary values; `selector` says which cell holds the data.
struct ComplementaryRegister {
    bool cell_reset = false;
    bool cell_preset = true;
    bool selector = false;
    bool preloaded_r_next = false;

    bool read() const { return selector ? cell_preset : cell_reset; }
};

struct CompRegWrite {
    ComplementaryRegister reg;
    bool success;
};

struct CompRegClear {
    ComplementaryRegister reg;
    bool success;
    unsigned rising;
    unsigned falling;
};

/// Synchronous write; only succeeds in RUN.
CompRegWrite comp_reg_write(const ComplementaryRegister &reg, bool d, bool r, DeviceState s);
/// Asynchronous clear to (reset=0, preset=1); succeeds in RUN or HIBERNATE.
CompRegClear comp_reg_clear(const ComplementaryRegister &reg, DeviceState s);

enum class CountermeasureKind { BtPll, BtAsync, CompReg };
const char *to_string(CountermeasureKind k);
std::optional<CountermeasureKind> parse_countermeasure(const std::string &name);

struct Scenario {
    std::string name;
    VoltageWaveform waveform;
    double f_clk = 10e6;
    /// Time the external clock source is stopped, if the attacker controls it.
    std::optional<double> external_clock_stop;
};

namespace scenarios {
/// Clock stopped at the source with the supply at nominal voltage.
Scenario nominal_clock_stop(const DeviceProfile &p, double f_clk = 10e6);
/// 80 us drop to the profile's attack voltage; the clock dies with the supply.
Scenario hibernation_drop(const DeviceProfile &p, double f_clk = 10e6);
/// Same target voltage reached in 400 ms.
Scenario slow_hibernation_drop(const DeviceProfile &p, double f_clk = 10e6);
/// Fast drop below V_DRV.
Scenario crash_drop(const DeviceProfile &p, double f_clk = 10e6);
std::vector<Scenario> all(const DeviceProfile &p, double f_clk = 10e6);
std::optional<Scenario> by_name(const DeviceProfile &p, const std::string &name,
                                double f_clk = 10e6);
} // namespace scenarios

struct TimingEvent {
    double t;
    std::string signal;
    std::string value;
};

struct CountermeasureReport {
    CountermeasureKind kind;
    std::string scenario;
    bool detected = false;
    bool cleared = false;
    bool secret_recoverable = false;
    bool crashed = false;
    std::optional<double> clock_stop_time;
    std::optional<double> alarm_time;
    /// Per-bit transition count during the clear -> number of bits.
    std::map<int, std::uint64_t> transition_histogram;
    std::vector<TimingEvent> events;
};

struct CountermeasureOptions {
    std::size_t secret_bytes = 16;
    double pll_window = 1e-6;
    double delay_chain_window = 100e-9;
    double edge_delay = 10e-9;
    /// Detector driving the complementary-register clear.
    DetectorKind comp_reg_detector = DetectorKind::DelayChain;
};

CountermeasureReport evaluate_countermeasure(CountermeasureKind kind, const DeviceProfile &p,
                                             const Scenario &scenario, std::uint64_t seed,
                                             const CountermeasureOptions &opt = {});

} // namespace chypnosim
