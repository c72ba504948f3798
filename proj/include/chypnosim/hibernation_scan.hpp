#pragma once

#include "chypnosim/device_sim.hpp"
#include "chypnosim/power_model.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace chypnosim {

struct ScanConfig {
    double f_low = 1e6;
    double f_high = 150e6;
    std::size_t f_steps = 25;
    double v_high = 1.0;
    double v_low = 0.5;
    double v_step = 0.005;
    double t_d = 0.1;
    double t_t = 0.5;
    double t_wait = 0.8;
    std::uint8_t expected_assign = 0x88;
    std::uint8_t baseline_assign = 0x00;
    /// Supply slew for the drop and the restore.
    double ramp_time = 1e-3;

    /// Throws ConfigError; `p` bounds the frequency grid.
    void validate(const DeviceProfile &p) const;
    /// Inclusive grids in sweep order.
    std::vector<double> frequencies() const;
    std::vector<double> voltages() const;
};

struct ScanRecord {
    double f;
    double v;
    std::uint8_t reg_assign;
    std::uint64_t clock_count;
    bool crash;
};

/// Restores the baseline register values on a live device. Returns -1 when the
/// readback disagrees with the baseline (the device has crashed), else 0.
int debug_reg_reset(SimDevice &device);

/// One grid cell against a fresh device.
ScanRecord scan_cell(const DeviceProfile &p, const ScanConfig &c, double f, double v);

/// Full sweep; frequency outer, voltage inner (high to low).
std::vector<ScanRecord> run_scan(const DeviceProfile &p, const ScanConfig &c);

enum class AssignCategory { NewValue, OldValue, Crash };
AssignCategory categorize(const ScanRecord &r, std::uint8_t expected);

/// Counts below this are treated as "clock stopped".
inline constexpr std::uint64_t kCountNearZero = 10;

/// (clock_count CSV, reg_assign CSV). Both share the same columns.
std::pair<std::string, std::string> emit_heatmaps(const std::vector<ScanRecord> &records);

} // namespace chypnosim
