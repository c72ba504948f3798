#pragma once

#include "chypnosim/device_sim.hpp"
#include "chypnosim/power_model.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace chypnosim {

/// ADC-style supply monitor (XADC). All conversion and pipeline delay is
/// lumped into `detect_latency`; the analog front end samples instantly.
struct AdcSensorConfig {
    double sample_period = 1e-6;
    double detect_latency = 100e-6; // calibration constant
    double v_alarm_low = 0.90;
    double v_alarm_high = 1.05;
    unsigned response_cycles = 16;

    void validate() const;
};

/// Hard-IP anti-tamper controller (PolarFire). The controller raises flags on
/// its own clock; the fabric registers them through a `sync_cycles`-deep
/// synchronizer on the device clock before they can drive zeroization.
struct AntiTamperConfig {
    double f_ctrl_nominal = 80e6;
    double f_ctrl_brownout = 20e6;
    double v_slow_clock = 0.95;  // calibration constant
    double v_detect_low = 0.93;  // calibration constant
    unsigned detect_cycles = 8;  // calibration constant
    unsigned watchdog_cycles = 1000;
    bool immediate_path = true;
    unsigned sync_cycles = 3;    // calibration constant

    void validate() const;
};

/// Alert handler escalation (OpenTitan) fed by an embedded voltage sensor.
struct AlertHandlerConfig {
    double f_periph = 24e6;
    unsigned hw_path_cycles = 4;
    double sw_path_latency = 300e-6;
    double v_alarm_low = 0.90;
    double sensor_latency = 0.0;
    bool use_hw_path = true;

    double path_latency() const {
        return use_hw_path ? hw_path_cycles / f_periph : sw_path_latency;
    }
    void validate() const;
};

using SensorConfig = std::variant<AdcSensorConfig, AntiTamperConfig, AlertHandlerConfig>;

const char *sensor_kind(const SensorConfig &c);

enum class TamperFlag { SlowClock, VoltDetectLow };
const char *to_string(TamperFlag f);

struct SensorSample {
    double t;
    double v;
    bool reading_valid;
};

struct SensorOutcome {
    std::vector<SensorSample> samples;
    std::optional<double> alarm_time;
    /// Flags visible to the protected design.
    std::set<TamperFlag> flags;
    /// Flags raised inside the anti-tamper controller, visible or not.
    std::set<TamperFlag> raised_flags;
    bool response_completed = false;
    std::optional<double> response_time;
};

SensorOutcome run_adc_sensor(const DeviceProfile &p, const AdcSensorConfig &c,
                             const VoltageWaveform &w, double f_clk, double phase,
                             bool record_samples = true);

/// `ctrl_phase` offsets the controller clock in [0, 1/f_ctrl_nominal);
/// `dev_phase` offsets the device clock in [0, 1/f_clk).
SensorOutcome run_anti_tamper(const DeviceProfile &p, const AntiTamperConfig &c,
                              const VoltageWaveform &w, double f_clk, double ctrl_phase,
                              double dev_phase);

SensorOutcome run_alert_handler(const DeviceProfile &p, const AlertHandlerConfig &c,
                                const VoltageWaveform &w, double f_clk);

/// Time between the alert and the clock stopping: the budget the escalation
/// path has to finish. nullopt when no alarm is raised in RUN.
std::optional<double> alert_response_window(const DeviceProfile &p, const AlertHandlerConfig &c,
                                            const VoltageWaveform &w, double f_clk);

struct RaceParams {
    double fall_time = 80e-6;
    double f_clk = 10e6;
    double v_from = 1.0;
    double v_to = 0.555;
    std::uint64_t trials = 100;
    std::uint64_t seed = 0;
    /// Hold after the ramp. Logic is frozen while hibernated, so the outcome
    /// does not depend on it as long as it is positive.
    double hold = 1e-3;
};

struct RaceResult {
    RaceParams params;
    std::string sensor;
    std::uint64_t successes = 0;
    double success_rate = 0.0;
    /// Visible-flag combination -> trial count ("none" when empty).
    std::map<std::string, std::uint64_t> flags_histogram;
};

/// Ramp v_from -> v_to over fall_time, then hold. Each trial draws the
/// sensor's clock phases uniformly; success means the data is retained and
/// the response never completed. Throws PreconditionError if v_to is not in
/// the hibernation band at f_clk.
RaceResult race(const DeviceProfile &p, const SensorConfig &sensor, const RaceParams &params);

/// The single outcome behind one race trial, with explicit phases.
SensorOutcome race_trial(const DeviceProfile &p, const SensorConfig &sensor,
                         const VoltageWaveform &w, double f_clk, double phase,
                         double dev_phase);

std::string flags_key(const std::set<TamperFlag> &flags);

} // namespace chypnosim
