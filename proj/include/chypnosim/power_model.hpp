#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace chypnosim {

/// Electrical regime of the device at a (voltage, frequency) point.
/// Ordered by voltage at fixed frequency: CRASH < HIBERNATE < RUN.
enum class DeviceState { Crash = 0, Hibernate = 1, Run = 2 };

const char *to_string(DeviceState s);

struct HibAnchor {
    double freq_hz;
    double volts;
};

/// Per-device thresholds. The hibernation curve gives, per clock frequency,
/// the lowest supply voltage at which synchronous logic still switches.
struct DeviceProfile {
    std::string name;
    double v_nominal = 1.0;
    double v_drv = 0.0;
    std::vector<HibAnchor> hib_curve;
    double f_min = 0.0;
    double f_max = 0.0;
    /// Default hold voltage for attack scenarios; must lie in the hibernation
    /// band at every frequency in range.
    std::optional<double> v_attack;

    /// Throws ConfigError naming the first violated invariant.
    void validate() const;
};

struct Modulation {
    double amplitude = 0.0; // volts, >= 0
    double freq_hz = 0.0;
    double phase_rad = 0.0;
    double t_on = 0.0;
    double t_off = 0.0;
};

struct RampSegment {
    double t_start;
    double v_start;
    double t_end;
    double v_end;
};

/// Piecewise-linear supply trajectory with an optional additive sinusoid.
class VoltageWaveform {
public:
    VoltageWaveform() = default;
    explicit VoltageWaveform(std::vector<RampSegment> segments,
                             std::optional<Modulation> modulation = std::nullopt);

    /// Hold `volts` over [t0, t1].
    static VoltageWaveform constant(double volts, double t0, double t1);
    /// Linear fall from `v_from` to `v_to` over `fall_time` starting at t=0,
    /// then a hold at `v_to` for `hold` seconds.
    static VoltageWaveform ramp_and_hold(double v_from, double v_to, double fall_time,
                                         double hold);

    /// Append a ramp that starts where the waveform currently ends.
    VoltageWaveform &then_ramp(double duration, double v_end);
    VoltageWaveform &then_hold(double duration);

    double t_begin() const;
    double t_end() const;
    bool covers(double t0, double t1) const;

    const std::vector<RampSegment> &segments() const { return segments_; }
    const std::optional<Modulation> &modulation() const { return modulation_; }

    /// Supply voltage at t. Throws RangeError outside the span.
    double at(double t) const;

    /// Sorted times in the open interval (t0, t1) where v(t) crosses any of
    /// `thresholds`, merged with segment joints and modulation window edges.
    /// Between consecutive breakpoints v stays on one side of every threshold.
    std::vector<double> breakpoints(const std::vector<double> &thresholds, double t0,
                                    double t1) const;

    /// Earliest t' in [t0, t1] with v(t') < threshold (infimum for open sets).
    std::optional<double> first_below(double threshold, double t0, double t1) const;
    /// Earliest t' in [t0, t1] with v(t') >= threshold.
    std::optional<double> first_at_or_above(double threshold, double t0, double t1) const;

private:
    void check() const;
    std::vector<RampSegment> segments_;
    std::optional<Modulation> modulation_;
};

double voltage_at(const VoltageWaveform &w, double t);

/// V_HIB(f): piecewise-linear in log-frequency between anchors, clamped
/// outside the anchor span. Throws RangeError for f outside [f_min, f_max].
double hibernation_threshold(const DeviceProfile &p, double f_hz);

DeviceState classify_state(const DeviceProfile &p, double volts, double f_hz);

/// True iff dc +/- amplitude stays inside [v_drv, V_HIB(f)).
/// Throws PreconditionError when dc itself is outside that band.
bool modulation_safe(const DeviceProfile &p, double f_hz, double dc, double amplitude);

namespace profiles {
DeviceProfile artix7();
DeviceProfile kintex7();
DeviceProfile polarfire();
/// Looks up one of the built-in profiles by name; nullopt if unknown.
std::optional<DeviceProfile> builtin(const std::string &name);
} // namespace profiles

} // namespace chypnosim
