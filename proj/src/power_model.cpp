#include "chypnosim/power_model.hpp"

#include "chypnosim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace chypnosim {

const char *to_string(DeviceState s) {
    switch (s) {
    case DeviceState::Crash:
        return "CRASH";
    case DeviceState::Hibernate:
        return "HIBERNATE";
    case DeviceState::Run:
        return "RUN";
    }
    return "?";
}

void DeviceProfile::validate() const {
    if (name.empty())
        throw ConfigError("name", "must be non-empty");
    if (!(f_min > 0.0) || !(f_max > f_min))
        throw ConfigError("f_min", "need 0 < f_min < f_max");
    if (hib_curve.empty())
        throw ConfigError("hib_curve", "needs at least one anchor");
    if (!(v_drv > 0.0) || !(v_nominal > v_drv))
        throw ConfigError("v_drv", "need 0 < v_drv < v_nominal");
    for (size_t i = 0; i < hib_curve.size(); ++i) {
        const auto &a = hib_curve[i];
        const std::string field = "hib_curve[" + std::to_string(i) + "]";
        if (!(a.volts > v_drv) || !(a.volts < v_nominal))
            throw ConfigError(field, "voltage must lie strictly between v_drv and v_nominal");
        if (a.freq_hz < f_min || a.freq_hz > f_max)
            throw ConfigError(field, "frequency outside [f_min, f_max]");
        if (i > 0) {
            if (!(a.freq_hz > hib_curve[i - 1].freq_hz))
                throw ConfigError(field, "anchor frequencies must be strictly increasing");
            if (a.volts < hib_curve[i - 1].volts)
                throw ConfigError(field, "anchor voltages must be non-decreasing");
        }
    }
    if (v_attack && (*v_attack < v_drv || *v_attack >= hib_curve.front().volts))
        throw ConfigError("v_attack", "must lie in the hibernation band at every frequency");
}

// ---------------------------------------------------------------------------
// VoltageWaveform

VoltageWaveform::VoltageWaveform(std::vector<RampSegment> segments,
                                 std::optional<Modulation> modulation)
    : segments_(std::move(segments)), modulation_(modulation) {
    check();
}

void VoltageWaveform::check() const {
    if (segments_.empty())
        throw PreconditionError("waveform needs at least one segment");
    for (size_t i = 0; i < segments_.size(); ++i) {
        const auto &s = segments_[i];
        if (!(s.t_end > s.t_start))
            throw PreconditionError("segment " + std::to_string(i) + " has non-positive duration");
        if (i > 0) {
            const auto &prev = segments_[i - 1];
            if (prev.t_end != s.t_start)
                throw PreconditionError("segments must be contiguous in time");
            if (prev.v_end != s.v_start)
                throw PreconditionError("segments must be continuous in voltage");
        }
    }
    if (modulation_) {
        const auto &m = *modulation_;
        if (m.amplitude < 0.0)
            throw PreconditionError("modulation amplitude must be >= 0");
        if (m.t_off < m.t_on || m.t_on < t_begin() || m.t_off > t_end())
            throw PreconditionError("modulation window must lie within the segment span");
        if (m.amplitude > 0.0 && !(m.freq_hz > 0.0))
            throw PreconditionError("modulation frequency must be > 0");
    }
}

VoltageWaveform VoltageWaveform::constant(double volts, double t0, double t1) {
    return VoltageWaveform({{t0, volts, t1, volts}});
}

VoltageWaveform VoltageWaveform::ramp_and_hold(double v_from, double v_to, double fall_time,
                                               double hold) {
    VoltageWaveform w({{0.0, v_from, fall_time, v_to}});
    if (hold > 0.0)
        w.then_hold(hold);
    return w;
}

VoltageWaveform &VoltageWaveform::then_ramp(double duration, double v_end) {
    const auto &last = segments_.back();
    segments_.push_back({last.t_end, last.v_end, last.t_end + duration, v_end});
    check();
    return *this;
}

VoltageWaveform &VoltageWaveform::then_hold(double duration) {
    return then_ramp(duration, segments_.back().v_end);
}

double VoltageWaveform::t_begin() const { return segments_.front().t_start; }
double VoltageWaveform::t_end() const { return segments_.back().t_end; }

bool VoltageWaveform::covers(double t0, double t1) const {
    return !segments_.empty() && t0 >= t_begin() && t1 <= t_end();
}

namespace {

double linear(const RampSegment &s, double t) {
    if (t <= s.t_start)
        return s.v_start;
    if (t >= s.t_end)
        return s.v_end;
    const double frac = (t - s.t_start) / (s.t_end - s.t_start);
    return s.v_start + frac * (s.v_end - s.v_start);
}

} // namespace

double VoltageWaveform::at(double t) const {
    if (segments_.empty() || t < t_begin() || t > t_end()) {
        std::ostringstream msg;
        msg << "t=" << t << " outside waveform span";
        throw RangeError(msg.str());
    }
    auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                               [](double x, const RampSegment &s) { return x < s.t_end; });
    if (it == segments_.end())
        --it;
    double v = linear(*it, t);
    if (modulation_ && modulation_->amplitude > 0.0 && t >= modulation_->t_on &&
        t <= modulation_->t_off) {
        const auto &m = *modulation_;
        v += m.amplitude * std::sin(2.0 * std::numbers::pi * m.freq_hz * t + m.phase_rad);
    }
    return v;
}

std::vector<double> VoltageWaveform::breakpoints(const std::vector<double> &thresholds,
                                                 double t0, double t1) const {
    std::vector<double> out;
    if (!(t1 > t0))
        return out;

    // Coarse pieces: segment joints and modulation edges.
    std::vector<double> cuts{t0, t1};
    for (const auto &s : segments_) {
        if (s.t_start > t0 && s.t_start < t1)
            cuts.push_back(s.t_start);
    }
    const bool modulated = modulation_ && modulation_->amplitude > 0.0;
    if (modulated) {
        for (double e : {modulation_->t_on, modulation_->t_off})
            if (e > t0 && e < t1)
                cuts.push_back(e);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i];
        const double b = cuts[i + 1];
        if (i > 0)
            out.push_back(a);
        const double mid = 0.5 * (a + b);
        const bool in_mod =
            modulated && mid >= modulation_->t_on && mid <= modulation_->t_off;
        if (!in_mod) {
            const double va = at(a);
            const double vb = at(b);
            for (double thr : thresholds) {
                if ((va - thr) * (vb - thr) < 0.0) {
                    const double t = a + (thr - va) / (vb - va) * (b - a);
                    if (t > a && t < b)
                        out.push_back(t);
                }
            }
            continue;
        }
        // Modulated piece: bracket sign changes on a grid of 1/64 period, then bisect.
        const double step = 1.0 / (64.0 * modulation_->freq_hz);
        const auto n = static_cast<size_t>(std::ceil((b - a) / step));
        double ta = a;
        double va = at(a);
        for (size_t k = 1; k <= n; ++k) {
            const double tb = (k == n) ? b : a + static_cast<double>(k) * (b - a) / n;
            const double vb = at(tb);
            for (double thr : thresholds) {
                if ((va - thr) * (vb - thr) < 0.0) {
                    double lo = ta, hi = tb;
                    const bool rising = vb > va;
                    for (int it = 0; it < 80 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
                        const double m = 0.5 * (lo + hi);
                        if ((at(m) < thr) == rising)
                            lo = m;
                        else
                            hi = m;
                    }
                    const double t = 0.5 * (lo + hi);
                    if (t > a && t < b)
                        out.push_back(t);
                }
            }
            ta = tb;
            va = vb;
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::optional<double> VoltageWaveform::first_below(double threshold, double t0,
                                                   double t1) const {
    if (!covers(t0, t1))
        throw CoverageError("query interval not covered by waveform");
    auto pts = breakpoints({threshold}, t0, t1);
    pts.insert(pts.begin(), t0);
    pts.push_back(t1);
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
        if (pts[i + 1] <= pts[i])
            continue;
        if (at(0.5 * (pts[i] + pts[i + 1])) < threshold)
            return pts[i];
    }
    if (at(t1) < threshold)
        return t1;
    return std::nullopt;
}

std::optional<double> VoltageWaveform::first_at_or_above(double threshold, double t0,
                                                         double t1) const {
    if (!covers(t0, t1))
        throw CoverageError("query interval not covered by waveform");
    if (at(t0) >= threshold)
        return t0;
    auto pts = breakpoints({threshold}, t0, t1);
    pts.insert(pts.begin(), t0);
    pts.push_back(t1);
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
        if (pts[i + 1] <= pts[i])
            continue;
        if (at(0.5 * (pts[i] + pts[i + 1])) >= threshold)
            return pts[i];
    }
    if (at(t1) >= threshold)
        return t1;
    return std::nullopt;
}

double voltage_at(const VoltageWaveform &w, double t) { return w.at(t); }

// ---------------------------------------------------------------------------
// Thresholds

double hibernation_threshold(const DeviceProfile &p, double f_hz) {
    if (!(f_hz >= p.f_min && f_hz <= p.f_max)) {
        std::ostringstream msg;
        msg << "frequency " << f_hz << " Hz outside [" << p.f_min << ", " << p.f_max
            << "] for profile " << p.name;
        throw RangeError(msg.str());
    }
    const auto &c = p.hib_curve;
    if (f_hz <= c.front().freq_hz)
        return c.front().volts;
    if (f_hz >= c.back().freq_hz)
        return c.back().volts;
    auto hi = std::upper_bound(c.begin(), c.end(), f_hz,
                               [](double f, const HibAnchor &a) { return f < a.freq_hz; });
    auto lo = hi - 1;
    if (lo->freq_hz == f_hz)
        return lo->volts;
    const double x = (std::log(f_hz) - std::log(lo->freq_hz)) /
                     (std::log(hi->freq_hz) - std::log(lo->freq_hz));
    return lo->volts + x * (hi->volts - lo->volts);
}

DeviceState classify_state(const DeviceProfile &p, double volts, double f_hz) {
    const double v_hib = hibernation_threshold(p, f_hz);
    if (volts < p.v_drv)
        return DeviceState::Crash;
    if (volts < v_hib)
        return DeviceState::Hibernate;
    return DeviceState::Run;
}

bool modulation_safe(const DeviceProfile &p, double f_hz, double dc, double amplitude) {
    const double v_hib = hibernation_threshold(p, f_hz);
    if (dc < p.v_drv || dc >= v_hib)
        throw PreconditionError("dc voltage is not in the hibernation band");
    if (amplitude < 0.0)
        throw PreconditionError("amplitude must be >= 0");
    return dc - amplitude >= p.v_drv && dc + amplitude < v_hib;
}

// ---------------------------------------------------------------------------
// Built-in profiles

namespace profiles {

DeviceProfile artix7() {
    DeviceProfile p;
    p.name = "artix7";
    p.v_nominal = 1.0;
    p.v_drv = 0.60;
    p.hib_curve = {{1e6, 0.65}, {150e6, 0.85}};
    p.f_min = 1e6;
    p.f_max = 150e6;
    p.v_attack = 0.64;
    return p;
}

DeviceProfile kintex7() {
    DeviceProfile p;
    p.name = "kintex7";
    p.v_nominal = 1.0;
    p.v_drv = 0.50;
    p.hib_curve = {{1e6, 0.60}, {10e6, 0.70}, {150e6, 0.85}};
    p.f_min = 1e6;
    p.f_max = 150e6;
    p.v_attack = 0.555;
    return p;
}

DeviceProfile polarfire() {
    DeviceProfile p;
    p.name = "polarfire";
    p.v_nominal = 1.0;
    p.v_drv = 0.20;
    p.hib_curve = {{1e6, 0.90}, {150e6, 0.92}};
    p.f_min = 1e6;
    p.f_max = 150e6;
    p.v_attack = 0.88;
    return p;
}

std::optional<DeviceProfile> builtin(const std::string &name) {
    if (name == "artix7")
        return artix7();
    if (name == "kintex7")
        return kintex7();
    if (name == "polarfire")
        return polarfire();
    return std::nullopt;
}

} // namespace profiles

} // namespace chypnosim
