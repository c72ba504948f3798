#include "chypnosim/hibernation_scan.hpp"

#include "chypnosim/errors.hpp"
#include "chypnosim/parallel.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace chypnosim {

namespace {
double round_nano(double x) { return std::round(x * 1e9) / 1e9; }
} // namespace

void ScanConfig::validate(const DeviceProfile &p) const {
    auto fail = [](const char *field, const std::string &why) { throw ConfigError(field, why); };
    if (f_steps < 1)
        fail("f", "f_steps must be >= 1");
    if (!(f_low > 0) || !(f_high >= f_low))
        fail("f", "need 0 < f_low <= f_high");
    if (f_low < p.f_min || f_high > p.f_max)
        fail("f", "frequency grid outside the profile range");
    if (!(v_step > 0))
        fail("v", "v_step must be > 0");
    if (!(v_high >= v_low))
        fail("v", "v range inverted (need high >= low)");
    if (!(v_low >= 0))
        fail("v", "v_low must be >= 0");
    if (!(ramp_time > 0))
        fail("ramp_time", "must be > 0");
    if (!(t_d >= ramp_time))
        fail("td", "init delay must cover the supply ramp");
    if (!(t_t >= 0.5))
        fail("tt", "evaluation time must be at least 0.5 s");
    if (!(t_wait > t_d + t_t))
        fail("t_wait", "must exceed td + tt");
}

std::vector<double> ScanConfig::frequencies() const {
    std::vector<double> out;
    if (f_steps == 1)
        return {f_low};
    for (std::size_t i = 0; i < f_steps; ++i)
        out.push_back(f_low + (f_high - f_low) * static_cast<double>(i) /
                                  static_cast<double>(f_steps - 1));
    out.back() = f_high;
    return out;
}

std::vector<double> ScanConfig::voltages() const {
    std::vector<double> out;
    const auto n = static_cast<std::size_t>(std::floor((v_high - v_low) / v_step + 1e-9)) + 1;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(round_nano(v_high - static_cast<double>(i) * v_step));
    return out;
}

int debug_reg_reset(SimDevice &device) {
    if (device.crashed())
        return -1;
    device.reprogram();
    return 0;
}

ScanRecord scan_cell(const DeviceProfile &p, const ScanConfig &c, double f, double v) {
    SimDevice dev(p, f, {c.baseline_assign});
    if (debug_reg_reset(dev) != 0)
        throw InvariantError("fresh device failed its baseline reset");

    VoltageWaveform w({{0.0, c.v_high, c.ramp_time, v}});
    w.then_hold(c.t_wait - c.ramp_time).then_ramp(c.ramp_time, c.v_high).then_hold(10e-3);

    dev.sync_write(w, {c.t_d, 0, c.expected_assign, WriteKind::Sync});
    const std::uint64_t c0 = dev.clock_count();
    dev.advance(w, c.t_d + c.t_t);
    const std::uint64_t c1 = dev.clock_count();
    dev.advance(w, w.t_end());

    ScanRecord r{f, v, dev.read_back()[0], c1 - c0, false};
    if (dev.crashed()) {
        // The counter register reads back as all ones like every other cell.
        r.clock_count = std::numeric_limits<std::uint64_t>::max();
        r.crash = true;
    }
    if (debug_reg_reset(dev) != 0)
        dev.reprogram();
    return r;
}

std::vector<ScanRecord> run_scan(const DeviceProfile &p, const ScanConfig &c) {
    p.validate();
    c.validate(p);
    const auto fs = c.frequencies();
    const auto vs = c.voltages();
    std::vector<ScanRecord> out(fs.size() * vs.size());
    parallel_for(out.size(), [&](std::size_t i) {
        out[i] = scan_cell(p, c, fs[i / vs.size()], vs[i % vs.size()]);
    });
    return out;
}

AssignCategory categorize(const ScanRecord &r, std::uint8_t expected) {
    if (r.crash)
        return AssignCategory::Crash;
    return r.reg_assign == expected ? AssignCategory::NewValue : AssignCategory::OldValue;
}

std::pair<std::string, std::string> emit_heatmaps(const std::vector<ScanRecord> &records) {
    if (records.empty())
        throw PreconditionError("emit_heatmaps needs at least one record");
    std::string csv = "f_hz,v_volts,clock_count,reg_assign_hex,crash\n";
    char line[160];
    for (const auto &r : records) {
        std::snprintf(line, sizeof line, "%.9g,%.9g,%llu,0x%02x,%d\n", r.f, r.v,
                      static_cast<unsigned long long>(r.clock_count), r.reg_assign,
                      r.crash ? 1 : 0);
        csv += line;
    }
    return {csv, csv};
}

} // namespace chypnosim
