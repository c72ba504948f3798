#include <doctest.h>

#include "chypnosim/errors.hpp"
#include "chypnosim/hibernation_scan.hpp"

#include <cstdlib>
#include <limits>
#include <sstream>

using namespace chypnosim;

TEST_CASE("debug register reset") {
    const auto a = profiles::artix7();
    SimDevice d(a, 10e6, {0});
    CHECK(debug_reg_reset(d) == 0);
    const auto w = VoltageWaveform::ramp_and_hold(1.0, 0.5, 1e-3, 1e-3);
    d.advance(w, w.t_end());
    CHECK(debug_reg_reset(d) == -1);
    d.reprogram();
    CHECK(debug_reg_reset(d) == 0);
}

TEST_CASE("single cells") {
    const auto a = profiles::artix7();
    const ScanConfig c;
    const auto run = scan_cell(a, c, 10e6, 1.0);
    CHECK(run.reg_assign == 0x88);
    CHECK(run.clock_count == 5000000);
    CHECK_FALSE(run.crash);

    const auto hib = scan_cell(a, c, 150e6, 0.70);
    CHECK(hib.reg_assign == 0x00);
    CHECK(hib.clock_count < kCountNearZero);
    CHECK_FALSE(hib.crash);
    CHECK(categorize(hib, 0x88) == AssignCategory::OldValue);

    for (double f : {1e6, 75e6, 150e6}) {
        const auto dead = scan_cell(a, c, f, 0.50);
        CHECK(dead.crash);
        CHECK(dead.reg_assign == 0xff);
        CHECK(dead.clock_count == std::numeric_limits<std::uint64_t>::max());
        CHECK(categorize(dead, 0x88) == AssignCategory::Crash);
    }
}

TEST_CASE("grids are inclusive") {
    ScanConfig c;
    c.f_low = 1e6;
    c.f_high = 150e6;
    c.f_steps = 25;
    c.v_high = 1.0;
    c.v_low = 0.505;
    c.v_step = 0.005;
    CHECK(c.frequencies().size() == 25);
    CHECK(c.frequencies().back() == 150e6);
    const auto vs = c.voltages();
    CHECK(vs.size() == 100);
    CHECK(vs.front() == 1.0);
    CHECK(vs.back() == doctest::Approx(0.505));
}

TEST_CASE("scan config invariants") {
    const auto a = profiles::artix7();
    ScanConfig c;
    c.t_wait = 0.5;
    CHECK_THROWS_AS(c.validate(a), ConfigError);
    c = ScanConfig{};
    c.t_t = 0.2;
    CHECK_THROWS_AS(c.validate(a), ConfigError);
    c = ScanConfig{};
    c.v_step = 0;
    CHECK_THROWS_AS(c.validate(a), ConfigError);
    c = ScanConfig{};
    c.f_high = 300e6;
    CHECK_THROWS_AS(c.validate(a), ConfigError);
    CHECK_NOTHROW(ScanConfig{}.validate(a));
}

TEST_CASE("region structure per frequency column") {
    const auto a = profiles::artix7();
    ScanConfig c;
    c.f_steps = 7;
    c.v_low = 0.45;
    c.v_step = 0.01;
    const auto recs = run_scan(a, c);
    const auto nv = c.voltages().size();
    REQUIRE(recs.size() == 7 * nv);
    double prev_boundary = 0.0;
    for (std::size_t col = 0; col < 7; ++col) {
        int region = 0; // 0 run, 1 hibernate, 2 crash
        double boundary = 0.0;
        for (std::size_t i = 0; i < nv; ++i) {
            const auto &r = recs[col * nv + i];
            int here;
            if (r.crash)
                here = 2;
            else if (r.clock_count < kCountNearZero)
                here = 1;
            else
                here = 0;
            CHECK(here >= region);
            region = here;
            if (here == 0) {
                CHECK(r.reg_assign == 0x88);
            }
            if (here == 1) {
                CHECK(r.reg_assign == 0x00);
                boundary = std::max(boundary, r.v);
            }
            CHECK(r.crash == (r.v < a.v_drv));
        }
        CHECK(boundary >= prev_boundary);
        prev_boundary = boundary;
    }
}

TEST_CASE("heatmap CSV") {
    const auto [clock, assign] = emit_heatmaps({{10e6, 1.0, 0x88, 5000000, false}});
    CHECK(clock == "f_hz,v_volts,clock_count,reg_assign_hex,crash\n10000000,1,5000000,0x88,0\n");
    CHECK(assign.substr(0, assign.find('\n')) == "f_hz,v_volts,clock_count,reg_assign_hex,crash");
    CHECK_THROWS_AS(emit_heatmaps({}), PreconditionError);

    ScanConfig c;
    c.f_steps = 3;
    c.v_step = 0.05;
    const auto recs = run_scan(profiles::artix7(), c);
    const auto [csv, _] = emit_heatmaps(recs);
    std::istringstream in(csv);
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line))
        ++lines;
    CHECK(lines == recs.size() + 1);
}

TEST_CASE("scan output does not depend on the worker count") {
    ScanConfig c;
    c.f_steps = 5;
    c.v_step = 0.02;
    setenv("CHYPNOSIM_THREADS", "1", 1);
    const auto a = emit_heatmaps(run_scan(profiles::artix7(), c)).first;
    setenv("CHYPNOSIM_THREADS", "3", 1);
    const auto b = emit_heatmaps(run_scan(profiles::artix7(), c)).first;
    unsetenv("CHYPNOSIM_THREADS");
    CHECK(a == b);
}
