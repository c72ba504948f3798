#include <doctest.h>

#include "chypnosim/countermeasure.hpp"

#include <cmath>
#include <random>

using namespace chypnosim;

TEST_CASE("complementary register: all four (d, r) cases by hand") {
    struct Row {
        bool d, r;
        bool reset_after_write, preset_after_write;
        unsigned rising, falling;
    };
    // cells after write, then flips when forced to (reset=0, preset=1)
    const Row table[] = {
        {false, false, false, true, 0, 0},
        {true, false, true, false, 1, 1},
        {false, true, true, false, 1, 1},
        {true, true, false, true, 0, 0},
    };
    for (const auto &row : table) {
        CAPTURE(row.d);
        CAPTURE(row.r);
        auto w = comp_reg_write(ComplementaryRegister{}, row.d, row.r, DeviceState::Run);
        REQUIRE(w.success);
        CHECK(w.reg.cell_reset == row.reset_after_write);
        CHECK(w.reg.cell_preset == row.preset_after_write);
        CHECK(w.reg.cell_reset != w.reg.cell_preset);
        CHECK(w.reg.read() == row.d);
        for (auto s : {DeviceState::Run, DeviceState::Hibernate}) {
            auto c = comp_reg_clear(w.reg, s);
            REQUIRE(c.success);
            CHECK(c.rising == row.rising);
            CHECK(c.falling == row.falling);
            CHECK(c.rising == c.falling);
            CHECK_FALSE(c.reg.cell_reset);
            CHECK(c.reg.cell_preset);
            CHECK(c.reg.read() == row.r);
        }
    }
}

TEST_CASE("complementary register writes are synchronous, clears are not") {
    ComplementaryRegister reg;
    auto w = comp_reg_write(reg, true, false, DeviceState::Hibernate);
    CHECK_FALSE(w.success);
    CHECK(w.reg.cell_reset == reg.cell_reset);
    CHECK(w.reg.cell_preset == reg.cell_preset);
    CHECK_FALSE(comp_reg_write(reg, true, false, DeviceState::Crash).success);
    auto ok = comp_reg_write(reg, true, false, DeviceState::Run).reg;
    CHECK_FALSE(comp_reg_clear(ok, DeviceState::Crash).success);
    CHECK(comp_reg_clear(ok, DeviceState::Hibernate).success);
}

TEST_CASE("flip count on clear is independent of the stored bit") {
    // 2x2 table: stored bit x {0 flips, 2 flips}; chi-square with one dof.
    std::mt19937_64 gen(2024);
    std::bernoulli_distribution coin(0.5);
    double table[2][2] = {{0, 0}, {0, 0}};
    const int n = 100000;
    for (int d = 0; d < 2; ++d)
        for (int i = 0; i < n; ++i) {
            auto w = comp_reg_write({}, d, coin(gen), DeviceState::Run);
            auto c = comp_reg_clear(w.reg, DeviceState::Hibernate);
            table[d][(c.rising + c.falling) == 2] += 1;
        }
    const double total = 2.0 * n;
    double chi2 = 0;
    for (int d = 0; d < 2; ++d)
        for (int k = 0; k < 2; ++k) {
            const double expected = (table[d][0] + table[d][1]) * (table[0][k] + table[1][k]) / total;
            chi2 += (table[d][k] - expected) * (table[d][k] - expected) / expected;
        }
    const double p = std::erfc(std::sqrt(chi2 / 2.0));
    CHECK(p > 0.01);
}

TEST_CASE("clock-stop detector") {
    const auto k = profiles::kintex7();
    const auto nominal = VoltageWaveform::constant(1.0, 0.0, 100e-6);
    StateTimeline live(k, 10e6, nominal, 0.0, 100e-6);
    auto pll = ClockStopDetector::pll();
    auto t = detect_clock_stop(pll, 10e-6, live);
    REQUIRE(t);
    CHECK(*t == doctest::Approx(11e-6));
    CHECK(pll.alarm_latched);

    const auto drop = VoltageWaveform::ramp_and_hold(1.0, 0.555, 80e-6, 1e-3);
    StateTimeline hib(k, 10e6, drop, 0.0, drop.t_end());
    auto dc = ClockStopDetector::delay_chain();
    CHECK(detect_clock_stop(dc, 60e-6, hib).has_value());

    const auto crash = VoltageWaveform::ramp_and_hold(1.0, 0.45, 1e-6, 100e-6);
    StateTimeline dead(k, 10e6, crash, 0.0, crash.t_end());
    auto late = ClockStopDetector::pll();
    CHECK_FALSE(detect_clock_stop(late, 0.6e-6, dead).has_value());
    CHECK_FALSE(late.alarm_latched);
}

TEST_CASE("masked clear pre-draws a non-zero mask") {
    for (std::uint64_t s = 0; s < 50; ++s) {
        auto u = MaskedClearUnit::predrawn(1, s);
        REQUIRE(u.rng_stream.size() == 1);
        CHECK(u.rng_stream[0] != 0);
    }
}

TEST_CASE("masked clear lands only in RUN") {
    const auto k = profiles::kintex7();
    const auto nominal = VoltageWaveform::constant(1.0, 0.0, 100e-6);
    SimDevice d(k, 10e6, {1, 2, 3, 4});
    auto u = MaskedClearUnit::predrawn(4, 1);
    auto r = masked_clear(u, d, nominal, 11e-6);
    CHECK(r.completed);
    CHECK(d.read_back() == u.rng_stream);

    const auto drop = VoltageWaveform::ramp_and_hold(1.0, 0.555, 80e-6, 1e-3);
    SimDevice h(k, 10e6, {1, 2, 3, 4});
    auto r2 = masked_clear(u, h, drop, 60e-6);
    CHECK_FALSE(r2.completed);
    CHECK(h.read_back() == std::vector<std::uint8_t>{1, 2, 3, 4});
}

TEST_CASE("countermeasure matrix") {
    for (const auto &p : {profiles::kintex7(), profiles::artix7(), profiles::polarfire()}) {
        CAPTURE(p.name);
        for (const auto &sc : scenarios::all(p)) {
            CAPTURE(sc.name);
            for (auto kind : {CountermeasureKind::BtPll, CountermeasureKind::BtAsync,
                              CountermeasureKind::CompReg}) {
                CAPTURE(to_string(kind));
                const auto r = evaluate_countermeasure(kind, p, sc, 5);
                if (kind == CountermeasureKind::CompReg) {
                    CHECK_FALSE(r.secret_recoverable);
                    if (!r.crashed)
                        CHECK(r.cleared);
                }
                if (r.secret_recoverable)
                    CHECK_FALSE(r.crashed);
                if (sc.name == "nominal_clock_stop") {
                    CHECK(r.detected);
                    CHECK(r.cleared);
                    CHECK_FALSE(r.secret_recoverable);
                }
                if (sc.name == "hibernation_drop" || sc.name == "slow_hibernation_drop") {
                    CHECK(r.detected);
                    if (kind != CountermeasureKind::CompReg) {
                        CHECK_FALSE(r.cleared);
                        CHECK(r.secret_recoverable);
                    }
                }
                if (sc.name == "crash_drop") {
                    CHECK(r.crashed);
                    CHECK_FALSE(r.detected);
                    CHECK_FALSE(r.secret_recoverable);
                }
            }
        }
    }
}

TEST_CASE("timing traces for a clock stopped at nominal voltage vs by hibernation") {
    const auto k = profiles::kintex7();
    const auto ncf = evaluate_countermeasure(CountermeasureKind::BtAsync, k,
                                             scenarios::nominal_clock_stop(k), 1);
    const auto hcf = evaluate_countermeasure(CountermeasureKind::BtAsync, k,
                                             scenarios::hibernation_drop(k), 1);
    auto find = [](const CountermeasureReport &r, const std::string &sig) -> const TimingEvent * {
        for (const auto &e : r.events)
            if (e.signal == sig)
                return &e;
        return nullptr;
    };
    for (const auto *r : {&ncf, &hcf}) {
        REQUIRE(find(*r, "clk"));
        REQUIRE(find(*r, "stop_detect"));
        REQUIRE(find(*r, "delayed_edge"));
        CHECK(find(*r, "stop_detect")->t == doctest::Approx(find(*r, "clk")->t + 100e-9));
    }
    CHECK(find(ncf, "delayed_edge")->value == "latched");
    CHECK(find(hcf, "delayed_edge")->value == "no_clock");
}

TEST_CASE("clear histograms") {
    const auto k = profiles::kintex7();
    const auto comp = evaluate_countermeasure(CountermeasureKind::CompReg, k,
                                              scenarios::hibernation_drop(k), 3);
    std::uint64_t bits = 0;
    for (const auto &[flips, n] : comp.transition_histogram) {
        CHECK((flips == 0 || flips == 2));
        bits += n;
    }
    CHECK(bits == 128);
    CHECK(parse_countermeasure("bt-pll") == CountermeasureKind::BtPll);
    CHECK(parse_countermeasure("comp_reg") == CountermeasureKind::CompReg);
    CHECK_FALSE(parse_countermeasure("fuse").has_value());
}
