#include "chypnosim/cli.hpp"
#include "chypnosim/errors.hpp"
#include "chypnosim/io.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace chypnosim;

namespace {

// Results cross the boundary as plain dicts, built from the same JSON the CLI writes.
py::object to_py(const Json &j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

ProfileBundle bundle_for(const std::string &name) { return load_profile(name); }

SensorConfig sensor_for(const ProfileBundle &b, const std::optional<std::string> &kind) {
    const auto key = kind.value_or(b.default_sensor);
    auto it = b.sensors.find(key);
    if (it == b.sensors.end())
        throw ConfigError("sensor", "profile '" + b.profile.name + "' has no sensor '" + key + "'");
    return it->second;
}

} // namespace

PYBIND11_MODULE(_chypnosim, m) {
    m.doc() = "Undervolting attack and countermeasure simulator (native core).";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<RangeError>(m, "RangeError", PyExc_ValueError);
    py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
    py::register_exception<CoverageError>(m, "CoverageError", PyExc_ValueError);
    py::register_exception<InvariantError>(m, "InvariantError", PyExc_RuntimeError);

    py::enum_<DeviceState>(m, "DeviceState")
        .value("CRASH", DeviceState::Crash)
        .value("HIBERNATE", DeviceState::Hibernate)
        .value("RUN", DeviceState::Run);

    py::class_<DeviceProfile>(m, "DeviceProfile")
        .def_readonly("name", &DeviceProfile::name)
        .def_readonly("v_nominal", &DeviceProfile::v_nominal)
        .def_readonly("v_drv", &DeviceProfile::v_drv)
        .def_readonly("f_min", &DeviceProfile::f_min)
        .def_readonly("f_max", &DeviceProfile::f_max)
        .def_readonly("v_attack", &DeviceProfile::v_attack)
        .def("__repr__", [](const DeviceProfile &p) { return "<DeviceProfile " + p.name + ">"; });

    m.def("load_profile", [](const std::string &name) { return bundle_for(name).profile; },
          py::arg("name_or_path"), "Built-in profile name or path to a profile JSON file.");
    m.def("profile_document",
          [](const std::string &name) { return to_py(profile_to_json(bundle_for(name))); },
          py::arg("name_or_path"));
    m.def("hibernation_threshold", &hibernation_threshold, py::arg("profile"), py::arg("f_hz"));
    m.def("classify_state", &classify_state, py::arg("profile"), py::arg("volts"),
          py::arg("f_hz"));
    m.def("modulation_safe", &modulation_safe, py::arg("profile"), py::arg("f_hz"),
          py::arg("dc"), py::arg("amplitude"));

    m.def(
        "race",
        [](const std::string &profile, std::optional<std::string> sensor, double fall_time,
           double f_clk, double v_from, double v_to, std::uint64_t trials, std::uint64_t seed) {
            const auto b = bundle_for(profile);
            RaceParams rp;
            rp.fall_time = fall_time;
            rp.f_clk = f_clk;
            rp.v_from = v_from;
            rp.v_to = v_to;
            rp.trials = trials;
            rp.seed = seed;
            const auto s = sensor_for(b, sensor);
            RaceResult r;
            {
                py::gil_scoped_release nogil;
                r = race(b.profile, s, rp);
            }
            return to_py(to_json(r));
        },
        py::arg("profile") = "kintex7", py::arg("sensor") = py::none(),
        py::arg("fall_time") = 80e-6, py::arg("f_clk") = 10e6, py::arg("v_from") = 1.0,
        py::arg("v_to") = 0.555, py::arg("trials") = 100, py::arg("seed") = 0);

    m.def(
        "defend",
        [](const std::string &profile, const std::string &countermeasure,
           const std::string &scenario, double f_clk, std::uint64_t seed) {
            const auto b = bundle_for(profile);
            const auto kind = parse_countermeasure(countermeasure);
            if (!kind)
                throw ConfigError("countermeasure", "unknown countermeasure '" + countermeasure + "'");
            const auto sc = scenarios::by_name(b.profile, scenario, f_clk);
            if (!sc)
                throw ConfigError("scenario", "unknown scenario '" + scenario + "'");
            return to_py(to_json(evaluate_countermeasure(*kind, b.profile, *sc, seed)));
        },
        py::arg("profile") = "kintex7", py::arg("countermeasure") = "BT_PLL",
        py::arg("scenario") = "hibernation_drop", py::arg("f_clk") = 10e6, py::arg("seed") = 0);

    m.def(
        "scan",
        [](const std::string &profile, std::tuple<double, double, std::size_t> f,
           std::tuple<double, double, double> v, double td, double tt, double t_wait,
           std::uint8_t expected) {
            const auto b = bundle_for(profile);
            ScanConfig c;
            std::tie(c.f_low, c.f_high, c.f_steps) = f;
            std::tie(c.v_high, c.v_low, c.v_step) = v;
            c.t_d = td;
            c.t_t = tt;
            c.t_wait = t_wait;
            c.expected_assign = expected;
            c.validate(b.profile);
            std::vector<ScanRecord> recs;
            {
                py::gil_scoped_release nogil;
                recs = run_scan(b.profile, c);
            }
            const auto n = static_cast<py::ssize_t>(recs.size());
            py::array_t<double> fs(n), vs(n);
            py::array_t<std::uint64_t> counts(n);
            py::array_t<std::uint8_t> regs(n);
            py::array_t<bool> crash(n);
            auto F = fs.mutable_unchecked<1>();
            auto V = vs.mutable_unchecked<1>();
            auto C = counts.mutable_unchecked<1>();
            auto R = regs.mutable_unchecked<1>();
            auto X = crash.mutable_unchecked<1>();
            for (py::ssize_t i = 0; i < n; ++i) {
                const auto &r = recs[static_cast<std::size_t>(i)];
                F(i) = r.f;
                V(i) = r.v;
                C(i) = r.clock_count;
                R(i) = r.reg_assign;
                X(i) = r.crash;
            }
            py::dict out;
            out["f_hz"] = fs;
            out["v_volts"] = vs;
            out["clock_count"] = counts;
            out["reg_assign"] = regs;
            out["crash"] = crash;
            return out;
        },
        py::arg("profile") = "artix7", py::arg("f") = std::make_tuple(1e6, 150e6, std::size_t{25}),
        py::arg("v") = std::make_tuple(1.0, 0.5, 0.005), py::arg("td") = 0.1,
        py::arg("tt") = 0.5, py::arg("t_wait") = 0.8, py::arg("expected") = 0x88);

    m.def(
        "compute_snr",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> traces,
           py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> labels) {
            if (traces.ndim() != 2 || labels.ndim() != 1 || labels.shape(0) != traces.shape(0))
                throw PreconditionError("expected traces[N, M] and labels[N]");
            const auto n = static_cast<std::size_t>(traces.shape(0));
            const auto pts = static_cast<std::size_t>(traces.shape(1));
            TraceSet ts(pts, 1);
            const double *x = traces.data();
            const std::uint8_t *y = labels.data();
            for (std::size_t i = 0; i < n; ++i)
                ts.add({x + i * pts, pts}, y[i] ? 1u : 0u);
            const auto s = compute_snr(ts, 0);
            return py::array_t<double>(static_cast<py::ssize_t>(pts), s.values.data());
        },
        py::arg("traces"), py::arg("labels"), "Two-class SNR per column; labels are 0/1.");

    m.def(
        "select_pois",
        [](std::vector<double> snr, double alpha, std::size_t d_min, std::size_t k) {
            return select_pois(SnrCurve{std::move(snr)}, alpha, d_min, k);
        },
        py::arg("snr"), py::arg("alpha") = 0.3, py::arg("d_min") = 10, py::arg("k") = 5);

    m.def(
        "recover_key_byte",
        [](std::uint8_t a, std::uint8_t b, std::uint8_t c) { return recover_key_byte({a, b, c}); },
        py::arg("a"), py::arg("b"), py::arg("c"));

    m.def(
        "attack",
        [](std::array<std::uint8_t, 3> shares, std::size_t n_p, unsigned n_avg,
           const std::string &classifier, std::uint64_t seed, double noise_sigma,
           std::uint64_t model_seed) {
            std::vector<ClassifierKind> kinds;
            if (classifier == "both")
                kinds = {ClassifierKind::GaussianLda, ClassifierKind::StumpEnsemble};
            else if (auto k = parse_classifier(classifier))
                kinds = {*k};
            else
                throw ConfigError("classifier", "unknown classifier '" + classifier + "'");
            LeakageParams lp;
            lp.noise_sigma = noise_sigma;
            std::vector<AttackReport> reps;
            {
                py::gil_scoped_release nogil;
                const auto model = LeakageModel::make_default(model_seed, lp);
                reps = run_attack_multi(model, shares, n_p, n_avg, kinds, seed);
            }
            py::list out;
            for (const auto &r : reps)
                out.append(to_py(to_json(r)));
            return classifier == "both" ? py::object(out) : out[0];
        },
        py::arg("shares"), py::arg("n_p") = 20000, py::arg("n_avg") = 400,
        py::arg("classifier") = "lda", py::arg("seed") = 0,
        py::arg("noise_sigma") = LeakageParams{}.noise_sigma, py::arg("model_seed") = 0);

    m.def(
        "run_cli",
        [](const std::vector<std::string> &args) {
            std::vector<const char *> argv = {"chypnosim"};
            for (const auto &a : args)
                argv.push_back(a.c_str());
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release nogil;
                code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command-line tool in-process; returns (code, stdout, stderr).");
}
