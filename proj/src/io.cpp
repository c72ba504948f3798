#include "chypnosim/io.hpp"

#include "chypnosim/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace chypnosim {

namespace {

double num(const Json &j, const std::string &key, const std::string &path, double fallback) {
    if (!j.contains(key))
        return fallback;
    const auto &v = j.at(key);
    if (!v.is_number())
        throw ConfigError(path + key, "expected a number");
    return v.get<double>();
}

double num_required(const Json &j, const std::string &key, const std::string &path) {
    if (!j.contains(key))
        throw ConfigError(path + key, "missing");
    return num(j, key, path, 0.0);
}

unsigned count(const Json &j, const std::string &key, const std::string &path,
               unsigned fallback) {
    if (!j.contains(key))
        return fallback;
    const auto &v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0 ||
        v.get<long long>() > 0xffffffffLL)
        throw ConfigError(path + key, "expected a non-negative integer");
    return v.get<unsigned>();
}

bool flag(const Json &j, const std::string &key, const std::string &path, bool fallback) {
    if (!j.contains(key))
        return fallback;
    const auto &v = j.at(key);
    if (!v.is_boolean())
        throw ConfigError(path + key, "expected true or false");
    return v.get<bool>();
}

void reject_unknown(const Json &j, std::initializer_list<const char *> keys,
                    const std::string &path) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (auto k : keys)
            known = known || it.key() == k;
        if (!known)
            throw ConfigError(path + it.key(), "unknown field");
    }
}

} // namespace

std::string hex_byte(std::uint8_t b) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "0x%02x", b);
    return buf;
}

SensorConfig sensor_from_json(const std::string &kind, const Json &j) {
    const std::string path = "sensors." + kind + ".";
    if (!j.is_object())
        throw ConfigError("sensors." + kind, "expected an object");
    if (kind == "adc") {
        reject_unknown(j, {"sample_period", "detect_latency", "v_alarm_low", "v_alarm_high",
                           "response_cycles"},
                       path);
        AdcSensorConfig c;
        c.sample_period = num(j, "sample_period", path, c.sample_period);
        c.detect_latency = num(j, "detect_latency", path, c.detect_latency);
        c.v_alarm_low = num(j, "v_alarm_low", path, c.v_alarm_low);
        c.v_alarm_high = num(j, "v_alarm_high", path, c.v_alarm_high);
        c.response_cycles = count(j, "response_cycles", path, c.response_cycles);
        c.validate();
        return c;
    }
    if (kind == "anti_tamper") {
        reject_unknown(j, {"f_ctrl_nominal", "f_ctrl_brownout", "v_slow_clock", "v_detect_low",
                           "detect_cycles", "watchdog_cycles", "immediate_path", "sync_cycles"},
                       path);
        AntiTamperConfig c;
        c.f_ctrl_nominal = num(j, "f_ctrl_nominal", path, c.f_ctrl_nominal);
        c.f_ctrl_brownout = num(j, "f_ctrl_brownout", path, c.f_ctrl_brownout);
        c.v_slow_clock = num(j, "v_slow_clock", path, c.v_slow_clock);
        c.v_detect_low = num(j, "v_detect_low", path, c.v_detect_low);
        c.detect_cycles = count(j, "detect_cycles", path, c.detect_cycles);
        c.watchdog_cycles = count(j, "watchdog_cycles", path, c.watchdog_cycles);
        c.immediate_path = flag(j, "immediate_path", path, c.immediate_path);
        c.sync_cycles = count(j, "sync_cycles", path, c.sync_cycles);
        c.validate();
        return c;
    }
    if (kind == "alert_handler") {
        reject_unknown(j, {"f_periph", "hw_path_cycles", "sw_path_latency", "v_alarm_low",
                           "sensor_latency", "use_hw_path"},
                       path);
        AlertHandlerConfig c;
        c.f_periph = num(j, "f_periph", path, c.f_periph);
        c.hw_path_cycles = count(j, "hw_path_cycles", path, c.hw_path_cycles);
        c.sw_path_latency = num(j, "sw_path_latency", path, c.sw_path_latency);
        c.v_alarm_low = num(j, "v_alarm_low", path, c.v_alarm_low);
        c.sensor_latency = num(j, "sensor_latency", path, c.sensor_latency);
        c.use_hw_path = flag(j, "use_hw_path", path, c.use_hw_path);
        c.validate();
        return c;
    }
    throw ConfigError("sensors." + kind, "unknown sensor kind");
}

Json sensor_to_json(const SensorConfig &c) {
    return std::visit(
        [](const auto &s) -> Json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, AdcSensorConfig>)
                return {{"sample_period", s.sample_period},
                        {"detect_latency", s.detect_latency},
                        {"v_alarm_low", s.v_alarm_low},
                        {"v_alarm_high", s.v_alarm_high},
                        {"response_cycles", s.response_cycles}};
            else if constexpr (std::is_same_v<T, AntiTamperConfig>)
                return {{"f_ctrl_nominal", s.f_ctrl_nominal},
                        {"f_ctrl_brownout", s.f_ctrl_brownout},
                        {"v_slow_clock", s.v_slow_clock},
                        {"v_detect_low", s.v_detect_low},
                        {"detect_cycles", s.detect_cycles},
                        {"watchdog_cycles", s.watchdog_cycles},
                        {"immediate_path", s.immediate_path},
                        {"sync_cycles", s.sync_cycles}};
            else
                return {{"f_periph", s.f_periph},
                        {"hw_path_cycles", s.hw_path_cycles},
                        {"sw_path_latency", s.sw_path_latency},
                        {"v_alarm_low", s.v_alarm_low},
                        {"sensor_latency", s.sensor_latency},
                        {"use_hw_path", s.use_hw_path}};
        },
        c);
}

ProfileBundle builtin_bundle(const DeviceProfile &p) {
    ProfileBundle b;
    b.profile = p;
    b.sensors["adc"] = AdcSensorConfig{};
    b.sensors["anti_tamper"] = AntiTamperConfig{};
    b.sensors["alert_handler"] = AlertHandlerConfig{};
    b.default_sensor = p.name == "polarfire" ? "anti_tamper" : "adc";
    return b;
}

ProfileBundle profile_from_json(const Json &j) {
    if (!j.is_object())
        throw ConfigError("profile", "expected a JSON object");
    reject_unknown(j, {"name", "v_nominal", "v_drv", "f_min", "f_max", "hib_curve", "v_attack",
                       "sensors", "default_sensor"},
                   "");
    ProfileBundle b;
    auto &p = b.profile;
    if (!j.contains("name") || !j.at("name").is_string())
        throw ConfigError("name", "missing or not a string");
    p.name = j.at("name").get<std::string>();
    p.v_nominal = num(j, "v_nominal", "", 1.0);
    p.v_drv = num_required(j, "v_drv", "");
    p.f_min = num_required(j, "f_min", "");
    p.f_max = num_required(j, "f_max", "");
    if (!j.contains("hib_curve") || !j.at("hib_curve").is_array())
        throw ConfigError("hib_curve", "missing or not an array");
    const auto &curve = j.at("hib_curve");
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const std::string at = "hib_curve[" + std::to_string(i) + "]";
        const auto &e = curve[i];
        if (e.is_array()) {
            // [freq_hz, volts]
            if (e.size() != 2 || !e[0].is_number() || !e[1].is_number())
                throw ConfigError(at, "expected [freq_hz, volts]");
            p.hib_curve.push_back({e[0].get<double>(), e[1].get<double>()});
        } else if (e.is_object()) {
            p.hib_curve.push_back(
                {num_required(e, "freq_hz", at + "."), num_required(e, "volts", at + ".")});
        } else {
            throw ConfigError(at, "expected [freq_hz, volts]");
        }
    }
    if (j.contains("v_attack"))
        p.v_attack = num(j, "v_attack", "", 0.0);
    p.validate();

    const auto defaults = builtin_bundle(p);
    b.sensors = defaults.sensors;
    b.default_sensor = defaults.default_sensor;
    if (j.contains("sensors")) {
        const auto &s = j.at("sensors");
        if (!s.is_object())
            throw ConfigError("sensors", "expected an object");
        for (auto it = s.begin(); it != s.end(); ++it)
            b.sensors[it.key()] = sensor_from_json(it.key(), it.value());
    }
    if (j.contains("default_sensor")) {
        if (!j.at("default_sensor").is_string() ||
            !b.sensors.count(j.at("default_sensor").get<std::string>()))
            throw ConfigError("default_sensor", "must name a configured sensor");
        b.default_sensor = j.at("default_sensor").get<std::string>();
    }
    return b;
}

Json profile_to_json(const ProfileBundle &b) {
    const auto &p = b.profile;
    Json j;
    j["name"] = p.name;
    j["v_nominal"] = p.v_nominal;
    j["v_drv"] = p.v_drv;
    j["f_min"] = p.f_min;
    j["f_max"] = p.f_max;
    j["hib_curve"] = Json::array();
    for (const auto &a : p.hib_curve)
        j["hib_curve"].push_back(Json::array({a.freq_hz, a.volts}));
    if (p.v_attack)
        j["v_attack"] = *p.v_attack;
    j["sensors"] = Json::object();
    for (const auto &[k, s] : b.sensors)
        j["sensors"][k] = sensor_to_json(s);
    j["default_sensor"] = b.default_sensor;
    return j;
}

ProfileBundle load_profile(const std::string &name_or_path) {
    if (auto p = profiles::builtin(name_or_path))
        return builtin_bundle(*p);
    std::ifstream in(name_or_path);
    if (!in)
        throw ConfigError("profile", "no built-in profile or readable file named '" +
                                         name_or_path + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error &e) {
        throw ConfigError("profile", std::string("malformed JSON: ") + e.what());
    }
    return profile_from_json(j);
}

static Json opt_num(const std::optional<double> &v) { return v ? Json(*v) : Json(nullptr); }

Json to_json(const RaceResult &r) {
    Json flags = Json::object();
    for (const auto &[k, n] : r.flags_histogram)
        flags[k] = n;
    return {{"sensor", r.sensor},
            {"fall_time_s", r.params.fall_time},
            {"f_clk_hz", r.params.f_clk},
            {"v_from_v", r.params.v_from},
            {"v_to_v", r.params.v_to},
            {"trials", r.params.trials},
            {"successes", r.successes},
            {"success_rate", r.success_rate},
            {"flags_histogram", flags}};
}

Json to_json(const CountermeasureReport &r) {
    Json hist = Json::object();
    for (const auto &[k, n] : r.transition_histogram)
        hist[std::to_string(k)] = n;
    Json events = Json::array();
    for (const auto &e : r.events)
        events.push_back({{"t", e.t}, {"signal", e.signal}, {"value", e.value}});
    return {{"countermeasure", to_string(r.kind)},
            {"scenario", r.scenario},
            {"detected", r.detected},
            {"cleared", r.cleared},
            {"secret_recoverable", r.secret_recoverable},
            {"transition_histogram", hist},
            {"crashed", r.crashed},
            {"clock_stop_time_s", opt_num(r.clock_stop_time)},
            {"alarm_time_s", opt_num(r.alarm_time)},
            {"events", events}};
}

Json to_json(const AttackReport &r) {
    Json bits = Json::array();
    for (const auto &b : r.bits)
        bits.push_back({{"index", b.index},
                        {"prediction", int(b.prediction)},
                        {"truth", int(b.truth)},
                        {"score", b.score}});
    return {{"n_p", r.n_p},
            {"n_avg", r.n_avg},
            {"classifier", to_string(r.classifier)},
            {"bits", bits},
            {"recovered_byte", hex_byte(r.recovered_byte)},
            {"true_byte", hex_byte(r.true_byte)},
            {"correct", r.correct}};
}

std::string snr_csv(const LeakageModel &m, const AttackReport &r) {
    std::ostringstream out;
    out << "f_hz,bit,snr\n";
    char line[96];
    for (std::size_t j = 0; j < r.snr.size(); ++j)
        for (std::size_t f = 0; f < r.snr[j].size(); ++f) {
            std::snprintf(line, sizeof line, "%.9g,%zu,%.9g\n", m.freq_grid[f], j, r.snr[j][f]);
            out << line;
        }
    return out.str();
}

} // namespace chypnosim
