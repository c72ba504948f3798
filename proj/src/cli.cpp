#include "chypnosim/cli.hpp"

#include "chypnosim/errors.hpp"
#include "chypnosim/parallel.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <variant>

namespace chypnosim::cli {

namespace {

struct OptSpec {
    const char *key;
    const char *flag;
    Json fallback; // null: resolved from the profile
    const char *help;
    bool is_flag = false;
};

const std::vector<std::string> kCommands = {"scan", "race", "defend", "attack", "report"};

const char *describe(const std::string &cmd) {
    if (cmd == "scan")
        return "voltage x frequency hibernation scan; writes clock and assignment heat maps";
    if (cmd == "race")
        return "supply drop vs. on-chip sensor: bypass success rate over random clock phases";
    if (cmd == "defend")
        return "evaluate clock-stop countermeasures against undervolting scenarios";
    if (cmd == "attack")
        return "profile and run the static impedance template attack on masked key shares";
    return "re-render a stored JSON result as a CSV summary";
}

std::vector<OptSpec> specs_for(const std::string &cmd) {
    if (cmd == "scan")
        return {{"f", "--f", "1e6:150e6:25", "frequency grid low:high:steps (inclusive)"},
                {"v", "--v", "1.0:0.5:0.005", "voltage grid high:low:step (inclusive)"},
                {"td", "--td", 0.1, "delay before the test starts [s]"},
                {"tt", "--tt", 0.5, "evaluation duration [s], at least 0.5"},
                {"t_wait", "--t-wait", 0.8, "time held at the test voltage [s]"},
                {"expected", "--expected", "0x88", "byte the test assigns"}};
    if (cmd == "race")
        return {{"sensor", "--sensor", nullptr, "adc | anti_tamper | alert_handler"},
                {"fall_time", "--fall-time", 80e-6, "ramp duration [s]"},
                {"clock", "--clock", 10e6, "device clock [Hz]"},
                {"trials", "--trials", 100, "trial count"},
                {"v_from", "--v-from", nullptr, "start voltage (default: nominal)"},
                {"v_to", "--v-to", nullptr, "hold voltage (default: profile attack voltage)"},
                {"hold", "--hold", 1e-3, "hold after the ramp [s]"}};
    if (cmd == "defend")
        return {{"countermeasure", "--countermeasure", "all",
                 "bt_pll | bt_async | comp_reg | all (comma list allowed)"},
                {"scenario", "--scenario", "all",
                 "nominal_clock_stop | hibernation_drop | slow_hibernation_drop | crash_drop | all"},
                {"clock", "--clock", 10e6, "device clock [Hz]"}};
    if (cmd == "attack")
        return {{"np", "--np", 20000, "profiling traces"},
                {"navg", "--navg", 400, "acquisitions averaged per trace"},
                {"classifier", "--classifier", "lda", "lda | stumps | both"},
                {"key_shares", "--key-shares", "12,34,44", "three hex share bytes"},
                {"noise_sigma", "--noise-sigma", 15e-3, "single-acquisition noise [rad]"},
                {"model_seed", "--model-seed", 0, "seed for the leakage model"},
                {"snr_csv", "--snr-csv", false, "also write per-bit SNR curves", true}};
    if (cmd == "report")
        return {{"in", "--in", "", "stored JSON report to re-render"}};
    return {};
}

const char *default_profile(const std::string &cmd) {
    if (cmd == "scan")
        return "artix7";
    if (cmd == "race")
        return "kintex7";
    if (cmd == "defend")
        return "kintex7";
    return "";
}

bool uses_profile(const std::string &cmd) { return cmd == "scan" || cmd == "race" || cmd == "defend"; }

Json scalar_from_text(const std::string &s) {
    if (s == "true")
        return true;
    if (s == "false")
        return false;
    try {
        std::size_t pos = 0;
        if (s.find_first_of(".eE") == std::string::npos && s.rfind("0x", 0) != 0) {
            const long long v = std::stoll(s, &pos);
            if (pos == s.size())
                return v;
        }
        pos = 0;
        const double d = std::stod(s, &pos);
        if (pos == s.size() && s.rfind("0x", 0) != 0)
            return d;
    } catch (...) {
    }
    return s;
}

std::uint64_t parse_seed(const std::string &s) {
    try {
        std::size_t pos = 0;
        if (!s.empty() && s[0] != '-') {
            const auto v = std::stoull(s, &pos, 0);
            if (pos == s.size())
                return v;
        }
    } catch (...) {
    }
    throw ConfigError("seed", "expected an unsigned 64-bit integer, got '" + s + "'");
}

struct Diags {
    std::vector<Diagnostic> list;
    void add(std::string field, std::string reason) {
        list.push_back({std::move(field), std::move(reason)});
    }
};

double get_num(const Json &p, const char *key, Diags &d) {
    const auto &v = p.at(key);
    if (!v.is_number()) {
        d.add(key, "expected a number");
        return 0.0;
    }
    return v.get<double>();
}

long long get_int(const Json &p, const char *key, Diags &d) {
    const auto &v = p.at(key);
    if (v.is_number_integer())
        return v.get<long long>();
    if (v.is_number_float() && v.get<double>() == std::floor(v.get<double>()) &&
        std::abs(v.get<double>()) < 9e15)
        return static_cast<long long>(v.get<double>());
    d.add(key, "expected an integer");
    return 0;
}

std::string get_str(const Json &p, const char *key, Diags &d) {
    const auto &v = p.at(key);
    if (v.is_string())
        return v.get<std::string>();
    if (v.is_number())
        return v.dump();
    d.add(key, "expected a string");
    return {};
}

bool parse_byte(const Json &v, std::uint8_t &out) {
    try {
        long long x = -1;
        if (v.is_number_integer())
            x = v.get<long long>();
        else if (v.is_string()) {
            std::size_t pos = 0;
            const auto s = v.get<std::string>();
            x = std::stoll(s, &pos, 0);
            if (pos != s.size())
                return false;
        }
        if (x < 0 || x > 255)
            return false;
        out = static_cast<std::uint8_t>(x);
        return true;
    } catch (...) {
        return false;
    }
}

std::vector<std::string> split(const std::string &s, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        parts.push_back(item);
    return parts;
}

struct ScanPlan {
    ProfileBundle bundle;
    ScanConfig cfg;
};
struct RacePlan {
    ProfileBundle bundle;
    std::string sensor_name;
    SensorConfig sensor;
    RaceParams params;
};
struct DefendPlan {
    ProfileBundle bundle;
    std::vector<CountermeasureKind> kinds;
    std::vector<Scenario> scenarios;
};
struct AttackPlan {
    LeakageModel model;
    std::array<std::uint8_t, 3> shares{};
    std::size_t n_p = 0;
    unsigned n_avg = 1;
    std::vector<ClassifierKind> kinds;
    bool snr = false;
};
struct ReportPlan {
    Json doc;
};

using Plan = std::variant<std::monostate, ScanPlan, RacePlan, DefendPlan, AttackPlan, ReportPlan>;

struct Resolved {
    Plan plan;
    Json params; // with defaults filled in
    std::optional<ProfileBundle> bundle;
};

Resolved resolve(const RunConfig &c, Diags &d) {
    Resolved r;
    if (std::find(kCommands.begin(), kCommands.end(), c.command) == kCommands.end()) {
        d.add("command", "unknown command '" + c.command + "'");
        return r;
    }
    const auto specs = specs_for(c.command);
    Json p = Json::object();
    for (const auto &s : specs)
        p[s.key] = s.fallback;
    for (auto it = c.params.begin(); it != c.params.end(); ++it) {
        if (!p.contains(it.key())) {
            d.add(it.key(), "unknown field for '" + c.command + "'");
            continue;
        }
        p[it.key()] = it.value();
    }

    if (!c.output_path.empty()) {
        const auto parent = std::filesystem::path(c.output_path).parent_path();
        if (!parent.empty() && !std::filesystem::is_directory(parent))
            d.add("out", "directory '" + parent.string() + "' does not exist");
    }

    if (uses_profile(c.command)) {
        const std::string name = c.profile_path.empty() ? default_profile(c.command) : c.profile_path;
        try {
            r.bundle = load_profile(name);
        } catch (const ConfigError &e) {
            d.add(e.field() == "profile" ? "profile" : "profile." + e.field(), e.reason());
            r.params = p;
            return r;
        }
    }
    const auto in_range = [&](double f) {
        return f >= r.bundle->profile.f_min && f <= r.bundle->profile.f_max;
    };

    if (c.command == "scan") {
        ScanPlan plan{*r.bundle, {}};
        auto &cfg = plan.cfg;
        try {
            const auto f = parse_range(get_str(p, "f", d), "f");
            if (f[2] < 1 || f[2] != std::floor(f[2]))
                d.add("f", "step count must be a positive integer");
            cfg.f_low = f[0];
            cfg.f_high = f[1];
            cfg.f_steps = static_cast<std::size_t>(std::max(1.0, f[2]));
        } catch (const ConfigError &e) {
            d.add(e.field(), e.reason());
        }
        try {
            const auto v = parse_range(get_str(p, "v", d), "v");
            cfg.v_high = v[0];
            cfg.v_low = v[1];
            cfg.v_step = v[2];
        } catch (const ConfigError &e) {
            d.add(e.field(), e.reason());
        }
        cfg.t_d = get_num(p, "td", d);
        cfg.t_t = get_num(p, "tt", d);
        cfg.t_wait = get_num(p, "t_wait", d);
        if (!parse_byte(p["expected"], cfg.expected_assign))
            d.add("expected", "expected a byte (0..255, hex allowed)");
        if (d.list.empty()) {
            try {
                cfg.validate(plan.bundle.profile);
            } catch (const ConfigError &e) {
                d.add(e.field(), e.reason());
            }
        }
        r.plan = plan;
    } else if (c.command == "race") {
        RacePlan plan{*r.bundle, {}, {}, {}};
        const auto &prof = plan.bundle.profile;
        if (p["sensor"].is_null())
            p["sensor"] = plan.bundle.default_sensor;
        plan.sensor_name = get_str(p, "sensor", d);
        if (auto it = plan.bundle.sensors.find(plan.sensor_name); it != plan.bundle.sensors.end())
            plan.sensor = it->second;
        else
            d.add("sensor", "unknown sensor '" + plan.sensor_name + "'");
        auto &rp = plan.params;
        rp.fall_time = get_num(p, "fall_time", d);
        if (!(rp.fall_time > 0))
            d.add("fall_time", "must be > 0");
        rp.f_clk = get_num(p, "clock", d);
        if (!in_range(rp.f_clk))
            d.add("clock", "outside the profile's frequency range");
        const auto trials = get_int(p, "trials", d);
        if (trials < 1)
            d.add("trials", "must be >= 1");
        rp.trials = static_cast<std::uint64_t>(std::max(1LL, trials));
        if (p["v_from"].is_null())
            p["v_from"] = prof.v_nominal;
        if (p["v_to"].is_null()) {
            if (prof.v_attack)
                p["v_to"] = *prof.v_attack;
            else if (in_range(rp.f_clk))
                p["v_to"] = 0.5 * (prof.v_drv + hibernation_threshold(prof, rp.f_clk));
            else
                p["v_to"] = prof.v_drv;
        }
        rp.v_from = get_num(p, "v_from", d);
        rp.v_to = get_num(p, "v_to", d);
        rp.hold = get_num(p, "hold", d);
        if (!(rp.hold > 0))
            d.add("hold", "must be > 0");
        if (!(rp.v_from > rp.v_to))
            d.add("v_from", "must exceed v_to");
        if (in_range(rp.f_clk) &&
            (rp.v_to < prof.v_drv || rp.v_to >= hibernation_threshold(prof, rp.f_clk)))
            d.add("v_to", "not in the hibernation band at this clock");
        rp.seed = c.seed;
        r.plan = plan;
    } else if (c.command == "defend") {
        DefendPlan plan{*r.bundle, {}, {}};
        const double f = get_num(p, "clock", d);
        if (!in_range(f))
            d.add("clock", "outside the profile's frequency range");
        const auto cm = get_str(p, "countermeasure", d);
        if (cm == "all")
            plan.kinds = {CountermeasureKind::BtPll, CountermeasureKind::BtAsync,
                          CountermeasureKind::CompReg};
        else
            for (const auto &name : split(cm, ',')) {
                if (auto k = parse_countermeasure(name))
                    plan.kinds.push_back(*k);
                else
                    d.add("countermeasure", "unknown countermeasure '" + name + "'");
            }
        const auto sc = get_str(p, "scenario", d);
        if (in_range(f)) {
            if (sc == "all")
                plan.scenarios = scenarios::all(plan.bundle.profile, f);
            else
                for (const auto &name : split(sc, ',')) {
                    if (auto s = scenarios::by_name(plan.bundle.profile, name, f))
                        plan.scenarios.push_back(*s);
                    else
                        d.add("scenario", "unknown scenario '" + name + "'");
                }
        }
        r.plan = plan;
    } else if (c.command == "attack") {
        AttackPlan plan;
        const auto np = get_int(p, "np", d);
        if (np < 100)
            d.add("np", "must be >= 100");
        plan.n_p = static_cast<std::size_t>(std::max(0LL, np));
        const auto navg = get_int(p, "navg", d);
        if (navg < 1 || navg > 1000000000)
            d.add("navg", "must be >= 1");
        plan.n_avg = static_cast<unsigned>(std::clamp(navg, 1LL, 1000000000LL));
        const auto cls = get_str(p, "classifier", d);
        if (cls == "both")
            plan.kinds = {ClassifierKind::GaussianLda, ClassifierKind::StumpEnsemble};
        else if (auto k = parse_classifier(cls))
            plan.kinds = {*k};
        else
            d.add("classifier", "unknown classifier '" + cls + "'");
        const auto shares = split(get_str(p, "key_shares", d), ',');
        bool ok = shares.size() == 3;
        for (std::size_t i = 0; ok && i < 3; ++i)
            ok = parse_byte(Json("0x" + shares[i]), plan.shares[i]);
        if (!ok)
            d.add("key_shares", "expected three comma-separated hex bytes");
        LeakageParams lp;
        lp.noise_sigma = get_num(p, "noise_sigma", d);
        if (!(lp.noise_sigma >= 0))
            d.add("noise_sigma", "must be >= 0");
        const auto ms = get_int(p, "model_seed", d);
        if (ms < 0)
            d.add("model_seed", "must be >= 0");
        if (!p["snr_csv"].is_boolean())
            d.add("snr_csv", "expected true or false");
        else
            plan.snr = p["snr_csv"].get<bool>();
        if (d.list.empty()) {
            try {
                plan.model = LeakageModel::make_default(static_cast<std::uint64_t>(ms), lp);
            } catch (const ConfigError &e) {
                d.add(e.field(), e.reason());
            }
        }
        r.plan = plan;
    } else if (c.command == "report") {
        const auto in = get_str(p, "in", d);
        std::ifstream f(in);
        if (in.empty() || !f) {
            d.add("in", "cannot read '" + in + "'");
        } else {
            try {
                r.plan = ReportPlan{Json::parse(f)};
            } catch (const Json::parse_error &e) {
                d.add("in", std::string("malformed JSON: ") + e.what());
            }
        }
    }
    r.params = p;
    return r;
}

void write_text(const std::string &path, const std::string &text) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw ConfigError("out", "cannot write '" + path + "'");
    f << text;
    if (!f)
        throw ConfigError("out", "write failed for '" + path + "'");
}

void emit(const RunConfig &c, const std::string &suffix, const std::string &text,
          std::ostream &out) {
    if (c.output_path.empty())
        out << text;
    else
        write_text(c.output_path + suffix, text);
}

Json provenance(const RunConfig &c, const Resolved &r) {
    Json j;
    j["command"] = c.command;
    j["seed"] = c.seed;
    j["params"] = r.params;
    if (r.bundle)
        j["profile"] = profile_to_json(*r.bundle);
    return j;
}

std::string csv_cell(const Json &v) {
    if (v.is_string())
        return v.get<std::string>();
    if (v.is_null())
        return "";
    return v.dump();
}

std::string render_summary(const Json &doc) {
    if (!doc.is_object() || !doc.contains("provenance") ||
        !doc["provenance"].contains("command"))
        throw ConfigError("in", "not a report written by this tool (no provenance)");
    const auto cmd = doc["provenance"]["command"].get<std::string>();
    std::ostringstream out;
    auto row = [&](const Json &obj, const std::vector<const char *> &keys) {
        for (std::size_t i = 0; i < keys.size(); ++i)
            out << (i ? "," : "") << csv_cell(obj.contains(keys[i]) ? obj[keys[i]] : Json());
        out << "\n";
    };
    auto header = [&](const std::vector<const char *> &keys) {
        for (std::size_t i = 0; i < keys.size(); ++i)
            out << (i ? "," : "") << keys[i];
        out << "\n";
    };
    if (cmd == "race") {
        const std::vector<const char *> keys = {"sensor", "fall_time_s", "f_clk_hz", "v_from_v",
                                                "v_to_v", "trials", "successes", "success_rate"};
        header(keys);
        row(doc, keys);
    } else if (cmd == "defend") {
        const std::vector<const char *> keys = {"countermeasure", "scenario", "detected",
                                                "cleared", "secret_recoverable", "crashed",
                                                "alarm_time_s"};
        header(keys);
        for (const auto &e : doc.at("results"))
            row(e, keys);
    } else if (cmd == "attack") {
        const std::vector<const char *> keys = {"classifier", "n_p", "n_avg", "recovered_byte",
                                                "true_byte", "correct", "bits_correct"};
        header(keys);
        for (const auto &e : doc.at("results")) {
            Json x = e;
            int ok = 0;
            for (const auto &b : e.at("bits"))
                ok += b.at("prediction") == b.at("truth");
            x["bits_correct"] = ok;
            row(x, keys);
        }
    } else {
        throw ConfigError("in", "no summary format for command '" + cmd + "'");
    }
    return out.str();
}

void execute(const RunConfig &c, Resolved &r, std::ostream &out) {
    if (auto *plan = std::get_if<ScanPlan>(&r.plan)) {
        const auto records = run_scan(plan->bundle.profile, plan->cfg);
        const auto [clock_csv, assign_csv] = emit_heatmaps(records);
        emit(c, "_clock.csv", clock_csv, out);
        emit(c, "_assign.csv", assign_csv, out);
    } else if (auto *plan = std::get_if<RacePlan>(&r.plan)) {
        const auto res = race(plan->bundle.profile, plan->sensor, plan->params);
        Json j = to_json(res);
        j["provenance"] = provenance(c, r);
        emit(c, "_race.json", j.dump(2) + "\n", out);
    } else if (auto *plan = std::get_if<DefendPlan>(&r.plan)) {
        std::vector<std::pair<CountermeasureKind, const Scenario *>> jobs;
        for (auto k : plan->kinds)
            for (const auto &s : plan->scenarios)
                jobs.emplace_back(k, &s);
        std::vector<CountermeasureReport> reps(jobs.size());
        parallel_for(jobs.size(), [&](std::size_t i) {
            reps[i] = evaluate_countermeasure(jobs[i].first, plan->bundle.profile,
                                              *jobs[i].second, c.seed);
        });
        Json j;
        j["results"] = Json::array();
        for (const auto &rep : reps)
            j["results"].push_back(to_json(rep));
        j["provenance"] = provenance(c, r);
        emit(c, "_defend.json", j.dump(2) + "\n", out);
    } else if (auto *plan = std::get_if<AttackPlan>(&r.plan)) {
        AttackOptions opt;
        opt.keep_snr = plan->snr;
        const auto reps = run_attack_multi(plan->model, plan->shares, plan->n_p, plan->n_avg,
                                           plan->kinds, c.seed, opt);
        Json j = to_json(reps.front());
        j["results"] = Json::array();
        for (const auto &rep : reps)
            j["results"].push_back(to_json(rep));
        j["provenance"] = provenance(c, r);
        emit(c, "_attack.json", j.dump(2) + "\n", out);
        if (plan->snr)
            emit(c, "_snr.csv", snr_csv(plan->model, reps.front()), out);
    } else if (auto *plan = std::get_if<ReportPlan>(&r.plan)) {
        emit(c, "_summary.csv", render_summary(plan->doc), out);
    } else {
        throw InvariantError("no plan for command '" + c.command + "'");
    }
}

} // namespace

std::array<double, 3> parse_range(const std::string &text, const std::string &field) {
    const auto parts = split(text, ':');
    if (parts.size() != 3)
        throw ConfigError(field, "expected a:b:n, got '" + text + "'");
    std::array<double, 3> out{};
    for (std::size_t i = 0; i < 3; ++i) {
        try {
            std::size_t pos = 0;
            out[i] = std::stod(parts[i], &pos);
            if (pos != parts[i].size())
                throw std::invalid_argument("trailing text");
        } catch (const std::exception &) {
            throw ConfigError(field, "'" + parts[i] + "' is not a number");
        }
    }
    return out;
}

std::vector<Diagnostic> validate_config(const RunConfig &c) {
    Diags d;
    try {
        resolve(c, d);
    } catch (const ConfigError &e) {
        d.add(e.field(), e.reason());
    } catch (const std::exception &e) {
        d.add("config", e.what());
    }
    return d.list;
}

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Undervolting attack and countermeasure workbench.\n"
                 "Numeric ranges are inclusive: --f low:high:steps, --v high:low:step."};
    app.require_subcommand(1);
    std::string profile, seed_text, out_prefix, config_path;
    std::map<std::string, std::map<std::string, std::string>> values;
    std::map<std::string, std::map<std::string, bool>> flags;
    std::map<std::string, CLI::App *> subs;
    for (const auto &cmd : kCommands) {
        auto *sub = app.add_subcommand(cmd, describe(cmd));
        subs[cmd] = sub;
        if (uses_profile(cmd))
            sub->add_option("--profile", profile, "built-in name or profile JSON file");
        sub->add_option("--seed", seed_text, "64-bit seed (default 0)");
        sub->add_option("--out", out_prefix, "output path prefix (default: stdout)");
        sub->add_option("--config", config_path, "JSON file with defaults for any option");
        for (const auto &s : specs_for(cmd)) {
            std::string help = s.help;
            if (!s.fallback.is_null() && !s.is_flag)
                help += " [" + csv_cell(s.fallback) + "]";
            if (s.is_flag)
                sub->add_flag(s.flag, flags[cmd][s.key], help);
            else
                sub->add_option(s.flag, values[cmd][s.key], help);
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    RunConfig c;
    for (const auto &[cmd, sub] : subs)
        if (sub->parsed())
            c.command = cmd;
    CLI::App *sub = subs.at(c.command);

    try {
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            if (!f)
                throw ConfigError("config", "cannot read '" + config_path + "'");
            Json j;
            try {
                j = Json::parse(f);
            } catch (const Json::parse_error &e) {
                throw ConfigError("config", std::string("malformed JSON: ") + e.what());
            }
            if (!j.is_object())
                throw ConfigError("config", "expected a JSON object");
            for (auto it = j.begin(); it != j.end(); ++it) {
                const auto &k = it.key();
                const auto &v = it.value();
                if (k == "command") {
                    if (v != c.command)
                        throw ConfigError("command", "config file is for '" + csv_cell(v) + "'");
                } else if (k == "profile") {
                    if (!v.is_string())
                        throw ConfigError("profile", "expected a string");
                    c.profile_path = v.get<std::string>();
                } else if (k == "seed") {
                    c.seed = parse_seed(v.is_string() ? v.get<std::string>() : v.dump());
                } else if (k == "out") {
                    if (!v.is_string())
                        throw ConfigError("out", "expected a string");
                    c.output_path = v.get<std::string>();
                } else {
                    c.params[k] = v;
                }
            }
        }
        if (uses_profile(c.command) && sub->count("--profile") > 0)
            c.profile_path = profile;
        if (sub->count("--seed") > 0)
            c.seed = parse_seed(seed_text);
        if (sub->count("--out") > 0)
            c.output_path = out_prefix;
        for (const auto &s : specs_for(c.command)) {
            if (sub->count(s.flag) == 0)
                continue;
            c.params[s.key] = s.is_flag ? Json(flags[c.command][s.key])
                                        : scalar_from_text(values[c.command][s.key]);
        }

        Diags d;
        auto resolved = resolve(c, d);
        if (!d.list.empty()) {
            for (const auto &x : d.list)
                err << "error: " << x.field << ": " << x.reason << "\n";
            return 1;
        }
        execute(c, resolved, out);
        return 0;
    } catch (const ConfigError &e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const InvariantError &e) {
        err << "internal error: " << e.what() << "\n";
        return 2;
    } catch (const PreconditionError &e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const RangeError &e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        err << "internal error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace chypnosim::cli
