#pragma once

#include "chypnosim/countermeasure.hpp"
#include "chypnosim/hibernation_scan.hpp"
#include "chypnosim/power_model.hpp"
#include "chypnosim/sensor_sim.hpp"
#include "chypnosim/sidechannel.hpp"

#include <json.hpp>

#include <map>
#include <string>

namespace chypnosim {

using Json = nlohmann::ordered_json;

/// Profile plus the sensors attached to it.
struct ProfileBundle {
    DeviceProfile profile;
    std::map<std::string, SensorConfig> sensors; // keyed by sensor_kind()
    std::string default_sensor;
};

/// Parses a profile document; field paths in errors follow the JSON keys.
ProfileBundle profile_from_json(const Json &j);
Json profile_to_json(const ProfileBundle &b);

/// Built-in name ("artix7") or path to a JSON file.
ProfileBundle load_profile(const std::string &name_or_path);
/// Built-in profile with default sensors.
ProfileBundle builtin_bundle(const DeviceProfile &p);

SensorConfig sensor_from_json(const std::string &kind, const Json &j);
Json sensor_to_json(const SensorConfig &c);

Json to_json(const RaceResult &r);
Json to_json(const CountermeasureReport &r);
Json to_json(const AttackReport &r);

/// Per-bit SNR curves as CSV (f_hz, bit, snr).
std::string snr_csv(const LeakageModel &m, const AttackReport &r);

std::string hex_byte(std::uint8_t b);

} // namespace chypnosim
