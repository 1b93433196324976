#include "licem/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include <json.hpp>

#include "licem/common.hpp"

namespace licem {

namespace {

std::string iso_utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

void RunManifest::add_input(const std::string& path) {
    input_hashes[path] = to_hex(fnv1a_file(path));
}

void RunManifest::stamp_start() {
    tool_version = kVersion;
    started_at = iso_utc_now();
}

void RunManifest::stamp_finish() {
    finished_at = iso_utc_now();
}

void RunManifest::save(const std::string& path) const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["config"] = config;
    j["inputs"] = input_hashes;
    j["seed"] = seed;
    j["tool_version"] = tool_version;
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write manifest: " + path);
    }
    out << j.dump(2) << "\n";
}

} // namespace licem
