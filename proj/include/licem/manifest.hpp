#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace licem {

// Provenance sidecar written next to every artifact-producing command's
// output: the command, its resolved configuration, input file hashes, the
// seed and timestamps. Timestamps are the only non-reproducible fields.
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> config;
    std::map<std::string, std::string> input_hashes; // path -> fnv64 hex
    std::uint64_t seed = 0;
    std::string tool_version;
    std::string started_at;
    std::string finished_at;

    void add_input(const std::string& path);
    void stamp_start();
    void stamp_finish();
    void save(const std::string& path) const;
};

} // namespace licem
