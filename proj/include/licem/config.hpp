#pragma once

#include <map>
#include <optional>
#include <string>

#include "licem/common.hpp"

namespace licem {

// Minimal TOML-style experiment config: [section] headers, key = value pairs,
// '#' comments, bare or double-quoted values. Flags override file values.
class ConfigFile {
public:
    ConfigFile() = default;

    static ConfigFile parse(const std::string& text, const std::string& origin = "<config>");
    static ConfigFile load(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;
    std::optional<std::string> get(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    long long get_int(const std::string& section, const std::string& key, long long fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

    // "section.key" -> value view of everything, for manifests.
    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
};

} // namespace licem
