#include "licem/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace licem {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
        ++b;
    }
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
        --e;
    }
    return s.substr(b, e - b);
}

} // namespace

ConfigFile ConfigFile::parse(const std::string& text, const std::string& origin) {
    ConfigFile cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) {
            // comments only start outside quoted values
            const size_t quote_open = line.find('"');
            if (quote_open == std::string::npos || hash < quote_open) {
                line = line.substr(0, hash);
            }
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ParseError(origin + ":" + std::to_string(lineno) + ": unterminated section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) {
                throw ParseError(origin + ":" + std::to_string(lineno) + ": empty section name");
            }
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ParseError(origin + ":" + std::to_string(lineno) + ": empty key");
        }
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        const std::string full = section.empty() ? key : section + "." + key;
        cfg.entries_[full] = value;
    }
    return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file: " + path);
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse(text, path);
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
    return entries_.count(section.empty() ? key : section + "." + key) != 0;
}

std::optional<std::string> ConfigFile::get(const std::string& section, const std::string& key) const {
    auto it = entries_.find(section.empty() ? key : section + "." + key);
    if (it == entries_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
    return get(section, key).value_or(fallback);
}

double ConfigFile::get_double(const std::string& section, const std::string& key, double fallback) const {
    auto v = get(section, key);
    if (!v) {
        return fallback;
    }
    try {
        size_t used = 0;
        const double parsed = std::stod(*v, &used);
        if (used != v->size()) {
            throw std::invalid_argument("trailing characters");
        }
        return parsed;
    } catch (const std::exception&) {
        throw ConfigError("config key " + section + "." + key + ": '" + *v + "' is not a number");
    }
}

long long ConfigFile::get_int(const std::string& section, const std::string& key, long long fallback) const {
    auto v = get(section, key);
    if (!v) {
        return fallback;
    }
    try {
        size_t used = 0;
        const long long parsed = std::stoll(*v, &used);
        if (used != v->size()) {
            throw std::invalid_argument("trailing characters");
        }
        return parsed;
    } catch (const std::exception&) {
        throw ConfigError("config key " + section + "." + key + ": '" + *v + "' is not an integer");
    }
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    auto v = get(section, key);
    if (!v) {
        return fallback;
    }
    if (*v == "true" || *v == "1" || *v == "yes") {
        return true;
    }
    if (*v == "false" || *v == "0" || *v == "no") {
        return false;
    }
    throw ConfigError("config key " + section + "." + key + ": '" + *v + "' is not a boolean");
}

} // namespace licem
