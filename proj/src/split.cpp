#include "licem/split.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace licem {

namespace {

struct NamedSplit {
    std::vector<std::string> train, val, test;
    bool has_train = false, has_val = false, has_test = false;
};

NamedSplit load_split_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open split file: " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("split file " + path + ": " + e.what());
    }
    NamedSplit s;
    auto read_list = [&](const char* key, std::vector<std::string>& out, bool& present) {
        if (!j.contains(key)) {
            return;
        }
        present = true;
        for (const auto& v : j[key]) {
            if (!v.is_string()) {
                throw ParseError("split file " + path + ": '" + key + "' entries must be id strings");
            }
            out.push_back(v.get<std::string>());
        }
    };
    read_list("train", s.train, s.has_train);
    read_list("val", s.val, s.has_val);
    read_list("test", s.test, s.has_test);
    if (!s.has_train && !s.has_val && !s.has_test) {
        throw ParseError("split file " + path + ": no train/val/test keys");
    }
    return s;
}

void shuffle_indices(std::vector<int>& idx, Rng& rng) {
    for (size_t i = idx.size(); i > 1; --i) {
        const size_t j = static_cast<size_t>(rng.below(i));
        std::swap(idx[i - 1], idx[j]);
    }
}

} // namespace

SplitResult split(const Dataset& dataset, const SplitSpec& spec) {
    if (dataset.samples.empty()) {
        throw ConfigError("split: dataset is empty");
    }
    if (spec.validation_fraction <= 0.0 || spec.validation_fraction >= 1.0) {
        throw ConfigError("split: validation_fraction must lie in (0,1)");
    }
    if (spec.test_fraction < 0.0 || spec.test_fraction >= 1.0) {
        throw ConfigError("split: test_fraction must lie in [0,1)");
    }

    std::unordered_map<std::string, int> by_id;
    for (size_t i = 0; i < dataset.samples.size(); ++i) {
        by_id[dataset.samples[i].id] = static_cast<int>(i);
    }

    SplitResult result;
    std::unordered_set<int> assigned;

    auto resolve = [&](const std::vector<std::string>& ids, std::vector<int>& out, const char* part) {
        for (const std::string& id : ids) {
            auto it = by_id.find(id);
            if (it == by_id.end()) {
                throw ConfigError(std::string("split: ") + part + " id '" + id + "' not in dataset");
            }
            if (!assigned.insert(it->second).second) {
                throw ConfigError(std::string("split: id '") + id + "' assigned to more than one partition");
            }
            out.push_back(it->second);
        }
    };

    bool fixed_train = false, fixed_val = false;
    if (spec.split_file) {
        const NamedSplit named = load_split_file(*spec.split_file);
        if (named.has_test) {
            resolve(named.test, result.test, "test");
        }
        if (named.has_train) {
            resolve(named.train, result.train, "train");
            fixed_train = true;
        }
        if (named.has_val) {
            resolve(named.val, result.val, "val");
            fixed_val = true;
        }
    }

    std::vector<int> rest;
    for (size_t i = 0; i < dataset.samples.size(); ++i) {
        if (assigned.count(static_cast<int>(i)) == 0) {
            rest.push_back(static_cast<int>(i));
        }
    }

    if (fixed_train && fixed_val) {
        // Fully explicit split; leftover ids (if any) go to train.
        result.train.insert(result.train.end(), rest.begin(), rest.end());
    } else {
        Rng rng(spec.seed);
        shuffle_indices(rest, rng);
        size_t test_n = 0;
        if (result.test.empty() && spec.test_fraction > 0.0) {
            test_n = static_cast<size_t>(spec.test_fraction * static_cast<double>(rest.size()));
        }
        const size_t val_n =
            fixed_val ? 0
                      : static_cast<size_t>(spec.validation_fraction * static_cast<double>(rest.size() - test_n));
        size_t k = 0;
        for (; k < test_n; ++k) {
            result.test.push_back(rest[k]);
        }
        for (; k < test_n + val_n; ++k) {
            result.val.push_back(rest[k]);
        }
        for (; k < rest.size(); ++k) {
            result.train.push_back(rest[k]);
        }
    }

    std::sort(result.train.begin(), result.train.end());
    std::sort(result.val.begin(), result.val.end());
    std::sort(result.test.begin(), result.test.end());

    if (result.train.empty()) {
        throw ConfigError("split: train partition is empty");
    }
    if (result.val.empty()) {
        throw ConfigError("split: validation partition is empty");
    }
    return result;
}

void save_split(const SplitResult& result, const Dataset& dataset, const std::string& path) {
    auto names = [&](const std::vector<int>& idx) {
        std::vector<std::string> out;
        out.reserve(idx.size());
        for (int i : idx) {
            out.push_back(dataset.samples[static_cast<size_t>(i)].id);
        }
        return out;
    };
    nlohmann::ordered_json j;
    j["train"] = names(result.train);
    j["val"] = names(result.val);
    j["test"] = names(result.test);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write split file: " + path);
    }
    out << j.dump() << "\n";
}

} // namespace licem
