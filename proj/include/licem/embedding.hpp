#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "licem/common.hpp"

namespace licem {

// Per-sample encoder outputs, ingested from file; the encoder itself is
// external. Binary layout (little-endian):
//   magic "LCEM" | u32 version | u32 dim | provenance (u16 len, bytes)
//   then repeated records: u16 id length | id bytes | dim x f64.
class EmbeddingStore {
public:
    EmbeddingStore() = default;
    EmbeddingStore(int dim, std::string provenance) : dim_(dim), provenance_(std::move(provenance)) {}

    int dim() const { return dim_; }
    const std::string& provenance() const { return provenance_; }
    size_t size() const { return order_.size(); }

    // Refuses NaN/Inf entries and dimension mismatches, naming the id.
    void put(const std::string& id, const std::vector<double>& vec);
    bool contains(const std::string& id) const { return index_.count(id) != 0; }
    const std::vector<double>& get(const std::string& id) const;
    const std::vector<std::string>& ids() const { return order_; }

    static EmbeddingStore load(const std::string& path);
    void save(const std::string& path) const;

private:
    int dim_ = 0;
    std::string provenance_;
    std::vector<std::string> order_;
    std::unordered_map<std::string, std::vector<double>> index_;
};

} // namespace licem
