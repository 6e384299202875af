#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cascade/graph.hpp"

namespace cascade {

class StoreError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kStoreVersion = 1;

/// Path of the index file that accompanies a store data file.
std::filesystem::path store_index_path(const std::filesystem::path& store);

/// Serialises one cascade into a self-contained binary record (little endian).
std::string encode_cascade(const CascadeGraph& graph);
CascadeGraph decode_cascade(std::string_view record);

/// Writes `store` (magic header + records) and `store`.idx (id, offset, size per cascade).
void write_store(const std::filesystem::path& store, std::span<const CascadeGraph> cascades);

class StoreReader {
public:
    explicit StoreReader(const std::filesystem::path& store);

    std::size_t size() const { return entries_.size(); }
    const std::string& id(std::size_t i) const { return entries_[i].id; }
    CascadeGraph load(std::size_t i) const;
    /// Every cascade, decoded in parallel, in index order.
    std::vector<CascadeGraph> load_all() const;

private:
    struct Entry {
        std::string id;
        std::uint64_t offset = 0;
        std::uint64_t size = 0;
    };
    std::string data_;
    std::vector<Entry> entries_;
};

}  // namespace cascade
