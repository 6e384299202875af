#include "cascade/store.hpp"

#include <cstring>
#include <exception>
#include <fstream>
#include <iterator>

namespace cascade {

namespace {

constexpr char kDataMagic[8] = {'C', 'A', 'S', 'C', 'S', 'T', 'O', 'R'};
constexpr char kIndexMagic[8] = {'C', 'A', 'S', 'C', 'I', 'D', 'X', '1'};
constexpr std::size_t kHeaderSize = 16;

template <typename T>
void put(std::string& out, T v) {
    auto u = static_cast<std::make_unsigned_t<T>>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

void put_string(std::string& out, std::string_view s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.append(s);
}

class Cursor {
public:
    explicit Cursor(std::string_view bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        std::make_unsigned_t<T> u = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i)
            u |= static_cast<std::make_unsigned_t<T>>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += sizeof(T);
        return static_cast<T>(u);
    }
    std::string get_string() {
        const auto n = get<std::uint32_t>();
        need(n);
        std::string s(bytes_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw StoreError("truncated cascade store record");
    }
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

std::string header(const char (&magic)[8], std::uint32_t extra) {
    std::string h(magic, 8);
    put<std::uint32_t>(h, kStoreVersion);
    put<std::uint32_t>(h, extra);
    return h;
}

void check_header(std::string_view bytes, const char (&magic)[8], const std::filesystem::path& path) {
    if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), magic, 8) != 0)
        throw StoreError(path.string() + ": not a cascade store file");
    Cursor c(bytes.substr(8, 8));
    const auto version = c.get<std::uint32_t>();
    if (version != kStoreVersion)
        throw StoreError(path.string() + ": unsupported store version " + std::to_string(version));
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::filesystem::path store_index_path(const std::filesystem::path& store) {
    auto p = store;
    p += ".idx";
    return p;
}

std::string encode_cascade(const CascadeGraph& g) {
    std::string out;
    put_string(out, g.id());
    put<std::uint32_t>(out, static_cast<std::uint32_t>(g.node_count()));
    for (const auto& u : g.users()) put_string(out, u);
    for (Timestamp t : g.infection_times()) put<std::int64_t>(out, t);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(g.edge_count()));
    for (const auto& e : g.edges()) {
        put<std::uint32_t>(out, e.source);
        put<std::uint32_t>(out, e.target);
        put<std::uint32_t>(out, e.weight);
    }
    return out;
}

CascadeGraph decode_cascade(std::string_view record) {
    Cursor c(record);
    std::string id = c.get_string();
    const auto n = c.get<std::uint32_t>();
    std::vector<std::string> users(n);
    for (auto& u : users) u = c.get_string();
    std::vector<Timestamp> times(n);
    for (auto& t : times) t = c.get<std::int64_t>();
    const auto m = c.get<std::uint32_t>();
    std::vector<Edge> edges(m);
    for (auto& e : edges) {
        e.source = c.get<std::uint32_t>();
        e.target = c.get<std::uint32_t>();
        e.weight = c.get<std::uint32_t>();
    }
    if (!c.done()) throw StoreError("trailing bytes in cascade record '" + id + "'");
    try {
        return CascadeGraph(std::move(id), std::move(users), std::move(times), std::move(edges));
    } catch (const std::exception& e) {
        throw StoreError(std::string("corrupt cascade record: ") + e.what());
    }
}

void write_store(const std::filesystem::path& store, std::span<const CascadeGraph> cascades) {
    std::vector<std::string> records(cascades.size());
    const auto count = static_cast<std::int64_t>(cascades.size());
#pragma omp parallel for schedule(dynamic, 256)
    for (std::int64_t i = 0; i < count; ++i) records[i] = encode_cascade(cascades[i]);

    std::ofstream data(store, std::ios::binary | std::ios::trunc);
    std::ofstream index(store_index_path(store), std::ios::binary | std::ios::trunc);
    if (!data || !index) throw StoreError("cannot write cascade store at " + store.string());
    data << header(kDataMagic, 0);
    std::string idx = header(kIndexMagic, 0);
    put<std::uint64_t>(idx, cascades.size());
    std::uint64_t offset = kHeaderSize;
    for (std::size_t i = 0; i < records.size(); ++i) {
        data << records[i];
        put_string(idx, cascades[i].id());
        put<std::uint64_t>(idx, offset);
        put<std::uint64_t>(idx, records[i].size());
        offset += records[i].size();
    }
    index << idx;
    if (!data.flush() || !index.flush()) throw StoreError("failed writing cascade store at " + store.string());
}

StoreReader::StoreReader(const std::filesystem::path& store) {
    data_ = slurp(store);
    check_header(data_, kDataMagic, store);
    const auto index_path = store_index_path(store);
    const std::string idx = slurp(index_path);
    check_header(idx, kIndexMagic, index_path);
    Cursor c(std::string_view(idx).substr(kHeaderSize));
    const auto count = c.get<std::uint64_t>();
    entries_.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        Entry e;
        e.id = c.get_string();
        e.offset = c.get<std::uint64_t>();
        e.size = c.get<std::uint64_t>();
        if (e.offset < kHeaderSize || e.offset + e.size > data_.size())
            throw StoreError(index_path.string() + ": entry for '" + e.id + "' points outside the data file");
        entries_.push_back(std::move(e));
    }
    if (!c.done()) throw StoreError(index_path.string() + ": trailing bytes");
}

CascadeGraph StoreReader::load(std::size_t i) const {
    const auto& e = entries_.at(i);
    return decode_cascade(std::string_view(data_).substr(e.offset, e.size));
}

std::vector<CascadeGraph> StoreReader::load_all() const {
    std::vector<CascadeGraph> out(entries_.size());
    const auto count = static_cast<std::int64_t>(entries_.size());
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 256)
    for (std::int64_t i = 0; i < count; ++i) {
        try {
            out[i] = load(static_cast<std::size_t>(i));
        } catch (...) {
#pragma omp critical(store_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

}  // namespace cascade
