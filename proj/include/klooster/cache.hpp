#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "klooster/error.hpp"
#include "klooster/fields.hpp"
#include "klooster/kloosterman.hpp"

// On-disk table format, all fields little-endian and packed:
//   "KLSM" | version u32 | s u32 | p u64 | method u8 | max_abs_error f64 |
//   p entries of (re f64, im f64)

namespace klooster {

inline constexpr std::uint32_t kCacheFormatVersion = 1;
inline constexpr std::size_t kCacheHeaderBytes = 4 + 4 + 4 + 8 + 1 + 8;

namespace detail {

template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    const U bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

template <typename T>
T get_le(const unsigned char* in) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(static_cast<U>(in[i]) << (8 * i));
    return std::bit_cast<T>(bits);
}

}  // namespace detail

inline std::vector<unsigned char> encode_table(const KloostermanTable& table) {
    std::vector<unsigned char> out;
    out.reserve(kCacheHeaderBytes + 16 * table.values.size());
    for (char c : {'K', 'L', 'S', 'M'}) out.push_back(static_cast<unsigned char>(c));
    detail::put_le(out, kCacheFormatVersion);
    detail::put_le(out, static_cast<std::uint32_t>(table.s));
    detail::put_le(out, static_cast<std::uint64_t>(table.p));
    detail::put_le(out, static_cast<std::uint8_t>(table.method));
    detail::put_le(out, table.max_abs_error);
    for (const auto& v : table.values) {
        detail::put_le(out, v.real());
        detail::put_le(out, v.imag());
    }
    return out;
}

/// nullopt on any malformed input.
inline std::optional<KloostermanTable> decode_table(const std::vector<unsigned char>& bytes) {
    if (bytes.size() < kCacheHeaderBytes || std::memcmp(bytes.data(), "KLSM", 4) != 0) return std::nullopt;
    const unsigned char* b = bytes.data();
    if (detail::get_le<std::uint32_t>(b + 4) != kCacheFormatVersion) return std::nullopt;
    KloostermanTable t;
    t.s = detail::get_le<std::uint32_t>(b + 8);
    t.p = detail::get_le<std::uint64_t>(b + 12);
    const auto method = detail::get_le<std::uint8_t>(b + 20);
    if (method > 1) return std::nullopt;
    t.method = static_cast<Method>(method);
    t.max_abs_error = detail::get_le<double>(b + 21);
    if (t.p == 0 || bytes.size() != kCacheHeaderBytes + 16 * t.p) return std::nullopt;
    t.values.resize(t.p);
    for (std::uint64_t n = 0; n < t.p; ++n) {
        const unsigned char* e = b + kCacheHeaderBytes + 16 * n;
        t.values[n] = {detail::get_le<double>(e), detail::get_le<double>(e + 8)};
    }
    return t;
}

/// Atomic write: a uniquely named temporary file renamed onto the target.
inline void write_table(const std::filesystem::path& path, const KloostermanTable& table) {
    const auto bytes = encode_table(table);
    std::filesystem::create_directories(path.parent_path());
    std::random_device rd;
    const auto tmp = path.parent_path() /
                     (path.filename().string() + ".tmp" + std::to_string(rd()) +
                      std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::IoError, "cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error(ErrorKind::IoError, "short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::optional<KloostermanTable> read_table(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_table(bytes);
}

/// Memoized bulk tables keyed by (s, p, format version), in memory and
/// optionally on disk. Unreadable cache files are rebuilt.
class TableCache {
public:
    using TablePtr = std::shared_ptr<const KloostermanTable>;

    explicit TableCache(std::optional<std::filesystem::path> dir = std::nullopt, Budget budget = {})
        : dir_(std::move(dir)), budget_(budget) {}

    std::filesystem::path path_for(unsigned s, std::uint64_t p) const {
        return dir_.value_or(".") / ("K_s" + std::to_string(s) + "_p" + std::to_string(p) + "_v" +
                                     std::to_string(kCacheFormatVersion) + ".bin");
    }

    /// Table plus whether it came from a cache (memory or disk).
    std::pair<TablePtr, bool> get(unsigned s, std::uint64_t p) {
        std::shared_future<TablePtr> fut;
        std::promise<TablePtr> promise;
        bool owner = false;
        {
            std::lock_guard lock(mutex_);
            auto it = entries_.find({s, p});
            if (it != entries_.end()) {
                fut = it->second;
            } else {
                fut = promise.get_future().share();
                entries_.emplace(std::make_pair(s, p), fut);
                owner = true;
            }
        }
        if (!owner) return {fut.get(), true};
        try {
            auto [table, hit] = load_or_build(s, p);
            promise.set_value(table);
            return {table, hit};
        } catch (...) {
            promise.set_exception(std::current_exception());
            std::lock_guard lock(mutex_);
            entries_.erase({s, p});
            throw;
        }
    }

    /// Removes every cache file in the directory; returns the count removed.
    std::size_t clear() {
        std::lock_guard lock(mutex_);
        entries_.clear();
        std::size_t removed = 0;
        if (!dir_ || !std::filesystem::exists(*dir_)) return 0;
        for (const auto& entry : std::filesystem::directory_iterator(*dir_)) {
            const auto name = entry.path().filename().string();
            if (name.rfind("K_s", 0) == 0 && name.find(".bin") != std::string::npos) {
                std::filesystem::remove(entry.path());
                ++removed;
            }
        }
        return removed;
    }

private:
    std::pair<TablePtr, bool> load_or_build(unsigned s, std::uint64_t p) {
        if (dir_) {
            if (auto cached = read_table(path_for(s, p)); cached && cached->s == s && cached->p == p) {
                return {std::make_shared<const KloostermanTable>(std::move(*cached)), true};
            }
        }
        const PrimeField ctx(p, budget_);
        auto table = std::make_shared<const KloostermanTable>(kloosterman_bulk(ctx, s, budget_));
        if (dir_) write_table(path_for(s, p), *table);
        return {table, false};
    }

    std::optional<std::filesystem::path> dir_;
    Budget budget_;
    std::mutex mutex_;
    std::map<std::pair<unsigned, std::uint64_t>, std::shared_future<TablePtr>> entries_;
};

}  // namespace klooster
