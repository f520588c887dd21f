#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace templink {

using NodeId = std::uint32_t;

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Pair (u,v) scored against an embedding table where at least one endpoint
// has no vector. Callers route these through cold-start imputation.
class MissingEmbeddingError : public Error {
public:
    explicit MissingEmbeddingError(const std::string& msg) : Error(msg) {}
};

inline std::uint64_t canonical_edge_key(NodeId u, NodeId v) {
    NodeId a = u < v ? u : v;
    NodeId b = u < v ? v : u;
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

// FNV-1a 64-bit, used for artifact digests and parameter fingerprints.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t seed = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

// Static partition of [0, n) over `threads` workers. Each index is written by
// exactly one worker, so per-index outputs are bit-identical for any thread
// count. `fn(thread_index, i)` must only touch slot i of shared outputs.
inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(int, std::size_t)>& fn) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(0, i);
        return;
    }
    int t = threads;
    if (static_cast<std::size_t>(t) > n) t = static_cast<int>(n);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(t));
    std::size_t chunk = (n + static_cast<std::size_t>(t) - 1) / static_cast<std::size_t>(t);
    for (int w = 0; w < t; ++w) {
        std::size_t lo = static_cast<std::size_t>(w) * chunk;
        std::size_t hi = lo + chunk < n ? lo + chunk : n;
        if (lo >= hi) break;
        pool.emplace_back([w, lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(w, i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace templink
