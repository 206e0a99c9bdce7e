#pragma once

#include <atomic>
#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace best {

// Process exit codes shared between the library error type and the CLI.
enum class ErrorKind : int {
    io = 2,
    schema = 3,
    policy = 4,
    fingerprint = 5,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }
    int exit_code() const { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

// Warning sink. Routines that can emit non-fatal diagnostics accept a
// nullable pointer to one of these.
struct Diagnostics {
    std::vector<std::string> warnings;
    void warn(std::string msg) { warnings.push_back(std::move(msg)); }
};

inline void warn_into(Diagnostics* diag, std::string msg) {
    if (diag) diag->warn(std::move(msg));
}

// Shortest decimal representation that round-trips the exact double.
// All serialized numbers go through this so emission is canonical.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

inline bool parse_int(std::string_view s, long long& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

// FNV-1a, used for schema and policy fingerprints.
struct Fnv1a {
    std::uint64_t h = 1469598103934665603ull;
    void add(std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
        add_byte(0x1f); // field separator
    }
    void add_byte(unsigned char c) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::string hex() const {
        static const char* digits = "0123456789abcdef";
        std::string out(16, '0');
        std::uint64_t v = h;
        for (int i = 15; i >= 0; --i) {
            out[i] = digits[v & 0xf];
            v >>= 4;
        }
        return out;
    }
};

// Runs fn(i) for i in [0, count) on up to n_threads workers. Results must be
// written to preallocated slots so the outcome is independent of scheduling.
template <typename Fn>
void parallel_for(std::size_t count, unsigned n_threads, Fn&& fn) {
    if (n_threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            fn(i);
        }
    };
    unsigned n = std::min<std::size_t>(n_threads, count);
    std::vector<std::thread> pool;
    pool.reserve(n);
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

} // namespace best
