#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace cg {

// Error categories mirrored one-to-one by the C API status codes.
enum class ErrorKind { InvalidArgument, Io, Format, Numeric, Internal };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail_invalid(const std::string& msg) { throw Error(ErrorKind::InvalidArgument, msg); }
[[noreturn]] inline void fail_io(const std::string& msg) { throw Error(ErrorKind::Io, msg); }
[[noreturn]] inline void fail_format(const std::string& msg) { throw Error(ErrorKind::Format, msg); }
[[noreturn]] inline void fail_numeric(const std::string& msg) { throw Error(ErrorKind::Numeric, msg); }

inline void require(bool cond, const std::string& msg) {
    if (!cond) fail_invalid(msg);
}

constexpr double kPi = 3.14159265358979323846;

// Wrap an angle to [-pi/2, pi/2), the line-orientation period.
inline double wrap_orientation(double theta) {
    double t = std::fmod(theta + kPi / 2.0, kPi);
    if (t < 0) t += kPi;
    return t - kPi / 2.0;
}

// Wrap an angle to (-pi, pi].
inline double wrap_angle(double theta) {
    double t = std::fmod(theta, 2.0 * kPi);
    if (t <= -kPi) t += 2.0 * kPi;
    if (t > kPi) t -= 2.0 * kPi;
    return t;
}

// Round half away from zero. Symmetric under negation, which the kernel
// mirror property relies on.
inline long round_away(double v) {
    return v >= 0 ? static_cast<long>(std::floor(v + 0.5)) : static_cast<long>(std::ceil(v - 0.5));
}

// Runs fn(i) for i in [begin, end) over a fixed block decomposition. Results
// must not depend on which thread runs which block; callers guarantee blocks
// write to disjoint state (or commutative integer accumulators).
inline void parallel_for(std::int64_t begin, std::int64_t end,
                         const std::function<void(std::int64_t)>& fn,
                         unsigned max_threads = 0) {
    const std::int64_t count = end - begin;
    if (count <= 0) return;
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (max_threads > 0 && max_threads < hw) hw = max_threads;
    unsigned n_threads = static_cast<unsigned>(std::min<std::int64_t>(hw, count));
    if (n_threads <= 1) {
        for (std::int64_t i = begin; i < end; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    const std::int64_t chunk = (count + n_threads - 1) / n_threads;
    for (unsigned t = 0; t < n_threads; ++t) {
        const std::int64_t lo = begin + chunk * t;
        const std::int64_t hi = std::min<std::int64_t>(lo + chunk, end);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::int64_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace cg
