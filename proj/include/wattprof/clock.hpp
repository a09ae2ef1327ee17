#pragma once

#include <chrono>
#include <cstdint>
#include <memory>

namespace wattprof {

// Single monotonic timebase per host. Wall-clock is recorded separately for
// provenance only; all windows and traces use this clock.
class Clock {
public:
    virtual ~Clock() = default;
    virtual int64_t now_ns() const = 0;
    virtual void advance_ns(int64_t /*dt*/) {}
};

class SystemClock final : public Clock {
public:
    int64_t now_ns() const override {
        return std::chrono::duration_cast<std::chrono::nanoseconds>(
                   std::chrono::steady_clock::now().time_since_epoch())
            .count();
    }
};

// Manually advanced clock used for deterministic replay profiling and tests.
class SimClock final : public Clock {
public:
    explicit SimClock(int64_t start_ns = 0) : t_ns_(start_ns) {}
    int64_t now_ns() const override { return t_ns_; }
    void advance_ns(int64_t dt) override { t_ns_ += dt; }
    void set_ns(int64_t t) { t_ns_ = t; }

private:
    int64_t t_ns_;
};

}  // namespace wattprof
