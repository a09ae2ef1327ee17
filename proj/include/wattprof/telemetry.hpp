#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "wattprof/clock.hpp"

namespace wattprof {

struct TelemetryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BackendUnavailable : TelemetryError {
    using TelemetryError::TelemetryError;
};
struct ParseError : TelemetryError {
    using TelemetryError::TelemetryError;
};
struct CounterAbsent : TelemetryError {
    using TelemetryError::TelemetryError;
};
struct CounterRegression : TelemetryError {
    using TelemetryError::TelemetryError;
};
struct EmptyWindowCoverage : TelemetryError {
    using TelemetryError::TelemetryError;
};

// One device reading at one instant. Units are normalized: watts, MB, degC.
// Absent capabilities stay absent (nullopt), never zero.
struct PowerSample {
    int64_t t_ns = 0;
    std::string device_id;
    double power_watts = 0.0;
    std::optional<double> memory_mb;
    std::optional<double> temperature_c;
    std::optional<double> host_memory_mb;
    std::optional<double> energy_counter_j;  // cumulative, when the device exposes one
};

// Multi-device readings collapsed to one row: power and memory summed,
// temperature averaged over devices that report it.
struct AggregateSample {
    int64_t t_ns = 0;
    double total_power_watts = 0.0;
    double total_memory_mb = 0.0;
    std::optional<double> mean_temperature_c;
    std::optional<double> host_memory_mb;
    std::optional<double> energy_counter_j;
    int device_count = 0;
};

struct PowerTrace {
    std::vector<AggregateSample> samples;
    double nominal_interval_ms = 50.0;
    bool error_marker = false;      // set when the backend failed mid-run
    std::string error_message;

    bool empty() const { return samples.empty(); }
    int64_t start_ns() const { return samples.front().t_ns; }
    int64_t end_ns() const { return samples.back().t_ns; }
};

enum class BackendKind { VendorGpu, VendorSoc, Replay, Synthetic };

enum class Capability { Power, EnergyCounter, Memory, Temperature };

struct TelemetryBackendDescriptor {
    BackendKind kind = BackendKind::Synthetic;
    std::string source_uri;
    std::set<Capability> capabilities;
    // Software power readings carry a backend-declared error band (fractional),
    // recorded on reports rather than corrected for.
    double error_band = 0.10;
};

class TelemetryBackend {
public:
    virtual ~TelemetryBackend() = default;

    // One sample per visible device, sharing a monotonic timestamp.
    // Throws BackendUnavailable / ParseError. Returns empty when a replay
    // source is exhausted cleanly.
    virtual std::vector<PowerSample> poll() = 0;

    virtual const TelemetryBackendDescriptor& descriptor() const = 0;

    // Real-time backends are paced by the sampler; replay sources are drained
    // at file cadence with recorded timestamps.
    virtual bool realtime() const = 0;
};

// Constant or lightly perturbed generator, virtual-timed: each poll advances
// the timestamp by the nominal interval. Deterministic from seed.
class SyntheticBackend final : public TelemetryBackend {
public:
    struct Config {
        double power_watts = 100.0;
        double memory_mb = 1024.0;
        std::optional<double> temperature_c = 55.0;
        int devices = 1;
        double interval_ms = 50.0;
        double jitter_watts = 0.0;   // uniform +/- jitter, seeded
        uint64_t seed = 0;
        int64_t start_t_ns = 0;
        bool with_energy_counter = false;
        // polls before the generator reports exhaustion (one hour at 50 ms);
        // keeps drain() terminating on virtual-timed sources
        size_t budget = 72000;
    };

    explicit SyntheticBackend(Config cfg);
    std::vector<PowerSample> poll() override;
    const TelemetryBackendDescriptor& descriptor() const override { return desc_; }
    bool realtime() const override { return false; }

private:
    Config cfg_;
    TelemetryBackendDescriptor desc_;
    int64_t t_ns_;
    uint64_t rng_state_;
    double counter_j_ = 0.0;
    int64_t last_t_ns_ = -1;
    size_t polls_ = 0;
};

// Replays a CSV of per-device samples:
//   t_ns,device_id,power_watts,memory_mb,temperature_c
// (optional trailing column energy_counter_j; empty field = absent).
// Each poll returns the next timestamp group verbatim.
class ReplayBackend final : public TelemetryBackend {
public:
    explicit ReplayBackend(const std::string& path);
    std::vector<PowerSample> poll() override;
    const TelemetryBackendDescriptor& descriptor() const override { return desc_; }
    bool realtime() const override { return false; }
    void rewind() { pos_ = 0; }

private:
    TelemetryBackendDescriptor desc_;
    std::vector<std::vector<PowerSample>> groups_;  // grouped by timestamp
    size_t pos_ = 0;
};

// Parses one line of `nvidia-smi --query-gpu=... --format=csv,noheader,nounits`
// style vendor output into a PowerSample. Exercised by unit tests on canned
// text; live adapters reuse it on matching hardware.
PowerSample parse_nvml_csv_row(const std::string& line, int64_t t_ns);

// Parses a rocm-smi concise row (index, power W, temp degC, vram MB).
PowerSample parse_rocm_csv_row(const std::string& line, int64_t t_ns);

// Sums power/memory, averages temperature over reporting devices.
// Throws TelemetryError on empty input or mixed timestamps.
AggregateSample aggregate_devices(std::span<const PowerSample> samples);

// Runs the backend until stopped (realtime pacing) or exhausted (replay /
// synthetic budget). Actual timestamps are recorded, never back-dated.
class Sampler {
public:
    Sampler(TelemetryBackend& backend, double interval_ms = 50.0);

    void start();
    PowerTrace stop();

    // Synchronous helpers for non-realtime backends.
    // Drains a replay source completely; polls a synthetic source n times.
    PowerTrace drain();
    PowerTrace poll_n(size_t n);

private:
    void loop();

    TelemetryBackend& backend_;
    double interval_ms_;
    std::atomic<bool> stop_{false};
    std::thread thread_;
    PowerTrace trace_;
};

// Trapezoidal integration of total power over [start_ns, end_ns), power
// linearly interpolated at window boundaries that fall between samples.
// Time converted to seconds. Throws EmptyWindowCoverage when no sample
// overlaps or brackets the window.
double integrate_energy(const PowerTrace& trace, int64_t start_ns, int64_t end_ns);

// End counter minus start counter over the window, in joules. Throws
// CounterAbsent / CounterRegression; callers fall back to integrate_energy.
double energy_counter_delta(const PowerTrace& trace, int64_t start_ns, int64_t end_ns);

// Power values relevant to a window: samples strictly inside plus the
// linearly interpolated boundary values. Used for per-window watt statistics.
std::vector<double> window_power_values(const PowerTrace& trace, int64_t start_ns,
                                        int64_t end_ns);

std::unique_ptr<TelemetryBackend> make_backend(const std::string& spec);

}  // namespace wattprof
