#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wattprof/clock.hpp"
#include "wattprof/endpoint.hpp"
#include "wattprof/telemetry.hpp"

namespace wattprof {

struct OrchestratorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct QuerySpec {
    std::string query_id;
    std::string prompt;
    std::string dataset_tag;
    DecodingConfig decoding;
    bool thinking_enabled = false;
    std::optional<std::string> reference_answer;
    std::optional<char> reference_letter;
};

struct GenerationResult {
    std::string output_text;
    int input_tokens = 0;
    int output_tokens = 0;
    bool tokens_approximate = false;  // whitespace estimate, no usage metadata
    std::optional<double> ttft_s;     // absent on non-streaming endpoints
    double total_s = 0.0;
    double per_token_ms = 0.0;
    double throughput_tokens_per_sec = 0.0;
    std::optional<std::vector<double>> token_logprobs;
    std::optional<double> init_duration_s;
};

struct Window {
    int64_t start_ns = 0;
    int64_t end_ns = 0;  // half-open [start, end)
};

struct StatSummary {
    double avg = 0.0, max = 0.0, median = 0.0, min = 0.0;
};

StatSummary summarize(std::vector<double> values);

struct QueryProfile {
    double per_query_joules = 0.0;      // mean across repeats
    double joules_std = 0.0;            // population std across repeats
    std::optional<double> counter_joules;  // authoritative when present
    StatSummary watts;                  // mean of per-repeat summaries
    StatSummary gpu_mb;
    std::optional<StatSummary> cpu_mb;  // host memory, when the backend reports it
    std::optional<StatSummary> temperature_c;
    std::optional<double> flops_per_request;
    int repeats = 0;
};

// Throughput epsilon: decode time clamped below by this to keep the rate finite.
inline constexpr double kThroughputEpsilonS = 1e-9;

// Decoder-forward-pass approximation: 2 * active_params * total tokens.
double estimate_flops(double active_params, int64_t input_tokens, int64_t output_tokens);

// Single query against an endpoint with a window spanning dispatch to
// final-token receipt on the shared monotonic clock. Batch size is 1.
std::pair<GenerationResult, Window> run_query(ChatEndpoint& endpoint, const QuerySpec& query,
                                              Clock& clock);

struct ProfileOptions {
    int repeats = 10;
    double cooldown_ms = 250.0;  // idle gap so repeat windows never overlap
    double interval_ms = 50.0;   // telemetry sampling cadence
    std::optional<double> active_params;  // enables flops_per_request
};

struct ProfileResult {
    GenerationResult generation;  // from the final repeat
    QueryProfile profile;
    std::vector<Window> windows;
};

// Drives repeats of one query while a telemetry trace covers their windows.
// With a non-realtime backend (replay/synthetic) the trace is drained once up
// front and the shared clock is anchored at its start, which makes the whole
// run deterministic. With a realtime backend a threaded sampler wraps the
// repeats. The clock must be the same one the endpoint advances (mock) or
// reads (real).
class ProfilingSession {
public:
    ProfilingSession(ChatEndpoint& endpoint, TelemetryBackend& backend, Clock& clock,
                     ProfileOptions opts = {});

    ProfileResult profile_query(const QuerySpec& query);

    const PowerTrace& trace() const { return trace_; }

private:
    ChatEndpoint& endpoint_;
    TelemetryBackend& backend_;
    Clock& clock_;
    ProfileOptions opts_;
    PowerTrace trace_;  // pre-drained for non-realtime backends
    bool realtime_;
};

// Pure aggregation of repeat windows over a closed trace; the session and
// tests share it.
QueryProfile profile_from_windows(const PowerTrace& trace, const std::vector<Window>& windows,
                                  const ProfileOptions& opts);

}  // namespace wattprof
