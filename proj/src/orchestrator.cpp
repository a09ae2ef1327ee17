#include "wattprof/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wattprof {

StatSummary summarize(std::vector<double> values) {
    StatSummary s;
    if (values.empty()) return s;
    std::sort(values.begin(), values.end());
    s.min = values.front();
    s.max = values.back();
    s.avg = std::accumulate(values.begin(), values.end(), 0.0) / double(values.size());
    size_t n = values.size();
    s.median = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    return s;
}

double estimate_flops(double active_params, int64_t input_tokens, int64_t output_tokens) {
    if (active_params <= 0 || input_tokens + output_tokens <= 0)
        throw OrchestratorError("estimate_flops: inputs must be positive");
    return 2.0 * active_params * double(input_tokens + output_tokens);
}

std::pair<GenerationResult, Window> run_query(ChatEndpoint& endpoint, const QuerySpec& query,
                                              Clock& clock) {
    if (query.prompt.empty()) throw OrchestratorError("run_query: empty prompt");

    ChatRequest req;
    req.prompt = query.prompt;
    req.decoding = query.decoding;
    req.thinking_enabled = query.thinking_enabled;

    Window window;
    window.start_ns = clock.now_ns();  // immediately before dispatch
    ChatResponse resp = endpoint.complete(req);
    window.end_ns = clock.now_ns();    // final-token receipt

    GenerationResult gen;
    gen.output_text = resp.text;
    gen.total_s = double(window.end_ns - window.start_ns) * 1e-9;
    gen.ttft_s = resp.ttft_s;
    gen.token_logprobs = resp.token_logprobs;
    gen.init_duration_s = resp.init_duration_s;

    if (resp.input_tokens && resp.output_tokens) {
        gen.input_tokens = *resp.input_tokens;
        gen.output_tokens = *resp.output_tokens;
    } else {
        gen.input_tokens = resp.input_tokens.value_or(approx_token_count(query.prompt));
        gen.output_tokens = resp.output_tokens.value_or(approx_token_count(resp.text));
        gen.tokens_approximate = true;
    }

    double decode_s = std::max(gen.total_s - gen.ttft_s.value_or(0.0), kThroughputEpsilonS);
    gen.throughput_tokens_per_sec = double(gen.output_tokens) / decode_s;
    if (gen.output_tokens > 0)
        gen.per_token_ms = 1000.0 / gen.throughput_tokens_per_sec;
    return {std::move(gen), window};
}

QueryProfile profile_from_windows(const PowerTrace& trace, const std::vector<Window>& windows,
                                  const ProfileOptions& opts) {
    if (windows.empty()) throw OrchestratorError("profile_from_windows: no windows");

    QueryProfile profile;
    profile.repeats = int(windows.size());

    std::vector<double> joules_per_repeat;
    std::vector<StatSummary> watt_stats, mem_stats, cpu_stats, temp_stats;
    bool counter_ok = true;
    double counter_sum = 0.0;
    bool any_cpu = false, any_temp = false;

    for (const auto& w : windows) {
        joules_per_repeat.push_back(integrate_energy(trace, w.start_ns, w.end_ns));
        watt_stats.push_back(summarize(window_power_values(trace, w.start_ns, w.end_ns)));

        std::vector<double> mem, cpu, temp;
        for (const auto& s : trace.samples) {
            if (s.t_ns < w.start_ns || s.t_ns >= w.end_ns) continue;
            mem.push_back(s.total_memory_mb);
            if (s.host_memory_mb) cpu.push_back(*s.host_memory_mb);
            if (s.mean_temperature_c) temp.push_back(*s.mean_temperature_c);
        }
        mem_stats.push_back(summarize(std::move(mem)));
        if (!cpu.empty()) {
            any_cpu = true;
            cpu_stats.push_back(summarize(std::move(cpu)));
        }
        if (!temp.empty()) {
            any_temp = true;
            temp_stats.push_back(summarize(std::move(temp)));
        }

        if (counter_ok) {
            try {
                counter_sum += energy_counter_delta(trace, w.start_ns, w.end_ns);
            } catch (const TelemetryError&) {
                counter_ok = false;  // fall back to integration only
            }
        }
    }

    profile.per_query_joules =
        std::accumulate(joules_per_repeat.begin(), joules_per_repeat.end(), 0.0) /
        double(joules_per_repeat.size());
    double ss = 0.0;
    for (double j : joules_per_repeat)
        ss += (j - profile.per_query_joules) * (j - profile.per_query_joules);
    profile.joules_std = std::sqrt(ss / double(joules_per_repeat.size()));
    if (counter_ok) profile.counter_joules = counter_sum / double(windows.size());

    // mean of per-repeat summaries, not pooled samples
    auto mean_summary = [](const std::vector<StatSummary>& v) {
        StatSummary out;
        for (const auto& s : v) {
            out.avg += s.avg;
            out.max += s.max;
            out.median += s.median;
            out.min += s.min;
        }
        double n = double(v.size());
        out.avg /= n;
        out.max /= n;
        out.median /= n;
        out.min /= n;
        return out;
    };
    profile.watts = mean_summary(watt_stats);
    profile.gpu_mb = mean_summary(mem_stats);
    if (any_cpu) profile.cpu_mb = mean_summary(cpu_stats);
    if (any_temp) profile.temperature_c = mean_summary(temp_stats);
    return profile;
}

ProfilingSession::ProfilingSession(ChatEndpoint& endpoint, TelemetryBackend& backend,
                                   Clock& clock, ProfileOptions opts)
    : endpoint_(endpoint),
      backend_(backend),
      clock_(clock),
      opts_(std::move(opts)),
      realtime_(backend.realtime()) {
    if (!realtime_) {
        Sampler sampler(backend_, opts_.interval_ms);
        trace_ = sampler.drain();
        if (trace_.empty())
            throw OrchestratorError("profiling session: backend produced no samples");
        // Anchor the simulated clock at the trace start so windows line up.
        clock_.advance_ns(trace_.start_ns() - clock_.now_ns());
    }
}

ProfileResult ProfilingSession::profile_query(const QuerySpec& query) {
    if (opts_.repeats < 1) throw OrchestratorError("profile_query: repeats must be >= 1");

    std::unique_ptr<Sampler> sampler;
    if (realtime_) {
        sampler = std::make_unique<Sampler>(backend_, opts_.interval_ms);
        sampler->start();
    }

    ProfileResult result;
    int completed = 0;
    try {
        for (int r = 0; r < opts_.repeats; ++r) {
            if (r > 0) clock_.advance_ns(int64_t(opts_.cooldown_ms * 1e6));
            if (realtime_) {
                // cooldown in real time
                if (r > 0)
                    std::this_thread::sleep_for(
                        std::chrono::duration<double, std::milli>(opts_.cooldown_ms));
            }
            auto [gen, window] = run_query(endpoint_, query, clock_);
            result.generation = std::move(gen);
            result.windows.push_back(window);
            ++completed;
        }
    } catch (const std::exception& e) {
        if (sampler) sampler->stop();
        throw OrchestratorError("profile_query: repeat " + std::to_string(completed + 1) +
                                "/" + std::to_string(opts_.repeats) + " failed after " +
                                std::to_string(completed) + " completed: " + e.what());
    }

    if (sampler) trace_ = sampler->stop();

    result.profile = profile_from_windows(trace_, result.windows, opts_);
    if (opts_.active_params) {
        result.profile.flops_per_request =
            estimate_flops(*opts_.active_params, result.generation.input_tokens,
                           result.generation.output_tokens);
    }
    return result;
}

}  // namespace wattprof
