#include "wattprof/telemetry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace wattprof {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // trim
        size_t a = field.find_first_not_of(" \t\r");
        size_t b = field.find_last_not_of(" \t\r");
        out.push_back(a == std::string::npos ? "" : field.substr(a, b - a + 1));
    }
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

std::optional<double> parse_opt(const std::string& s) {
    if (s.empty()) return std::nullopt;
    try {
        return std::stod(s);
    } catch (...) {
        throw ParseError("malformed numeric field: '" + s + "'");
    }
}

// Interpolated total power at time t, given bracketing samples.
double interp_power(const AggregateSample& a, const AggregateSample& b, int64_t t) {
    if (b.t_ns == a.t_ns) return a.total_power_watts;
    double f = double(t - a.t_ns) / double(b.t_ns - a.t_ns);
    return a.total_power_watts + f * (b.total_power_watts - a.total_power_watts);
}

}  // namespace

// ---------------------------------------------------------------------------
// SyntheticBackend

SyntheticBackend::SyntheticBackend(Config cfg)
    : cfg_(cfg), t_ns_(cfg.start_t_ns), rng_state_(cfg.seed ? cfg.seed : 0x9e3779b97f4a7c15ULL) {
    desc_.kind = BackendKind::Synthetic;
    std::ostringstream uri;
    uri << "synthetic:watts=" << cfg.power_watts << ",devices=" << cfg.devices
        << ",interval_ms=" << cfg.interval_ms << ",jitter=" << cfg.jitter_watts
        << ",seed=" << cfg.seed;
    desc_.source_uri = uri.str();
    desc_.capabilities = {Capability::Power, Capability::Memory};
    if (cfg.temperature_c) desc_.capabilities.insert(Capability::Temperature);
    if (cfg.with_energy_counter) desc_.capabilities.insert(Capability::EnergyCounter);
}

std::vector<PowerSample> SyntheticBackend::poll() {
    if (cfg_.budget > 0 && polls_ >= cfg_.budget) return {};
    ++polls_;
    // xorshift64*, enough for jitter
    auto next_u = [this]() {
        rng_state_ ^= rng_state_ >> 12;
        rng_state_ ^= rng_state_ << 25;
        rng_state_ ^= rng_state_ >> 27;
        return rng_state_ * 0x2545F4914F6CDD1DULL;
    };

    std::vector<PowerSample> out;
    out.reserve(cfg_.devices);
    double total_power = 0.0;
    for (int d = 0; d < cfg_.devices; ++d) {
        PowerSample s;
        s.t_ns = t_ns_;
        s.device_id = "synthetic" + std::to_string(d);
        double jitter = 0.0;
        if (cfg_.jitter_watts > 0.0) {
            double u = double(next_u() >> 11) * (1.0 / 9007199254740992.0);  // [0,1)
            jitter = (2.0 * u - 1.0) * cfg_.jitter_watts;
        }
        s.power_watts = std::max(0.0, cfg_.power_watts + jitter);
        s.memory_mb = cfg_.memory_mb;
        s.temperature_c = cfg_.temperature_c;
        total_power += s.power_watts;
        out.push_back(std::move(s));
    }
    if (cfg_.with_energy_counter) {
        if (last_t_ns_ >= 0)
            counter_j_ += total_power / cfg_.devices * double(t_ns_ - last_t_ns_) * 1e-9 * cfg_.devices;
        for (auto& s : out) s.energy_counter_j = counter_j_ / cfg_.devices;
    }
    last_t_ns_ = t_ns_;
    t_ns_ += int64_t(cfg_.interval_ms * 1e6);
    return out;
}

// ---------------------------------------------------------------------------
// ReplayBackend

ReplayBackend::ReplayBackend(const std::string& path) {
    desc_.kind = BackendKind::Replay;
    desc_.source_uri = path;

    std::ifstream in(path);
    if (!in) throw BackendUnavailable("cannot open replay trace: " + path);

    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty replay trace: " + path);
    // header: t_ns,device_id,power_watts,memory_mb,temperature_c[,energy_counter_j]
    bool saw_memory = false, saw_temp = false, saw_counter = false;
    std::vector<PowerSample> current;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto f = split_csv(line);
        if (f.size() < 3)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected >=3 fields");
        PowerSample s;
        try {
            s.t_ns = std::stoll(f[0]);
        } catch (...) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": bad timestamp");
        }
        s.device_id = f[1];
        auto p = parse_opt(f[2]);
        if (!p) throw ParseError(path + ":" + std::to_string(lineno) + ": power missing");
        s.power_watts = *p;
        if (s.power_watts < 0)
            throw ParseError(path + ":" + std::to_string(lineno) + ": negative power");
        if (f.size() > 3) s.memory_mb = parse_opt(f[3]);
        if (f.size() > 4) s.temperature_c = parse_opt(f[4]);
        if (f.size() > 5) s.energy_counter_j = parse_opt(f[5]);
        saw_memory |= s.memory_mb.has_value();
        saw_temp |= s.temperature_c.has_value();
        saw_counter |= s.energy_counter_j.has_value();

        if (!current.empty() && s.t_ns != current.front().t_ns) {
            if (s.t_ns < current.front().t_ns)
                throw ParseError(path + ":" + std::to_string(lineno) +
                                 ": timestamps not increasing");
            groups_.push_back(std::move(current));
            current.clear();
        }
        current.push_back(std::move(s));
    }
    if (!current.empty()) groups_.push_back(std::move(current));

    desc_.capabilities = {Capability::Power};
    if (saw_memory) desc_.capabilities.insert(Capability::Memory);
    if (saw_temp) desc_.capabilities.insert(Capability::Temperature);
    if (saw_counter) desc_.capabilities.insert(Capability::EnergyCounter);
}

std::vector<PowerSample> ReplayBackend::poll() {
    if (pos_ >= groups_.size()) return {};
    return groups_[pos_++];
}

// ---------------------------------------------------------------------------
// Vendor row parsers (adapters reuse these on matching hardware)

PowerSample parse_nvml_csv_row(const std::string& line, int64_t t_ns) {
    // index, power.draw [W], memory.used [MiB], temperature.gpu
    auto f = split_csv(line);
    if (f.size() < 2) throw ParseError("nvml row: expected >=2 fields: " + line);
    PowerSample s;
    s.t_ns = t_ns;
    s.device_id = "gpu" + f[0];
    auto p = parse_opt(f[1]);
    if (!p) throw ParseError("nvml row: power missing: " + line);
    s.power_watts = *p;
    if (f.size() > 2) s.memory_mb = parse_opt(f[2]);
    if (f.size() > 3) s.temperature_c = parse_opt(f[3]);
    return s;
}

PowerSample parse_rocm_csv_row(const std::string& line, int64_t t_ns) {
    auto f = split_csv(line);
    if (f.size() < 2) throw ParseError("rocm row: expected >=2 fields: " + line);
    PowerSample s;
    s.t_ns = t_ns;
    s.device_id = "gpu" + f[0];
    auto p = parse_opt(f[1]);
    if (!p) throw ParseError("rocm row: power missing: " + line);
    s.power_watts = *p;
    if (f.size() > 2) s.temperature_c = parse_opt(f[2]);
    if (f.size() > 3) s.memory_mb = parse_opt(f[3]);
    return s;
}

// ---------------------------------------------------------------------------
// aggregate_devices

AggregateSample aggregate_devices(std::span<const PowerSample> samples) {
    if (samples.empty()) throw TelemetryError("aggregate_devices: empty input");
    AggregateSample agg;
    agg.t_ns = samples.front().t_ns;
    double temp_sum = 0.0;
    int temp_n = 0;
    bool any_mem = false;
    double counter_sum = 0.0;
    int counter_n = 0;
    for (const auto& s : samples) {
        if (s.t_ns != agg.t_ns) throw TelemetryError("aggregate_devices: mixed timestamps");
        agg.total_power_watts += s.power_watts;
        if (s.memory_mb) {
            agg.total_memory_mb += *s.memory_mb;
            any_mem = true;
        }
        if (s.temperature_c) {
            temp_sum += *s.temperature_c;
            ++temp_n;
        }
        if (s.host_memory_mb) agg.host_memory_mb = s.host_memory_mb;
        if (s.energy_counter_j) {
            counter_sum += *s.energy_counter_j;
            ++counter_n;
        }
        ++agg.device_count;
    }
    if (!any_mem) agg.total_memory_mb = 0.0;
    if (temp_n > 0) agg.mean_temperature_c = temp_sum / temp_n;
    if (counter_n > 0) agg.energy_counter_j = counter_sum;
    return agg;
}

// ---------------------------------------------------------------------------
// Sampler

Sampler::Sampler(TelemetryBackend& backend, double interval_ms)
    : backend_(backend), interval_ms_(interval_ms) {
    trace_.nominal_interval_ms = interval_ms;
}

void Sampler::start() {
    stop_.store(false);
    thread_ = std::thread([this] { loop(); });
}

PowerTrace Sampler::stop() {
    stop_.store(true);
    if (thread_.joinable()) thread_.join();
    return std::move(trace_);
}

void Sampler::loop() {
    const auto interval = std::chrono::duration<double, std::milli>(interval_ms_);
    while (!stop_.load()) {
        std::vector<PowerSample> samples;
        try {
            samples = backend_.poll();
        } catch (const TelemetryError& e) {
            trace_.error_marker = true;
            trace_.error_message = e.what();
            return;  // trace closed with partial data
        }
        if (samples.empty()) {
            if (!backend_.realtime()) {
                trace_.error_marker = true;
                trace_.error_message = "replay source exhausted mid-run";
                return;
            }
            continue;
        }
        auto agg = aggregate_devices(samples);
        if (!trace_.samples.empty() && agg.t_ns <= trace_.samples.back().t_ns)
            continue;  // never back-date
        trace_.samples.push_back(agg);
        if (backend_.realtime()) std::this_thread::sleep_for(interval);
    }
}

PowerTrace Sampler::drain() {
    PowerTrace trace;
    trace.nominal_interval_ms = interval_ms_;
    for (;;) {
        std::vector<PowerSample> samples;
        try {
            samples = backend_.poll();
        } catch (const TelemetryError& e) {
            trace.error_marker = true;
            trace.error_message = e.what();
            break;
        }
        if (samples.empty()) break;
        trace.samples.push_back(aggregate_devices(samples));
    }
    return trace;
}

PowerTrace Sampler::poll_n(size_t n) {
    PowerTrace trace;
    trace.nominal_interval_ms = interval_ms_;
    for (size_t i = 0; i < n; ++i) {
        auto samples = backend_.poll();
        if (samples.empty()) {
            trace.error_marker = true;
            trace.error_message = "source exhausted";
            break;
        }
        trace.samples.push_back(aggregate_devices(samples));
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Energy integration

double integrate_energy(const PowerTrace& trace, int64_t start_ns, int64_t end_ns) {
    if (start_ns >= end_ns) throw TelemetryError("integrate_energy: empty window");
    const auto& s = trace.samples;
    if (s.empty()) throw EmptyWindowCoverage("integrate_energy: empty trace");

    // Clip to the sampled range; interpolate at boundaries inside it.
    int64_t lo = std::max(start_ns, s.front().t_ns);
    int64_t hi = std::min(end_ns, s.back().t_ns);
    if (lo >= hi) {
        // A single sample inside a degenerate overlap still counts as coverage
        // only if the window actually contains samples.
        throw EmptyWindowCoverage("integrate_energy: no sample overlaps window");
    }

    // First sample with t_ns >= lo.
    auto it = std::lower_bound(s.begin(), s.end(), lo,
                               [](const AggregateSample& a, int64_t t) { return a.t_ns < t; });

    double joules = 0.0;
    double prev_p;
    int64_t prev_t = lo;
    if (it->t_ns == lo) {
        prev_p = it->total_power_watts;
        ++it;
    } else {
        prev_p = interp_power(*(it - 1), *it, lo);
    }
    for (; it != s.end() && it->t_ns <= hi; ++it) {
        joules += 0.5 * (prev_p + it->total_power_watts) * double(it->t_ns - prev_t) * 1e-9;
        prev_t = it->t_ns;
        prev_p = it->total_power_watts;
    }
    if (prev_t < hi) {
        // hi falls between samples; it points at the first sample past hi.
        double p_hi = interp_power(*(it - 1), *it, hi);
        joules += 0.5 * (prev_p + p_hi) * double(hi - prev_t) * 1e-9;
    }
    return joules;
}

double energy_counter_delta(const PowerTrace& trace, int64_t start_ns, int64_t end_ns) {
    if (start_ns >= end_ns) throw TelemetryError("energy_counter_delta: empty window");
    const auto& s = trace.samples;

    const AggregateSample* first = nullptr;
    const AggregateSample* last = nullptr;
    double prev = -1.0;
    for (const auto& a : s) {
        if (a.t_ns < start_ns || a.t_ns >= end_ns) continue;
        if (!a.energy_counter_j) throw CounterAbsent("energy counter absent in window");
        if (prev >= 0.0 && *a.energy_counter_j < prev)
            throw CounterRegression("energy counter decreased mid-window");
        prev = *a.energy_counter_j;
        if (!first) first = &a;
        last = &a;
    }
    if (!first || first == last) throw CounterAbsent("fewer than two counter samples in window");
    return *last->energy_counter_j - *first->energy_counter_j;
}

std::vector<double> window_power_values(const PowerTrace& trace, int64_t start_ns,
                                        int64_t end_ns) {
    std::vector<double> vals;
    const auto& s = trace.samples;
    if (s.empty()) return vals;
    int64_t lo = std::max(start_ns, s.front().t_ns);
    int64_t hi = std::min(end_ns, s.back().t_ns);
    if (lo > hi) return vals;

    auto less_t = [](const AggregateSample& a, int64_t t) { return a.t_ns < t; };
    auto it = std::lower_bound(s.begin(), s.end(), lo, less_t);
    if (it != s.begin() && it->t_ns != lo)
        vals.push_back(interp_power(*(it - 1), *it, lo));
    for (auto jt = it; jt != s.end() && jt->t_ns <= hi; ++jt)
        vals.push_back(jt->total_power_watts);
    auto kt = std::lower_bound(s.begin(), s.end(), hi, less_t);
    if (kt != s.begin() && kt != s.end() && kt->t_ns != hi)
        vals.push_back(interp_power(*(kt - 1), *kt, hi));
    return vals;
}

// ---------------------------------------------------------------------------
// Backend factory: "replay:<path>", "synthetic:watts=...,devices=...,seed=..."

std::unique_ptr<TelemetryBackend> make_backend(const std::string& spec) {
    auto colon = spec.find(':');
    std::string kind = colon == std::string::npos ? spec : spec.substr(0, colon);
    std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);

    if (kind == "replay") {
        if (rest.empty()) throw BackendUnavailable("replay backend needs a file path");
        return std::make_unique<ReplayBackend>(rest);
    }
    if (kind == "synthetic") {
        SyntheticBackend::Config cfg;
        std::stringstream ss(rest);
        std::string kv;
        while (std::getline(ss, kv, ',')) {
            auto eq = kv.find('=');
            if (eq == std::string::npos) continue;
            std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
            if (k == "watts") cfg.power_watts = std::stod(v);
            else if (k == "devices") cfg.devices = std::stoi(v);
            else if (k == "interval_ms") cfg.interval_ms = std::stod(v);
            else if (k == "jitter") cfg.jitter_watts = std::stod(v);
            else if (k == "seed") cfg.seed = std::stoull(v);
            else if (k == "memory_mb") cfg.memory_mb = std::stod(v);
            else if (k == "counter") cfg.with_energy_counter = (v == "1" || v == "true");
            else if (k == "budget") cfg.budget = std::stoull(v);
            else throw BackendUnavailable("unknown synthetic parameter: " + k);
        }
        return std::make_unique<SyntheticBackend>(cfg);
    }
    throw BackendUnavailable("unknown telemetry backend: " + kind +
                             " (supported: replay, synthetic)");
}

}  // namespace wattprof
