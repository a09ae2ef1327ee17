// wattprof: profiling harness CLI.
//
// Subcommands: profile, evaluate, analyze, simulate, report.
// Exit codes:
//   0  success
//   2  config / usage error (bad flags, unreadable inputs, missing references)
//   3  endpoint / telemetry-backend failure
//   4  partial scoring (some records left unscored)
//
// Every output file embeds the resolved run configuration and an FNV-1a hash
// of its input bytes, so a result can always be traced back to the exact
// invocation that produced it. Auth tokens are read from named environment
// variables only; no flag ever carries a secret.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "wattprof/clock.hpp"
#include "wattprof/endpoint.hpp"
#include "wattprof/evaluation.hpp"
#include "wattprof/metrics.hpp"
#include "wattprof/orchestrator.hpp"
#include "wattprof/records.hpp"
#include "wattprof/routing.hpp"
#include "wattprof/telemetry.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
using namespace wattprof;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitConfig = 2;
constexpr int kExitEndpoint = 3;
constexpr int kExitPartial = 4;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- provenance

uint64_t fnv1a64(const std::string& bytes, uint64_t h = 1469598103934665603ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open input: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Hash of all declared inputs, chained in order with their names.
std::string input_hash(const std::vector<std::string>& paths) {
    uint64_t h = 1469598103934665603ULL;
    for (const auto& p : paths) {
        h = fnv1a64(fs::path(p).filename().string(), h);
        h = fnv1a64(read_file_bytes(p), h);
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a:%016llx", (unsigned long long)h);
    return buf;
}

ordered_json provenance(const std::string& subcommand, const ordered_json& config,
                        const std::vector<std::string>& inputs) {
    ordered_json p;
    p["tool"] = "wattprof";
    p["version"] = kVersion;
    p["subcommand"] = subcommand;
    p["config"] = config;
    p["input_hash"] = input_hash(inputs);
    return p;
}

std::string provenance_line(const ordered_json& prov) {
    ordered_json wrapper;
    wrapper["_provenance"] = prov;
    return wrapper.dump();
}

// Shortest round-trip decimal form; keeps CSV output byte-stable.
std::string num(double v) { return json(v).dump(); }
std::string num(std::optional<double> v) { return v ? num(*v) : std::string("absent"); }

void ensure_outdir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory: " + dir);
}

std::string asset_file(const char* name) {
    return std::string(WATTPROF_ASSET_DIR) + "/" + name;
}

// ------------------------------------------------------------------ profile

struct ProfileArgs {
    std::string queries, dataset_tag = "default";
    std::string endpoint, backend;
    std::string outdir;
    std::string hardware_id = "local";
    int repeats = 10;
    double interval_ms = 50.0;
    uint64_t seed = 0;
    double active_params = 0.0;  // 0 => look up the registry, absent if unknown
    bool require_ground_truth = false;
};

ordered_json profile_config(const ProfileArgs& a) {
    ordered_json c;
    c["queries"] = a.queries;
    c["dataset_tag"] = a.dataset_tag;
    c["endpoint"] = a.endpoint;  // spec names the auth env var, never a token
    c["backend"] = a.backend;
    c["out"] = fs::path(a.outdir).filename().string();
    c["hardware_id"] = a.hardware_id;
    c["repeats"] = a.repeats;
    c["interval_ms"] = a.interval_ms;
    c["seed"] = a.seed;
    c["require_ground_truth"] = a.require_ground_truth;
    return c;
}

int cmd_profile(const ProfileArgs& a) {
    ensure_outdir(a.outdir);
    IngestOptions iopts;
    iopts.require_ground_truth = a.require_ground_truth;
    IngestResult ingest = ingest_queries(a.queries, a.dataset_tag, iopts);
    for (const auto& [id, reason] : ingest.rejected)
        std::cerr << "skip " << id << ": " << reason << "\n";
    if (ingest.queries.empty()) throw ConfigError("no usable queries in " + a.queries);

    // Mock endpoints advance a simulated clock; everything else runs on the
    // host monotonic clock. The session anchors the clock at the trace start
    // for replay/synthetic backends, which makes those runs deterministic.
    SystemClock sys_clock;
    SimClock sim_clock;
    bool simulated = a.endpoint.rfind("mock:", 0) == 0;
    Clock& clock = simulated ? static_cast<Clock&>(sim_clock) : sys_clock;

    std::unique_ptr<ChatEndpoint> endpoint;
    std::unique_ptr<TelemetryBackend> backend;
    try {
        endpoint = make_endpoint(a.endpoint, clock);
        backend = make_backend(a.backend);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitEndpoint;
    }

    ProfileOptions popts;
    popts.repeats = a.repeats;
    popts.interval_ms = a.interval_ms;
    if (a.active_params > 0) {
        popts.active_params = a.active_params;
    } else {
        try {
            auto registry = load_param_registry(asset_file("model_params.csv"));
            auto it = registry.find(endpoint->model_id());
            if (it != registry.end()) popts.active_params = it->second;
        } catch (const MetricsError&) {
            // registry missing or malformed: flops stays absent
        }
    }

    HostInfo host = HostInfo::detect();
    std::vector<ProfilingRecord> records;
    std::string record_path = a.outdir + "/records.jsonl";
    try {
        ProfilingSession session(*endpoint, *backend, clock, popts);
        StatSummary total_watts{};
        {
            std::vector<double> powers;
            for (const auto& s : session.trace().samples) powers.push_back(s.total_power_watts);
            if (!powers.empty()) total_watts = summarize(powers);
        }
        size_t done = 0;
        for (const auto& q : ingest.queries) {
            ProfileResult res = session.profile_query(q);
            ProfilingRecord r;
            r.query_id = q.query_id;
            r.dataset_tag = q.dataset_tag;
            r.model_id = endpoint->model_id();
            r.hardware_id = a.hardware_id;
            r.input_tokens = res.generation.input_tokens;
            r.output_tokens = res.generation.output_tokens;
            r.tokens_approximate = res.generation.tokens_approximate;
            r.time_to_first_token_seconds = res.generation.ttft_s;
            r.total_query_seconds = res.generation.total_s;
            r.per_token_ms = res.generation.per_token_ms;
            r.throughput_tokens_per_sec = res.generation.throughput_tokens_per_sec;
            r.per_query_joules = res.profile.per_query_joules;
            r.joules_std = res.profile.joules_std;
            r.counter_joules = res.profile.counter_joules;
            r.per_query_watts = res.profile.watts;
            r.total_watts = total_watts;
            r.gpu_mb = res.profile.gpu_mb;
            r.cpu_mb = res.profile.cpu_mb;
            r.temperature = res.profile.temperature_c;
            r.flops_per_request = res.profile.flops_per_request;
            if (r.flops_per_request) r.macs_per_request = *r.flops_per_request / 2.0;
            r.initialization_duration_seconds = res.generation.init_duration_s;
            r.telemetry_error_band = backend->descriptor().error_band;
            if (res.generation.token_logprobs && !res.generation.token_logprobs->empty())
                r.perplexity = perplexity_from_logprobs(*res.generation.token_logprobs);
            r.reference_answer = q.reference_answer;
            if (q.reference_letter) r.reference_letter = std::string(1, *q.reference_letter);
            r.output_text = res.generation.output_text;
            r.decoding = q.decoding;
            r.thinking_enabled = q.thinking_enabled;
            r.repeats = res.profile.repeats;
            r.host = host;
            records.push_back(std::move(r));
            ++done;
            std::cerr << "[" << done << "/" << ingest.queries.size() << "] " << q.query_id
                      << " " << num(records.back().per_query_joules) << " J\n";
        }
    } catch (const std::exception& e) {
        // preserve whatever completed before surfacing the failure
        std::cerr << "error: " << e.what() << "\n";
        if (!records.empty()) {
            std::ofstream out(record_path);
            out << provenance_line(provenance("profile", profile_config(a), {a.queries})) << "\n";
            for (const auto& r : records) out << record_to_json_line(r) << "\n";
            std::cerr << records.size() << " completed record(s) preserved in " << record_path
                      << "\n";
        }
        return kExitEndpoint;
    }

    std::ofstream out(record_path);
    out << provenance_line(provenance("profile", profile_config(a), {a.queries})) << "\n";
    for (const auto& r : records) out << record_to_json_line(r) << "\n";
    out.close();

    double mean_j = 0.0, mean_ttft = 0.0;
    size_t ttft_n = 0;
    for (const auto& r : records) {
        mean_j += r.per_query_joules;
        if (r.time_to_first_token_seconds) {
            mean_ttft += *r.time_to_first_token_seconds;
            ++ttft_n;
        }
    }
    mean_j /= double(records.size());
    std::cout << "profiled " << records.size() << " queries; mean " << num(mean_j) << " J";
    if (ttft_n) std::cout << "; mean TTFT " << num(mean_ttft / double(ttft_n)) << " s";
    std::cout << "\nwrote " << record_path << "\n";
    return 0;
}

// ----------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string records;
    std::string mode = "mc";  // mc | pairwise | reference
    std::string judge;        // endpoint spec for judge modes
    std::string queries;      // question text for judge modes
    std::string baseline;     // pairwise frontier responses JSONL
    std::string outdir;
};

// query_id -> prompt text, from the same JSONL shape ingest reads.
std::map<std::string, std::string> load_prompts(const std::string& path) {
    std::map<std::string, std::string> out;
    IngestOptions opts;
    opts.drop_duplicates = false;
    for (const auto& q : ingest_queries(path, "eval", opts).queries) out[q.query_id] = q.prompt;
    return out;
}

std::map<std::string, std::string> load_baseline_responses(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open baseline responses: " + path);
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("query_id") || !j.contains("response"))
            throw ConfigError("baseline responses: each line needs query_id and response");
        out[j["query_id"].get<std::string>()] = j["response"].get<std::string>();
    }
    return out;
}

int cmd_evaluate(const EvaluateArgs& a) {
    ensure_outdir(a.outdir);
    std::vector<ProfilingRecord> records = read_records(a.records);
    if (records.empty()) throw ConfigError("no records in " + a.records);

    ordered_json cfg;
    cfg["records"] = a.records;
    cfg["mode"] = a.mode;
    if (!a.judge.empty()) cfg["judge"] = a.judge;
    if (!a.queries.empty()) cfg["queries"] = a.queries;
    if (!a.baseline.empty()) cfg["baseline"] = a.baseline;
    cfg["out"] = fs::path(a.outdir).filename().string();

    std::vector<std::string> inputs{a.records};

    size_t scored = 0, unscored = 0;
    if (a.mode == "mc") {
        for (auto& r : records) {
            if (!r.reference_letter || r.reference_letter->empty())
                throw ConfigError("record " + r.query_id +
                                  " has no reference_letter; mc mode needs references");
            McScore s = score_multiple_choice(r.output_text, (*r.reference_letter)[0]);
            r.success = s.success;
            r.success_method = "mc-exact";
            r.unparsed = s.unparsed;
            ++scored;
        }
    } else if (a.mode == "pairwise" || a.mode == "reference") {
        if (a.judge.empty()) throw ConfigError(a.mode + " mode needs --judge");
        if (a.queries.empty()) throw ConfigError(a.mode + " mode needs --queries for question text");
        SimClock clock;  // judge latency is irrelevant to scoring
        std::unique_ptr<ChatEndpoint> judge;
        try {
            judge = make_endpoint(a.judge, clock);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitEndpoint;
        }
        auto prompts = load_prompts(a.queries);
        inputs.push_back(a.queries);
        std::map<std::string, std::string> baseline;
        if (a.mode == "pairwise") {
            if (a.baseline.empty()) throw ConfigError("pairwise mode needs --baseline responses");
            baseline = load_baseline_responses(a.baseline);
            inputs.push_back(a.baseline);
        }
        for (auto& r : records) {
            auto pit = prompts.find(r.query_id);
            if (pit == prompts.end())
                throw ConfigError("no question text for record " + r.query_id);
            try {
                if (a.mode == "pairwise") {
                    auto bit = baseline.find(r.query_id);
                    if (bit == baseline.end())
                        throw ConfigError("no baseline response for record " + r.query_id);
                    JudgeConfig jc;
                    jc.judge_model_id = judge->model_id();
                    PairwiseResult res =
                        judge_pairwise(pit->second, bit->second, r.output_text, *judge, jc);
                    r.success = res.success;
                    r.success_method = "judge-pairwise";
                    r.judge_model_id = res.judge_model_id;
                    r.verdict = verdict_token(res.verdict);
                } else {
                    if (!r.reference_answer)
                        throw ConfigError("record " + r.query_id +
                                          " has no reference_answer; reference mode needs one");
                    r.success = judge_reference(pit->second, r.output_text, *r.reference_answer,
                                                *judge);
                    r.success_method = "judge-reference";
                    r.judge_model_id = judge->model_id();
                }
                ++scored;
            } catch (const Unscored& e) {
                std::cerr << "unscored " << r.query_id << ": " << e.what() << "\n";
                ++unscored;
            } catch (const EndpointError& e) {
                std::cerr << "unscored " << r.query_id << ": " << e.what() << "\n";
                ++unscored;
            }
        }
    } else {
        throw ConfigError("unknown evaluation mode: " + a.mode);
    }

    std::string out_path = a.outdir + "/records_labeled.jsonl";
    std::ofstream out(out_path);
    out << provenance_line(provenance("evaluate", cfg, inputs)) << "\n";
    for (const auto& r : records) out << record_to_json_line(r) << "\n";
    out.close();
    std::cout << "scored " << scored << ", unscored " << unscored << "\nwrote " << out_path
              << "\n";
    return unscored > 0 ? kExitPartial : 0;
}

// ------------------------------------------------------------------ analyze

struct AnalyzeArgs {
    std::vector<std::string> records;               // merged into one pool
    std::vector<std::string> eras;                  // label=path, ordered
    std::string gdp;                                // defaults to the bundled table
    std::string params;                             // defaults to the bundled registry
    std::string outdir;
};

MetricRow to_metric_row(const ProfilingRecord& r) {
    MetricRow m;
    m.accuracy = (r.success && *r.success) ? 1.0 : 0.0;
    m.avg_power_watts = r.per_query_watts.avg;
    m.joules = r.per_query_joules;
    m.perplexity = r.perplexity;
    return m;
}

std::string md_ci(const MeanCi& ci) {
    return num(ci.mean) + " ± " + num(ci.half_width);
}

int cmd_analyze(const AnalyzeArgs& a) {
    ensure_outdir(a.outdir);
    std::vector<ProfilingRecord> all;
    for (const auto& path : a.records) {
        auto batch = read_records(path);
        all.insert(all.end(), batch.begin(), batch.end());
    }
    std::vector<const ProfilingRecord*> labeled;
    for (const auto& r : all)
        if (r.success) labeled.push_back(&r);
    if (labeled.empty()) throw ConfigError("no labeled records to analyze");

    ordered_json cfg;
    cfg["records"] = a.records;
    if (!a.eras.empty()) cfg["eras"] = a.eras;
    cfg["gdp"] = a.gdp;
    cfg["params"] = a.params;
    cfg["out"] = fs::path(a.outdir).filename().string();

    std::vector<std::string> inputs = a.records;
    for (const auto& era : a.eras) {
        auto eq = era.find('=');
        if (eq == std::string::npos) throw ConfigError("--era wants label=path: " + era);
        inputs.push_back(era.substr(eq + 1));
    }
    ordered_json prov = provenance("analyze", cfg, inputs);

    // per (model, hardware) efficiency
    std::map<std::pair<std::string, std::string>, std::vector<MetricRow>> groups;
    for (const auto* r : labeled)
        groups[{r->model_id, r->hardware_id}].push_back(to_metric_row(*r));

    std::ostringstream csv;
    csv << "# " << prov.dump() << "\n";
    csv << "model_id,hardware_id,n,mean_accuracy,accuracy_ci_half,mean_power_w,power_ci_half,"
           "mean_joules,energy_ci_half,apw_per_w,apj_per_j,ppw_per_w,ppj_per_j,"
           "mean_perplexity,perplexity_excluded\n";
    std::ostringstream md;
    md << "# Analysis\n\n## Efficiency by model and hardware\n\n"
       << "| model | hardware | n | accuracy | power (W) | energy (J) | APW (1/W) | APJ (1/J) | "
          "PPW (1/W) | PPJ (1/J) |\n"
       << "|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& [key, rows] : groups) {
        EfficiencyReport rep = efficiency_report(rows);
        csv << key.first << "," << key.second << "," << rep.n << "," << num(rep.mean_accuracy)
            << "," << num(rep.accuracy_ci.half_width) << "," << num(rep.mean_power_watts) << ","
            << num(rep.power_ci.half_width) << "," << num(rep.mean_energy_joules) << ","
            << num(rep.energy_ci.half_width) << "," << num(rep.apw) << "," << num(rep.apj) << ","
            << num(rep.ppw) << "," << num(rep.ppj) << "," << num(rep.mean_perplexity) << ","
            << rep.perplexity_excluded << "\n";
        md << "| " << key.first << " | " << key.second << " | " << rep.n << " | "
           << md_ci(rep.accuracy_ci) << " | " << md_ci(rep.power_ci) << " | "
           << md_ci(rep.energy_ci) << " | " << num(rep.apw) << " | " << num(rep.apj) << " | "
           << num(rep.ppw) << " | " << num(rep.ppj) << " |\n";
    }

    // coverage over the pooled query x model matrix
    std::set<std::string> model_set;
    for (const auto* r : labeled) model_set.insert(r->model_id);
    std::vector<std::string> models(model_set.begin(), model_set.end());
    std::map<std::string, size_t> model_idx;
    for (size_t i = 0; i < models.size(); ++i) model_idx[models[i]] = i;
    std::map<std::string, std::vector<bool>> solved;  // query -> per-model success
    for (const auto* r : labeled) {
        auto& row = solved[r->query_id];
        if (row.empty()) row.assign(models.size(), false);
        if (*r->success) row[model_idx[r->model_id]] = true;
    }
    std::vector<std::vector<bool>> matrix;
    for (const auto& [qid, row] : solved) matrix.push_back(row);
    std::vector<size_t> all_idx(models.size());
    for (size_t i = 0; i < models.size(); ++i) all_idx[i] = i;
    md << "\n## Coverage\n\n| subset | coverage |\n|---|---|\n";
    for (size_t i = 0; i < models.size(); ++i) {
        std::vector<size_t> one{i};
        md << "| " << models[i] << " | " << num(coverage(matrix, one)) << " |\n";
    }
    md << "| best-of-all (" << models.size() << " models) | " << num(coverage(matrix, all_idx))
       << " |\n";

    // difficulty histogram (needs the parameter registry)
    std::map<std::string, double> registry;
    try {
        registry = load_param_registry(a.params);
    } catch (const MetricsError& e) {
        throw ConfigError(e.what());
    }
    std::map<int, size_t> difficulty_hist;
    for (const auto& [qid, row] : solved) {
        std::vector<double> solver_params;
        for (size_t i = 0; i < models.size(); ++i) {
            if (!row[i]) continue;
            auto it = registry.find(models[i]);
            if (it != registry.end()) solver_params.push_back(it->second);
        }
        ++difficulty_hist[difficulty_label(solver_params)];
    }
    md << "\n## Difficulty histogram\n\n| level | queries |\n|---|---|\n";
    for (int level = 1; level <= 5; ++level)
        md << "| " << level << " | " << difficulty_hist[level] << " |\n";

    // GDP weighting over categorized records, when any carry a category
    std::map<std::string, std::pair<double, double>> cat_acc;  // category -> (hits, n)
    for (const auto* r : labeled) {
        if (!r->category) continue;
        auto& [hits, n] = cat_acc[*r->category];
        hits += *r->success ? 1.0 : 0.0;
        n += 1.0;
    }
    if (!cat_acc.empty()) {
        GdpTable gdp;
        try {
            gdp = load_gdp_table(a.gdp);
        } catch (const MetricsError& e) {
            throw ConfigError(e.what());
        }
        std::map<std::string, double> per_cat;
        for (const auto& [cat, hn] : cat_acc) per_cat[cat] = hn.first / hn.second;
        GdpWeightedAccuracy g;
        try {
            g = gdp_weighted_accuracy(per_cat, gdp);
        } catch (const MetricsError& e) {
            throw ConfigError(e.what());
        }
        md << "\n## GDP-weighted accuracy\n\n| weighted accuracy | addressable GDP ($T) |\n"
           << "|---|---|\n| " << num(g.weighted_accuracy) << " | "
           << num(g.addressable_gdp_trillions) << " |\n";
    }

    // longitudinal gains when labeled eras are supplied
    if (!a.eras.empty()) {
        std::vector<std::pair<std::string, double>> series;
        for (const auto& era : a.eras) {
            auto eq = era.find('=');
            std::string label = era.substr(0, eq);
            auto era_records = read_records(era.substr(eq + 1));
            std::vector<MetricRow> rows;
            for (const auto& r : era_records)
                if (r.success) rows.push_back(to_metric_row(r));
            if (rows.empty()) throw ConfigError("era " + label + " has no labeled records");
            series.emplace_back(label, accuracy_per_watt(rows));
        }
        YoyGains gains = yoy_gains(series);
        md << "\n## Efficiency gains across eras\n\n| era | APW (1/W) | gain vs previous |\n"
           << "|---|---|---|\n";
        for (size_t i = 0; i < series.size(); ++i) {
            md << "| " << series[i].first << " | " << num(series[i].second) << " | ";
            md << (i == 0 ? std::string("–") : num(gains.step_ratios[i - 1].second) + "×");
            md << " |\n";
        }
        md << "\ncumulative gain: " << num(gains.cumulative) << "×\n";
    }

    std::ofstream csv_out(a.outdir + "/analysis.csv");
    csv_out << csv.str();
    std::ofstream md_out(a.outdir + "/analysis.md");
    md_out << "<!-- " << prov.dump() << " -->\n\n" << md.str();
    std::cout << "analyzed " << labeled.size() << " labeled records across " << groups.size()
              << " group(s)\nwrote " << a.outdir << "/analysis.csv and analysis.md\n";
    return 0;
}

// ----------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string trace, pool;
    std::string strategies = "oracle,p-accurate";
    std::vector<double> ps;  // defaults to {0.6, 0.8}
    bool monte_carlo = false;
    uint64_t seed = 0;
    std::string outdir;
};

int cmd_simulate(const SimulateArgs& a) {
    ensure_outdir(a.outdir);
    ModelPool pool;
    WorkloadTrace trace;
    TraceValidationSummary summary;
    try {
        pool = load_model_pool(a.pool);
        trace = validate_trace(a.trace, pool, &summary);
    } catch (const RoutingError& e) {
        throw ConfigError(e.what());
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }

    std::vector<RoutingStrategy> strategies;
    std::vector<double> ps = a.ps.empty() ? std::vector<double>{0.6, 0.8} : a.ps;
    std::stringstream names(a.strategies);
    std::string name;
    while (std::getline(names, name, ',')) {
        if (name == "oracle") {
            strategies.emplace_back(Oracle{});
        } else if (name == "p-accurate") {
            for (double p : ps) strategies.emplace_back(PAccurate{p, a.seed, !a.monte_carlo});
        } else if (name == "cloud-only" || name.empty()) {
            // the baseline always runs
        } else {
            throw ConfigError("unknown strategy: " + name);
        }
    }
    if (strategies.empty()) throw ConfigError("strategy list is empty");

    ordered_json cfg;
    cfg["trace"] = a.trace;
    cfg["pool"] = a.pool;
    cfg["strategies"] = a.strategies;
    cfg["p"] = ps;
    cfg["monte_carlo"] = a.monte_carlo;
    cfg["seed"] = a.seed;
    cfg["out"] = fs::path(a.outdir).filename().string();
    ordered_json prov = provenance("simulate", cfg, {a.trace, a.pool});

    std::vector<SavingsReport> reports = simulate_all(trace, strategies, pool);

    ordered_json out;
    out["_provenance"] = prov;
    out["trace"] = {{"n", summary.n},
                    {"duration_s", summary.duration_s},
                    {"serviceable_fraction", summary.serviceable_fraction}};
    out["strategies"] = ordered_json::array();
    for (const auto& r : reports) {
        ordered_json s;
        s["strategy"] = r.strategy;
        s["totals"] = {{"energy_j", r.totals.energy_j},
                       {"flops", r.totals.flops},
                       {"cost_usd", r.totals.cost_usd}};
        if (r.strategy != "cloud-only") {
            ordered_json sav;
            sav["energy"] = r.savings_vs_baseline.energy ? json(*r.savings_vs_baseline.energy)
                                                         : json(nullptr);
            sav["flops"] = r.savings_vs_baseline.flops ? json(*r.savings_vs_baseline.flops)
                                                       : json(nullptr);
            sav["cost"] = r.savings_vs_baseline.cost ? json(*r.savings_vs_baseline.cost)
                                                     : json(nullptr);
            s["savings_vs_baseline"] = sav;
        }
        out["strategies"].push_back(s);
    }
    std::ofstream js(a.outdir + "/simulation_summary.json");
    js << out.dump(2) << "\n";

    std::ofstream series(a.outdir + "/simulation_series.csv");
    series << "# " << prov.dump() << "\n";
    series << "strategy,t_ns,cum_energy_j,cum_flops,cum_cost_usd\n";
    for (const auto& r : reports)
        for (const auto& [t, totals] : r.series)
            series << r.strategy << "," << t << "," << num(totals.energy_j) << ","
                   << num(totals.flops) << "," << num(totals.cost_usd) << "\n";

    for (const auto& r : reports) {
        std::cout << r.strategy << ": energy " << num(r.totals.energy_j) << " J";
        if (r.strategy != "cloud-only" && r.savings_vs_baseline.energy)
            std::cout << " (" << num(*r.savings_vs_baseline.energy * 100.0) << "% saved)";
        std::cout << "\n";
    }
    std::cout << "wrote " << a.outdir << "/simulation_summary.json and simulation_series.csv\n";
    return 0;
}

// ------------------------------------------------------------------- report

struct ReportArgs {
    std::string outdir;
};

int cmd_report(const ReportArgs& a) {
    ensure_outdir(a.outdir);
    std::string analysis_md = a.outdir + "/analysis.md";
    std::string analysis_csv = a.outdir + "/analysis.csv";
    std::string sim_json = a.outdir + "/simulation_summary.json";
    std::string sim_csv = a.outdir + "/simulation_series.csv";

    ordered_json cfg;
    cfg["out"] = fs::path(a.outdir).filename().string();
    std::vector<std::string> inputs;
    for (const auto& p : {analysis_md, sim_json})
        if (fs::exists(p)) inputs.push_back(p);
    ordered_json prov = provenance("report", cfg, inputs);

    std::vector<std::string> missing;
    std::ostringstream md;
    md << "# wattprof report\n\n";
    md << "provenance: `" << prov.dump() << "`\n\n";

    if (fs::exists(analysis_md)) {
        md << read_file_bytes(analysis_md) << "\n";
    } else {
        missing.push_back("analysis.md (run `wattprof analyze`)");
        md << "## Analysis\n\nMISSING: analysis.md\n\n";
    }

    md << "## Routing simulation\n\n";
    if (fs::exists(sim_json)) {
        json sim = json::parse(read_file_bytes(sim_json));
        md << "| strategy | energy (J) | cost ($) | energy saved | flops saved | cost saved |\n"
           << "|---|---|---|---|---|---|\n";
        for (const auto& s : sim["strategies"]) {
            md << "| " << s["strategy"].get<std::string>() << " | "
               << num(s["totals"]["energy_j"].get<double>()) << " | "
               << num(s["totals"]["cost_usd"].get<double>()) << " | ";
            if (s.contains("savings_vs_baseline")) {
                const auto& sv = s["savings_vs_baseline"];
                auto cell = [&](const char* k) {
                    return sv[k].is_null() ? std::string("absent")
                                           : num(sv[k].get<double>());
                };
                md << cell("energy") << " | " << cell("flops") << " | " << cell("cost") << " |\n";
            } else {
                md << "baseline | baseline | baseline |\n";
            }
        }
        md << "\n";
    } else {
        missing.push_back("simulation_summary.json (run `wattprof simulate`)");
        md << "MISSING: simulation_summary.json\n\n";
    }

    md << "## Plot data\n\n";
    for (const auto& p : {analysis_csv, sim_csv}) {
        std::string name = fs::path(p).filename().string();
        if (fs::exists(p))
            md << "- [" << name << "](" << name << ")\n";
        else
            md << "- " << name << ": MISSING\n";
    }

    if (!missing.empty()) {
        md << "\n## Missing inputs\n\n";
        for (const auto& m : missing) md << "- " << m << "\n";
    }

    std::ofstream out(a.outdir + "/report.md");
    out << md.str();
    std::cout << "wrote " << a.outdir << "/report.md";
    if (!missing.empty()) std::cout << " (" << missing.size() << " missing input(s) listed)";
    std::cout << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wattprof: inference efficiency profiling harness"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    // flags > environment > config file; the resolved values are echoed into
    // every output file
    app.set_config("--config")->envname("WATTPROF_CONFIG");

    ProfileArgs pa;
    auto* profile = app.add_subcommand("profile", "run queries and record energy/latency");
    profile->add_option("--queries", pa.queries, "query JSONL or plain-text file")->required();
    profile->add_option("--dataset-tag", pa.dataset_tag, "dataset tag stored on records");
    profile->add_option("--endpoint", pa.endpoint,
                        "endpoint spec: mock:<script.json> or http(s)://host[,model=...,auth_env=...]")
        ->envname("WATTPROF_ENDPOINT")
        ->required();
    profile->add_option("--backend", pa.backend,
                        "telemetry spec: replay:<csv>, synthetic[:k=v,...], nvml, rocm")
        ->envname("WATTPROF_BACKEND")
        ->required();
    profile->add_option("-o,--out", pa.outdir, "output directory")->required();
    profile->add_option("--hardware-id", pa.hardware_id, "hardware label stored on records");
    profile->add_option("--repeats", pa.repeats, "timing repeats per query")
        ->envname("WATTPROF_REPEATS");
    profile->add_option("--interval-ms", pa.interval_ms, "telemetry sampling interval")
        ->envname("WATTPROF_INTERVAL_MS");
    profile->add_option("--seed", pa.seed, "seed echoed into provenance")
        ->envname("WATTPROF_SEED");
    profile->add_option("--active-params", pa.active_params,
                        "active parameter count for flops estimates (overrides the registry)");
    profile->add_flag("--require-ground-truth", pa.require_ground_truth,
                      "reject queries without references at ingest");

    EvaluateArgs ea;
    auto* evaluate = app.add_subcommand("evaluate", "attach correctness labels to records");
    evaluate->add_option("--records", ea.records, "record file from profile")->required();
    evaluate->add_option("--mode", ea.mode, "mc | pairwise | reference");
    evaluate->add_option("--judge", ea.judge, "judge endpoint spec (judge modes)")
        ->envname("WATTPROF_JUDGE");
    evaluate->add_option("--queries", ea.queries, "query file with question text (judge modes)");
    evaluate->add_option("--baseline", ea.baseline,
                         "frontier responses JSONL: {query_id, response} (pairwise)");
    evaluate->add_option("-o,--out", ea.outdir, "output directory")->required();

    AnalyzeArgs aa;
    aa.gdp = asset_file("gdp_categories.csv");
    aa.params = asset_file("model_params.csv");
    auto* analyze = app.add_subcommand("analyze", "efficiency, coverage, difficulty, GDP tables");
    analyze->add_option("--records", aa.records, "labeled record file(s); merged")->required();
    analyze->add_option("--era", aa.eras, "label=path labeled-era record files, oldest first");
    analyze->add_option("--gdp", aa.gdp, "category,gdp_trillions CSV");
    analyze->add_option("--params", aa.params, "model_id,active_params CSV");
    analyze->add_option("-o,--out", aa.outdir, "output directory")->required();

    SimulateArgs sa;
    auto* simulate = app.add_subcommand("simulate", "replay a workload trace through routers");
    simulate->add_option("--trace", sa.trace, "workload trace CSV")->required();
    simulate->add_option("--pool", sa.pool, "model pool JSON")->required();
    simulate->add_option("--strategies", sa.strategies, "comma list: oracle,p-accurate");
    simulate->add_option("--p", sa.ps, "p values for p-accurate (default 0.6 0.8)");
    simulate->add_flag("--mc", sa.monte_carlo, "Monte-Carlo draws instead of expected value");
    simulate->add_option("--seed", sa.seed, "Monte-Carlo seed")->envname("WATTPROF_SEED");
    simulate->add_option("-o,--out", sa.outdir, "output directory")->required();

    ReportArgs ra;
    auto* report = app.add_subcommand("report", "assemble the markdown report bundle");
    report->add_option("-o,--out", ra.outdir, "directory holding analyze/simulate outputs")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (profile->parsed()) return cmd_profile(pa);
        if (evaluate->parsed()) return cmd_evaluate(ea);
        if (analyze->parsed()) return cmd_analyze(aa);
        if (simulate->parsed()) return cmd_simulate(sa);
        if (report->parsed()) return cmd_report(ra);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const MetricsError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const RoutingError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const EndpointError& e) {
        std::cerr << "endpoint error: " << e.what() << "\n";
        return kExitEndpoint;
    } catch (const TelemetryError& e) {
        std::cerr << "telemetry error: " << e.what() << "\n";
        return kExitEndpoint;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitConfig;
}
