#include "wattprof/records.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "wattprof/assets.hpp"

#ifdef __linux__
#include <sys/utsname.h>
#include <unistd.h>
#endif

namespace wattprof {

using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// HostInfo

HostInfo HostInfo::detect() {
    HostInfo h;
    h.cpu_count = int(std::thread::hardware_concurrency());
#ifdef __linux__
    utsname u{};
    if (uname(&u) == 0) {
        h.os_name = u.sysname;
        h.os_version = u.version;
        h.kernel_version = u.release;
        h.host_name = u.nodename;
    }
    std::ifstream cpuinfo("/proc/cpuinfo");
    std::string line;
    while (std::getline(cpuinfo, line)) {
        if (line.rfind("model name", 0) == 0) {
            auto colon = line.find(':');
            if (colon != std::string::npos) {
                h.cpu_brand = line.substr(colon + 1);
                size_t a = h.cpu_brand.find_first_not_of(' ');
                if (a != std::string::npos) h.cpu_brand = h.cpu_brand.substr(a);
            }
            break;
        }
    }
#endif
    return h;
}

// ---------------------------------------------------------------------------
// Record serialization

namespace {

ojson stat_to_json(const StatSummary& s) {
    return ojson{{"avg", s.avg}, {"max", s.max}, {"median", s.median}, {"min", s.min}};
}

StatSummary stat_from_json(const ojson& j) {
    StatSummary s;
    s.avg = j.at("avg").get<double>();
    s.max = j.at("max").get<double>();
    s.median = j.at("median").get<double>();
    s.min = j.at("min").get<double>();
    return s;
}

template <typename T>
void put_opt(ojson& j, const char* key, const std::optional<T>& v) {
    if (v) j[key] = *v;
}

}  // namespace

std::string record_to_json_line(const ProfilingRecord& r) {
    ojson j;
    j["query_id"] = r.query_id;
    j["dataset_tag"] = r.dataset_tag;
    j["model_id"] = r.model_id;
    j["hardware_id"] = r.hardware_id;
    j["input"] = r.input_tokens;
    j["output"] = r.output_tokens;
    j["tokens_approximate"] = r.tokens_approximate;
    put_opt(j, "time_to_first_token_seconds", r.time_to_first_token_seconds);
    j["total_query_seconds"] = r.total_query_seconds;
    j["per_token_ms"] = r.per_token_ms;
    j["throughput_tokens_per_sec"] = r.throughput_tokens_per_sec;
    j["per_query_joules"] = r.per_query_joules;
    j["joules_std"] = r.joules_std;
    put_opt(j, "counter_joules", r.counter_joules);
    j["per_query_watts"] = stat_to_json(r.per_query_watts);
    j["total_watts"] = stat_to_json(r.total_watts);
    j["gpu_mb"] = stat_to_json(r.gpu_mb);
    if (r.cpu_mb) j["cpu_mb"] = stat_to_json(*r.cpu_mb);
    if (r.temperature) j["temperature"] = stat_to_json(*r.temperature);
    put_opt(j, "flops_per_request", r.flops_per_request);
    put_opt(j, "macs_per_request", r.macs_per_request);
    put_opt(j, "initialization_duration_seconds", r.initialization_duration_seconds);
    j["telemetry_error_band"] = r.telemetry_error_band;
    put_opt(j, "success", r.success);
    put_opt(j, "success_method", r.success_method);
    put_opt(j, "judge_model_id", r.judge_model_id);
    put_opt(j, "verdict", r.verdict);
    put_opt(j, "unparsed", r.unparsed);
    put_opt(j, "perplexity", r.perplexity);
    put_opt(j, "category", r.category);
    j["output_text"] = r.output_text;
    put_opt(j, "reference_answer", r.reference_answer);
    put_opt(j, "reference_letter", r.reference_letter);
    j["temperature_setting"] = r.decoding.temperature;
    j["top_p"] = r.decoding.top_p;
    j["top_k"] = r.decoding.top_k;
    j["min_p"] = r.decoding.min_p;
    j["max_output_tokens"] = r.decoding.max_output_tokens;
    put_opt(j, "repetition_penalty", r.decoding.repetition_penalty);
    put_opt(j, "length_penalty", r.decoding.length_penalty);
    j["thinking_enabled"] = r.thinking_enabled;
    j["batch_size"] = r.batch_size;
    j["repeats"] = r.repeats;
    j["cpu_brand"] = r.host.cpu_brand;
    j["host_name"] = r.host.host_name;
    j["os_name"] = r.host.os_name;
    j["os_version"] = r.host.os_version;
    j["kernel_version"] = r.host.kernel_version;
    j["cpu_count"] = r.host.cpu_count;
    return j.dump();
}

namespace {

const char* kRequiredFields[] = {
    "query_id",  "dataset_tag", "model_id",          "hardware_id",
    "input",     "output",      "total_query_seconds", "per_query_joules",
    "per_query_watts", "batch_size",
};

}  // namespace

ProfilingRecord record_from_json_line(const std::string& line, int lineno) {
    ojson j = ojson::parse(line, nullptr, false);
    if (j.is_discarded())
        throw SchemaViolation("line " + std::to_string(lineno) + ": not valid JSON");
    for (const char* f : kRequiredFields) {
        if (!j.contains(f))
            throw SchemaViolation("line " + std::to_string(lineno) +
                                  ": missing required field '" + std::string(f) + "'");
    }
    ProfilingRecord r;
    r.query_id = j["query_id"].get<std::string>();
    r.dataset_tag = j["dataset_tag"].get<std::string>();
    r.model_id = j["model_id"].get<std::string>();
    r.hardware_id = j["hardware_id"].get<std::string>();
    r.input_tokens = j["input"].get<int64_t>();
    r.output_tokens = j["output"].get<int64_t>();
    r.tokens_approximate = j.value("tokens_approximate", false);
    if (j.contains("time_to_first_token_seconds"))
        r.time_to_first_token_seconds = j["time_to_first_token_seconds"].get<double>();
    r.total_query_seconds = j["total_query_seconds"].get<double>();
    r.per_token_ms = j.value("per_token_ms", 0.0);
    r.throughput_tokens_per_sec = j.value("throughput_tokens_per_sec", 0.0);
    r.per_query_joules = j["per_query_joules"].get<double>();
    r.joules_std = j.value("joules_std", 0.0);
    if (j.contains("counter_joules")) r.counter_joules = j["counter_joules"].get<double>();
    r.per_query_watts = stat_from_json(j["per_query_watts"]);
    if (j.contains("total_watts")) r.total_watts = stat_from_json(j["total_watts"]);
    if (j.contains("gpu_mb")) r.gpu_mb = stat_from_json(j["gpu_mb"]);
    if (j.contains("cpu_mb")) r.cpu_mb = stat_from_json(j["cpu_mb"]);
    if (j.contains("temperature")) r.temperature = stat_from_json(j["temperature"]);
    if (j.contains("flops_per_request")) r.flops_per_request = j["flops_per_request"].get<double>();
    if (j.contains("macs_per_request")) r.macs_per_request = j["macs_per_request"].get<double>();
    if (j.contains("initialization_duration_seconds"))
        r.initialization_duration_seconds = j["initialization_duration_seconds"].get<double>();
    r.telemetry_error_band = j.value("telemetry_error_band", 0.0);
    if (j.contains("success")) r.success = j["success"].get<bool>();
    if (j.contains("success_method")) r.success_method = j["success_method"].get<std::string>();
    if (j.contains("judge_model_id")) r.judge_model_id = j["judge_model_id"].get<std::string>();
    if (j.contains("verdict")) r.verdict = j["verdict"].get<std::string>();
    if (j.contains("unparsed")) r.unparsed = j["unparsed"].get<bool>();
    if (j.contains("perplexity")) r.perplexity = j["perplexity"].get<double>();
    if (j.contains("category")) r.category = j["category"].get<std::string>();
    r.output_text = j.value("output_text", std::string());
    if (j.contains("reference_answer")) r.reference_answer = j["reference_answer"].get<std::string>();
    if (j.contains("reference_letter")) r.reference_letter = j["reference_letter"].get<std::string>();
    r.decoding.temperature = j.value("temperature_setting", 0.6);
    r.decoding.top_p = j.value("top_p", 0.95);
    r.decoding.top_k = j.value("top_k", 20);
    r.decoding.min_p = j.value("min_p", 0.0);
    r.decoding.max_output_tokens = j.value("max_output_tokens", 32768);
    if (j.contains("repetition_penalty")) r.decoding.repetition_penalty = j["repetition_penalty"].get<double>();
    if (j.contains("length_penalty")) r.decoding.length_penalty = j["length_penalty"].get<double>();
    r.thinking_enabled = j.value("thinking_enabled", false);
    r.batch_size = j["batch_size"].get<int>();
    r.repeats = j.value("repeats", 0);
    r.host.cpu_brand = j.value("cpu_brand", std::string());
    r.host.host_name = j.value("host_name", std::string());
    r.host.os_name = j.value("os_name", std::string());
    r.host.os_version = j.value("os_version", std::string());
    r.host.kernel_version = j.value("kernel_version", std::string());
    r.host.cpu_count = j.value("cpu_count", 0);
    return r;
}

size_t write_records(const std::vector<ProfilingRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (const auto& r : records) out << record_to_json_line(r) << '\n';
    if (!out) throw IoError("write failed: " + path);
    return records.size();
}

std::vector<ProfilingRecord> read_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::vector<ProfilingRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;  // tolerate trailing partial/blank lines
        if (line.rfind("{\"_provenance\"", 0) == 0) continue;  // run-config echo header
        out.push_back(record_from_json_line(line, lineno));
    }
    return out;
}

void export_records_csv(const std::vector<ProfilingRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "query_id,dataset_tag,model_id,hardware_id,input,output,total_query_seconds,"
           "per_query_joules,watts_avg,success,perplexity,category\n";
    out << std::setprecision(17);
    for (const auto& r : records) {
        out << r.query_id << ',' << r.dataset_tag << ',' << r.model_id << ','
            << r.hardware_id << ',' << r.input_tokens << ',' << r.output_tokens << ','
            << r.total_query_seconds << ',' << r.per_query_joules << ','
            << r.per_query_watts.avg << ',';
        if (r.success) out << (*r.success ? 1 : 0);
        out << ',';
        if (r.perplexity) out << *r.perplexity;
        out << ',';
        if (r.category) out << *r.category;
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Query ingestion

IngestResult ingest_queries(const std::string& path, const std::string& dataset_tag,
                            const IngestOptions& opts) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open query file: " + path);

    IngestResult result;
    std::set<std::string> seen_prompts;
    std::set<std::string> seen_ids;
    bool jsonl = path.size() > 6 && path.substr(path.size() - 6) == ".jsonl";

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        QuerySpec q;
        q.dataset_tag = dataset_tag;
        if (jsonl) {
            auto j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded())
                throw IoError(path + ":" + std::to_string(lineno) + ": not valid JSON");
            q.query_id = j.value("query_id", dataset_tag + "-" + std::to_string(lineno));
            q.prompt = j.value("prompt", std::string());
            if (j.contains("reference_answer"))
                q.reference_answer = j["reference_answer"].get<std::string>();
            if (j.contains("reference_letter")) {
                std::string rl = j["reference_letter"].get<std::string>();
                if (!rl.empty()) q.reference_letter = rl[0];
            }
            if (j.contains("thinking_enabled"))
                q.thinking_enabled = j["thinking_enabled"].get<bool>();
        } else {
            q.query_id = dataset_tag + "-" + std::to_string(lineno);
            q.prompt = line;
        }

        if (!seen_ids.insert(q.query_id).second)
            throw IoError(path + ":" + std::to_string(lineno) + ": duplicate query id " + q.query_id);
        if (q.prompt.empty()) {
            result.rejected.emplace_back(q.query_id, "empty-prompt");
            continue;
        }
        if (opts.require_ground_truth && !q.reference_answer && !q.reference_letter) {
            result.rejected.emplace_back(q.query_id, "missing-ground-truth");
            continue;
        }
        if (q.prompt.size() > opts.max_prompt_chars) {
            result.rejected.emplace_back(q.query_id, "length");
            continue;
        }
        if (opts.drop_duplicates && !seen_prompts.insert(q.prompt).second) {
            result.rejected.emplace_back(q.query_id, "duplicate");
            continue;
        }
        result.queries.push_back(std::move(q));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Category annotation

const std::vector<std::string>& category_vocabulary() {
    static const std::vector<std::string> vocab = {
        "Office and administrative support",
        "Transportation and material moving",
        "Sales and related",
        "Food preparation and serving related",
        "General management",
        "Business and financial operations",
        "Healthcare practitioners and technical",
        "Production services",
        "Education instruction and library",
        "Healthcare support",
        "Construction and extraction",
        "Installation, maintenance, and repair",
        "Computer and mathematical",
        "Building grounds cleaning and maintenance",
        "Protective service",
        "Personal care and service",
        "Architecture and engineering",
        "Community and social service",
        "Arts, design, sports, entertainment, and media",
        "Life, physical, and social science",
        "Legal services",
        "Farming, fishing, and forestry",
        "None",
    };
    return vocab;
}

CategoryResult annotate_category(const QuerySpec& query, ChatEndpoint& classifier) {
    std::string prompt = read_text_file(asset_path("prompts/category_annotation.txt"));
    prompt = fill_template(std::move(prompt), "query", query.prompt);

    ChatRequest req;
    req.prompt = std::move(prompt);
    ChatResponse resp = classifier.complete(req);

    CategoryResult result;
    result.raw_output = resp.text;
    std::string t = resp.text;
    size_t a = t.find_first_not_of(" \t\r\n");
    size_t b = t.find_last_not_of(" \t\r\n");
    t = a == std::string::npos ? "" : t.substr(a, b - a + 1);
    const auto& vocab = category_vocabulary();
    if (std::find(vocab.begin(), vocab.end(), t) != vocab.end()) result.label = t;
    return result;
}

// ---------------------------------------------------------------------------
// Workload trace I/O

namespace {

int64_t parse_iso8601_ns(const std::string& s, const std::string& context) {
    // 2024-01-01T00:00:00[.fff]Z (UTC assumed)
    std::tm tm{};
    std::istringstream ss(s);
    ss >> std::get_time(&tm, "%Y-%m-%dT%H:%M:%S");
    if (ss.fail()) throw IoError(context + ": bad timestamp '" + s + "'");
    double frac = 0.0;
    if (ss.peek() == '.') {
        std::string rest;
        ss >> rest;
        if (!rest.empty() && rest.back() == 'Z') rest.pop_back();
        frac = std::stod("0" + rest);
    }
    time_t epoch = timegm(&tm);
    return int64_t(epoch) * 1000000000LL + int64_t(frac * 1e9);
}

std::string format_iso8601(int64_t t_ns) {
    time_t secs = t_ns / 1000000000LL;
    int64_t frac = t_ns % 1000000000LL;
    std::tm tm{};
    gmtime_r(&secs, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S");
    if (frac) {
        os << '.' << std::setw(3) << std::setfill('0') << (frac / 1000000);
    }
    os << 'Z';
    return os.str();
}

}  // namespace

WorkloadTrace validate_trace(const std::string& path, const ModelPool& pool,
                             TraceValidationSummary* summary) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trace: " + path);
    WorkloadTrace trace;
    std::string line;
    std::getline(in, line);  // header
    int lineno = 1;
    int64_t prev_t = INT64_MIN;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::string ctx = path + ":" + std::to_string(lineno);
        std::stringstream ss(line);
        std::string ts, qid, ins, outs, caps;
        if (!std::getline(ss, ts, ',') || !std::getline(ss, qid, ',') ||
            !std::getline(ss, ins, ',') || !std::getline(ss, outs, ','))
            throw IoError(ctx + ": expected 5 columns");
        std::getline(ss, caps, ',');

        TraceRow row;
        row.t_ns = parse_iso8601_ns(ts, ctx);
        if (row.t_ns < prev_t) throw IoError(ctx + ": timestamps out of order");
        prev_t = row.t_ns;
        row.query_id = qid;
        row.input_tokens = std::stoll(ins);
        row.output_tokens = std::stoll(outs);

        for (const auto& m : pool.models) row.capable[m.model_id] = false;
        row.capable[pool.baseline().model_id] = true;
        std::stringstream cs(caps);
        std::string id;
        while (std::getline(cs, id, ';')) {
            if (id.empty()) continue;
            if (!pool.find(id)) throw IoError(ctx + ": unknown model id '" + id + "'");
            row.capable[id] = true;
        }
        trace.rows.push_back(std::move(row));
    }
    if (summary) {
        summary->n = trace.rows.size();
        summary->duration_s = trace.rows.empty()
                                  ? 0.0
                                  : double(trace.rows.back().t_ns - trace.rows.front().t_ns) * 1e-9;
        summary->serviceable_fraction = trace.serviceable_fraction(pool);
    }
    return trace;
}

void write_trace_csv(const WorkloadTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "t_iso8601,query_id,input_tokens,output_tokens,capable_models\n";
    for (const auto& r : trace.rows) {
        out << format_iso8601(r.t_ns) << ',' << r.query_id << ',' << r.input_tokens << ','
            << r.output_tokens << ',';
        bool first = true;
        for (const auto& [id, cap] : r.capable) {
            if (!cap) continue;
            if (!first) out << ';';
            out << id;
            first = false;
        }
        out << '\n';
    }
}

}  // namespace wattprof
