#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wattprof/endpoint.hpp"
#include "wattprof/orchestrator.hpp"
#include "wattprof/routing.hpp"

namespace wattprof {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SchemaViolation : IoError {
    using IoError::IoError;
};

struct HostInfo {
    std::string cpu_brand;
    std::string host_name;
    std::string os_name, os_version, kernel_version;
    int cpu_count = 0;

    static HostInfo detect();
};

// One (query, model, hardware) measurement row. Field names and units follow
// the record schema one-for-one: W / J / MB / s / ms.
struct ProfilingRecord {
    std::string query_id;
    std::string dataset_tag;
    std::string model_id;
    std::string hardware_id;

    int64_t input_tokens = 0;
    int64_t output_tokens = 0;
    bool tokens_approximate = false;
    std::optional<double> time_to_first_token_seconds;
    double total_query_seconds = 0.0;
    double per_token_ms = 0.0;
    double throughput_tokens_per_sec = 0.0;

    double per_query_joules = 0.0;
    double joules_std = 0.0;
    std::optional<double> counter_joules;
    StatSummary per_query_watts;
    StatSummary total_watts;
    StatSummary gpu_mb;
    std::optional<StatSummary> cpu_mb;
    std::optional<StatSummary> temperature;
    std::optional<double> flops_per_request;
    std::optional<double> macs_per_request;
    std::optional<double> initialization_duration_seconds;
    double telemetry_error_band = 0.0;  // backend-declared fractional error

    std::optional<bool> success;
    std::optional<std::string> success_method;     // mc-exact | judge-pairwise | judge-reference
    std::optional<std::string> judge_model_id;
    std::optional<std::string> verdict;            // pairwise verdict token
    std::optional<bool> unparsed;                  // MC extraction failed
    std::optional<double> perplexity;
    std::optional<std::string> category;

    std::string output_text;
    std::optional<std::string> reference_answer;
    std::optional<std::string> reference_letter;

    DecodingConfig decoding;  // echoed for provenance
    bool thinking_enabled = false;
    int batch_size = 1;       // harness contract
    int repeats = 0;
    HostInfo host;
};

// Line-delimited JSON, one record per line, stable field ordering.
// read(write(R)) == R for all schema-valid record sets.
size_t write_records(const std::vector<ProfilingRecord>& records, const std::string& path);
std::vector<ProfilingRecord> read_records(const std::string& path);

std::string record_to_json_line(const ProfilingRecord& r);
ProfilingRecord record_from_json_line(const std::string& line, int lineno = 0);

// CSV export for analysis (summary columns only).
void export_records_csv(const std::vector<ProfilingRecord>& records, const std::string& path);

struct IngestOptions {
    bool require_ground_truth = false;  // reference datasets
    size_t max_prompt_chars = 32000;
    bool drop_duplicates = true;
};

struct IngestResult {
    std::vector<QuerySpec> queries;
    std::vector<std::pair<std::string, std::string>> rejected;  // (query_id, reason)
};

// JSONL rows: {"query_id":..., "prompt":..., "reference_answer"?:...,
// "reference_letter"?:...}. Plain-text files get one prompt per line with
// generated ids. Filters are idempotent.
IngestResult ingest_queries(const std::string& path, const std::string& dataset_tag,
                            const IngestOptions& opts = {});

// The closed 23-label category vocabulary (22 occupation domains + "None").
const std::vector<std::string>& category_vocabulary();

struct CategoryResult {
    std::optional<std::string> label;  // nullopt: classifier output rejected
    std::string raw_output;            // preserved on rejection
};

// Fills the categorizer prompt verbatim; accepts only exact vocabulary labels
// (whitespace-trimmed). Unknown output is a rejection, never silently "None".
CategoryResult annotate_category(const QuerySpec& query, ChatEndpoint& classifier);

struct TraceValidationSummary {
    size_t n = 0;
    double duration_s = 0.0;
    double serviceable_fraction = 0.0;
};

// Trace CSV: t_iso8601,query_id,input_tokens,output_tokens,capable_models
// (capable_models semicolon-joined ids). Rows must be time-ordered and every
// capability id must exist in the registered model pool.
WorkloadTrace validate_trace(const std::string& path, const ModelPool& pool,
                             TraceValidationSummary* summary = nullptr);

void write_trace_csv(const WorkloadTrace& trace, const std::string& path);

}  // namespace wattprof
