#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace wattprof {

struct RoutingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Pricing {
    double usd_per_1m_input_tokens = 0.0;
    double usd_per_1m_output_tokens = 0.0;
};

// input_tokens/1e6 * in_price + output_tokens/1e6 * out_price.
double cost_of_query(int64_t input_tokens, int64_t output_tokens, const Pricing& pricing);

enum class Location { Local, Cloud };

// Per-model cost/energy/compute characteristics. Energy comes from measured
// records when present, else a linear tokens->J model fit from records;
// the coefficients are persisted alongside reports.
struct ModelProfile {
    std::string model_id;
    Location location = Location::Local;
    double active_params = 0.0;
    Pricing pricing;
    // energy_j(query) = energy_base_j + in*energy_per_input_token_j + out*energy_per_output_token_j
    double energy_base_j = 0.0;
    double energy_per_input_token_j = 0.0;
    double energy_per_output_token_j = 0.0;
    bool baseline = false;  // exactly one cloud model carries this

    double energy_j(int64_t input_tokens, int64_t output_tokens) const {
        return energy_base_j + double(input_tokens) * energy_per_input_token_j +
               double(output_tokens) * energy_per_output_token_j;
    }
    // Decoder-forward-pass approximation: 2 * params * tokens.
    double flops(int64_t input_tokens, int64_t output_tokens) const {
        return 2.0 * active_params * double(input_tokens + output_tokens);
    }
};

struct ModelPool {
    std::vector<ModelProfile> models;

    const ModelProfile& baseline() const;
    const ModelProfile* find(const std::string& id) const;
    void validate() const;  // exactly one cloud baseline, unique ids
};

struct TraceRow {
    int64_t t_ns = 0;
    std::string query_id;
    int64_t input_tokens = 0;
    int64_t output_tokens = 0;
    std::map<std::string, bool> capable;  // model_id -> answers correctly
};

struct WorkloadTrace {
    std::vector<TraceRow> rows;
    // rows with >=1 capable local model; the cloud baseline is always capable
    // by convention and doesn't count
    double serviceable_fraction(const ModelPool& pool) const;
};

struct CloudOnly {};
struct Oracle {};
struct PAccurate {
    double p = 0.8;
    uint64_t seed = 0;
    bool expected_value = true;  // false => Monte-Carlo draws from seed
};
using RoutingStrategy = std::variant<CloudOnly, Oracle, PAccurate>;

std::string strategy_name(const RoutingStrategy& s);

// Smallest capable local model by active params; ties broken by lower
// per-query energy, then lexicographic model id. Cloud baseline when no
// local model is capable.
const ModelProfile& oracle_route(const TraceRow& row, const ModelPool& pool);

// For locally-serviceable rows: the oracle choice with probability p, else
// the cloud baseline. Rows with no capable local model always go to cloud.
const ModelProfile& p_accurate_route(const TraceRow& row, const ModelPool& pool, double p,
                                     std::mt19937_64& rng);

struct ResourceTotals {
    double energy_j = 0.0;
    double flops = 0.0;
    double cost_usd = 0.0;
};

struct SavingsFractions {
    std::optional<double> energy;  // absent when the baseline total is zero
    std::optional<double> flops;
    std::optional<double> cost;
};

// 1 - strategy/baseline per resource. Throws RoutingError on zero baseline.
SavingsFractions savings(const ResourceTotals& strategy, const ResourceTotals& baseline);

struct SavingsReport {
    std::string strategy;
    ResourceTotals totals;
    SavingsFractions savings_vs_baseline;
    bool savings_defined = true;  // false on an empty trace
    // Sampled cumulative series: (t_ns, running totals).
    std::vector<std::pair<int64_t, ResourceTotals>> series;
};

struct SimulateOptions {
    size_t series_points = 100;  // cumulative-series resolution
};

// Deterministic sequential fold over the trace. Monte-Carlo strategies are
// reproducible from their seed. The baseline totals must come from a
// CloudOnly run over the same trace when computing savings.
SavingsReport simulate(const WorkloadTrace& trace, const RoutingStrategy& strategy,
                       const ModelPool& pool, const SimulateOptions& opts = {});

// Runs CloudOnly plus the given strategies and fills savings vs CloudOnly.
std::vector<SavingsReport> simulate_all(const WorkloadTrace& trace,
                                        const std::vector<RoutingStrategy>& strategies,
                                        const ModelPool& pool,
                                        const SimulateOptions& opts = {});

struct TraceSynthesisConfig {
    double rate_per_s = 10.0;
    double duration_s = 100.0;
    uint64_t seed = 1;
    double serviceable_fraction = 0.807;
    // lognormal token-length parameters
    double input_log_mean = 5.0, input_log_sigma = 0.8;
    double output_log_mean = 6.0, output_log_sigma = 0.7;
};

// Poisson arrivals, nested capability (a query solvable by its minimum-size
// local model is solvable by every larger one), lognormal token lengths.
// Byte-identical output for a fixed seed.
WorkloadTrace synthesize_trace(const TraceSynthesisConfig& cfg, const ModelPool& pool);

// Pricing CSV mirroring the published pricing table columns:
//   model,input_usd_per_1m,output_usd_per_1m
std::map<std::string, Pricing> load_pricing(const std::string& csv_path);

// Model pool JSON file (ids, location, params, pricing, energy coefficients).
ModelPool load_model_pool(const std::string& json_path);

}  // namespace wattprof
