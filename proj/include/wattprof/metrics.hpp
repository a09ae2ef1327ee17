#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wattprof {

struct MetricsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MeanCi {
    double mean = 0.0;
    double half_width = 0.0;
    bool single_sample = false;  // n == 1, interval degenerate
};

// Normal-approximation interval z*s/sqrt(n). half_width 0 when n == 1.
MeanCi mean_ci(std::span<const double> values, double confidence = 0.95);

// Minimal per-record view the efficiency metrics need. Callers project
// ProfilingRecords (or anything else) into this.
struct MetricRow {
    double accuracy = 0.0;            // 0/1 success, or fractional
    double avg_power_watts = 0.0;
    double joules = 0.0;
    std::optional<double> perplexity;
};

struct EfficiencyReport {
    std::optional<double> apw;   // 1/W
    std::optional<double> ppw;   // 1/W
    std::optional<double> apj;   // 1/J
    std::optional<double> ppj;   // 1/J
    double mean_accuracy = 0.0;
    double mean_power_watts = 0.0;
    double mean_energy_joules = 0.0;
    std::optional<double> mean_perplexity;
    MeanCi accuracy_ci, power_ci, energy_ci;
    std::optional<MeanCi> perplexity_ci;
    size_t n = 0;
    size_t perplexity_excluded = 0;  // records lacking perplexity
};

// All four metrics are ratios (or products) of expectations, never averages
// of per-query ratios:
//   APW = E[acc] / E[P]          PPW = 1 / (E[ppl] * E[P])
//   APJ = E[acc] / E[J]          PPJ = 1 / (E[ppl] * E[J])
// PPW/PPJ are computed over the perplexity-bearing subset and reported absent
// (not zero) when no record carries perplexity.
EfficiencyReport efficiency_report(std::span<const MetricRow> rows);

double accuracy_per_watt(std::span<const MetricRow> rows);
double accuracy_per_joule(std::span<const MetricRow> rows);
std::optional<double> perplexity_per_watt(std::span<const MetricRow> rows);
std::optional<double> perplexity_per_joule(std::span<const MetricRow> rows);

// exp(-mean(logprobs)), natural log. Throws on empty input or positive values.
double perplexity_from_logprobs(std::span<const double> token_logprobs);

// Fraction of queries solved by at least one model in the subset.
// matrix[q][m] = model m answers query q correctly.
double coverage(const std::vector<std::vector<bool>>& matrix,
                std::span<const size_t> model_subset);

// Difficulty by smallest solving model's active parameters:
// 1: <=4B, 2: <=8B, 3: <=20B, 4: <=235B, 5: unsolvable.
int difficulty_label(std::span<const double> solving_model_params);

struct GdpTable {
    std::map<std::string, double> gdp_trillions;  // category -> trillions USD
    double total_gdp_trillions = 29.18;           // 2024 U.S. reference
};

GdpTable load_gdp_table(const std::string& csv_path);

struct GdpWeightedAccuracy {
    double weighted_accuracy = 0.0;
    double addressable_gdp_trillions = 0.0;
};

// weighted = sum_c (gdp_c / sum gdp) * acc_c ; addressable = sum_c acc_c * gdp_c.
// Throws MetricsError when a category with accuracy has no GDP entry.
GdpWeightedAccuracy gdp_weighted_accuracy(const std::map<std::string, double>& per_category_accuracy,
                                          const GdpTable& gdp);

struct YoyGains {
    std::vector<std::pair<std::string, double>> step_ratios;  // label of later era -> ratio
    double cumulative = 1.0;
};

// Consecutive ratios of an ordered (label, value) efficiency series, plus
// their product. Values must be positive.
YoyGains yoy_gains(std::span<const std::pair<std::string, double>> series);

// model_id -> active parameter count, from a `model_id,active_params` CSV.
std::map<std::string, double> load_param_registry(const std::string& csv_path);

}  // namespace wattprof
