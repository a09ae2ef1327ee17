#include "wattprof/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace wattprof {

namespace {

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

// Inverse standard normal CDF (Acklam's rational approximation), good to ~1e-9.
double norm_ppf(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1 - plow;
    double q, r;
    if (p < plow) {
        q = std::sqrt(-2 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    if (p <= phigh) {
        q = p - 0.5;
        r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
    }
    q = std::sqrt(-2 * std::log(1 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        size_t a = field.find_first_not_of(" \t\r");
        size_t b = field.find_last_not_of(" \t\r");
        out.push_back(a == std::string::npos ? "" : field.substr(a, b - a + 1));
    }
    return out;
}

}  // namespace

MeanCi mean_ci(std::span<const double> values, double confidence) {
    if (values.empty()) throw MetricsError("mean_ci: empty input");
    MeanCi out;
    out.mean = mean_of(values);
    if (values.size() == 1) {
        out.single_sample = true;
        return out;
    }
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    double s = std::sqrt(ss / double(values.size() - 1));
    double z = norm_ppf(0.5 + confidence / 2.0);
    out.half_width = z * s / std::sqrt(double(values.size()));
    return out;
}

double accuracy_per_watt(std::span<const MetricRow> rows) {
    if (rows.empty()) throw MetricsError("accuracy_per_watt: no records");
    double acc = 0.0, pw = 0.0;
    for (const auto& r : rows) {
        acc += r.accuracy;
        pw += r.avg_power_watts;
    }
    return (acc / double(rows.size())) / (pw / double(rows.size()));
}

double accuracy_per_joule(std::span<const MetricRow> rows) {
    if (rows.empty()) throw MetricsError("accuracy_per_joule: no records");
    double acc = 0.0, j = 0.0;
    for (const auto& r : rows) {
        acc += r.accuracy;
        j += r.joules;
    }
    return (acc / double(rows.size())) / (j / double(rows.size()));
}

namespace {
// Mean perplexity over the perplexity-bearing subset; nullopt if none.
std::optional<double> mean_perplexity(std::span<const MetricRow> rows, size_t* excluded) {
    double sum = 0.0;
    size_t n = 0;
    for (const auto& r : rows) {
        if (r.perplexity) {
            sum += *r.perplexity;
            ++n;
        }
    }
    if (excluded) *excluded = rows.size() - n;
    if (n == 0) return std::nullopt;
    return sum / double(n);
}
}  // namespace

std::optional<double> perplexity_per_watt(std::span<const MetricRow> rows) {
    if (rows.empty()) throw MetricsError("perplexity_per_watt: no records");
    auto ppl = mean_perplexity(rows, nullptr);
    if (!ppl) return std::nullopt;
    double pw = 0.0;
    for (const auto& r : rows) pw += r.avg_power_watts;
    return 1.0 / (*ppl * (pw / double(rows.size())));
}

std::optional<double> perplexity_per_joule(std::span<const MetricRow> rows) {
    if (rows.empty()) throw MetricsError("perplexity_per_joule: no records");
    auto ppl = mean_perplexity(rows, nullptr);
    if (!ppl) return std::nullopt;
    double j = 0.0;
    for (const auto& r : rows) j += r.joules;
    return 1.0 / (*ppl * (j / double(rows.size())));
}

EfficiencyReport efficiency_report(std::span<const MetricRow> rows) {
    if (rows.empty()) throw MetricsError("efficiency_report: no records");
    EfficiencyReport rep;
    rep.n = rows.size();

    std::vector<double> acc, pw, j, ppl;
    acc.reserve(rows.size());
    pw.reserve(rows.size());
    j.reserve(rows.size());
    for (const auto& r : rows) {
        acc.push_back(r.accuracy);
        pw.push_back(r.avg_power_watts);
        j.push_back(r.joules);
        if (r.perplexity) ppl.push_back(*r.perplexity);
    }
    rep.perplexity_excluded = rows.size() - ppl.size();
    rep.accuracy_ci = mean_ci(acc);
    rep.power_ci = mean_ci(pw);
    rep.energy_ci = mean_ci(j);
    rep.mean_accuracy = rep.accuracy_ci.mean;
    rep.mean_power_watts = rep.power_ci.mean;
    rep.mean_energy_joules = rep.energy_ci.mean;
    rep.apw = rep.mean_accuracy / rep.mean_power_watts;
    rep.apj = rep.mean_accuracy / rep.mean_energy_joules;
    if (!ppl.empty()) {
        rep.perplexity_ci = mean_ci(ppl);
        rep.mean_perplexity = rep.perplexity_ci->mean;
        rep.ppw = 1.0 / (*rep.mean_perplexity * rep.mean_power_watts);
        rep.ppj = 1.0 / (*rep.mean_perplexity * rep.mean_energy_joules);
    }
    return rep;
}

double perplexity_from_logprobs(std::span<const double> token_logprobs) {
    if (token_logprobs.empty())
        throw MetricsError("perplexity_from_logprobs: empty sequence");
    double sum = 0.0;
    for (double lp : token_logprobs) {
        if (lp > 0.0) throw MetricsError("perplexity_from_logprobs: positive logprob");
        sum += lp;
    }
    return std::exp(-sum / double(token_logprobs.size()));
}

double coverage(const std::vector<std::vector<bool>>& matrix,
                std::span<const size_t> model_subset) {
    if (model_subset.empty()) throw MetricsError("coverage: empty model subset");
    if (matrix.empty()) return 0.0;
    size_t solved = 0;
    for (const auto& row : matrix) {
        for (size_t m : model_subset) {
            if (m >= row.size()) throw MetricsError("coverage: model index out of range");
            if (row[m]) {
                ++solved;
                break;
            }
        }
    }
    return double(solved) / double(matrix.size());
}

int difficulty_label(std::span<const double> solving_model_params) {
    if (solving_model_params.empty()) return 5;
    double smallest = *std::min_element(solving_model_params.begin(),
                                        solving_model_params.end());
    if (smallest <= 4e9) return 1;
    if (smallest <= 8e9) return 2;
    if (smallest <= 20e9) return 3;
    if (smallest <= 235e9) return 4;
    return 5;
}

GdpTable load_gdp_table(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw MetricsError("cannot open GDP table: " + csv_path);
    GdpTable table;
    std::string line;
    std::getline(in, line);  // header: category,gdp_trillions
    double sum = 0.0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        // category names may themselves contain commas; the value is the last field
        auto comma = line.rfind(',');
        if (comma == std::string::npos || comma + 1 >= line.size())
            throw MetricsError("GDP table: bad row: " + line);
        std::string cat = line.substr(0, comma);
        double v = std::stod(line.substr(comma + 1));
        if (v < 0) throw MetricsError("GDP table: negative entry for " + cat);
        table.gdp_trillions[cat] = v;
        sum += v;
    }
    if (sum > 0) table.total_gdp_trillions = sum;
    return table;
}

GdpWeightedAccuracy gdp_weighted_accuracy(
    const std::map<std::string, double>& per_category_accuracy, const GdpTable& gdp) {
    GdpWeightedAccuracy out;
    double weight_sum = 0.0;
    for (const auto& [cat, acc] : per_category_accuracy) {
        auto it = gdp.gdp_trillions.find(cat);
        if (it == gdp.gdp_trillions.end())
            throw MetricsError("gdp_weighted_accuracy: no GDP entry for category '" + cat + "'");
        weight_sum += it->second;
        out.weighted_accuracy += it->second * acc;
        out.addressable_gdp_trillions += it->second * acc;
    }
    if (weight_sum <= 0.0)
        throw MetricsError("gdp_weighted_accuracy: zero total GDP weight");
    out.weighted_accuracy /= weight_sum;
    return out;
}

YoyGains yoy_gains(std::span<const std::pair<std::string, double>> series) {
    if (series.size() < 2) throw MetricsError("yoy_gains: need at least two entries");
    YoyGains out;
    for (size_t i = 1; i < series.size(); ++i) {
        if (series[i - 1].second <= 0.0 || series[i].second <= 0.0)
            throw MetricsError("yoy_gains: non-positive efficiency value");
        double ratio = series[i].second / series[i - 1].second;
        out.step_ratios.emplace_back(series[i].first, ratio);
        out.cumulative *= ratio;
    }
    return out;
}

std::map<std::string, double> load_param_registry(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw MetricsError("cannot open parameter registry: " + csv_path);
    std::map<std::string, double> reg;
    std::string line;
    std::getline(in, line);  // header: model_id,active_params
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() < 2) throw MetricsError("parameter registry: bad row: " + line);
        reg[f[0]] = std::stod(f[1]);
    }
    return reg;
}

}  // namespace wattprof
