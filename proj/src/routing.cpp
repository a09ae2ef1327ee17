#include "wattprof/routing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace wattprof {

using json = nlohmann::json;

double cost_of_query(int64_t input_tokens, int64_t output_tokens, const Pricing& pricing) {
    if (input_tokens < 0 || output_tokens < 0)
        throw RoutingError("cost_of_query: negative token count");
    return double(input_tokens) / 1e6 * pricing.usd_per_1m_input_tokens +
           double(output_tokens) / 1e6 * pricing.usd_per_1m_output_tokens;
}

const ModelProfile& ModelPool::baseline() const {
    for (const auto& m : models)
        if (m.baseline) return m;
    throw RoutingError("model pool has no designated cloud baseline");
}

const ModelProfile* ModelPool::find(const std::string& id) const {
    for (const auto& m : models)
        if (m.model_id == id) return &m;
    return nullptr;
}

void ModelPool::validate() const {
    int baselines = 0;
    std::set<std::string> ids;
    for (const auto& m : models) {
        if (!ids.insert(m.model_id).second)
            throw RoutingError("duplicate model id in pool: " + m.model_id);
        if (m.baseline) {
            ++baselines;
            if (m.location != Location::Cloud)
                throw RoutingError("baseline model must be a cloud model: " + m.model_id);
        }
        if (m.pricing.usd_per_1m_input_tokens < 0 || m.pricing.usd_per_1m_output_tokens < 0)
            throw RoutingError("negative pricing for " + m.model_id);
    }
    if (baselines != 1)
        throw RoutingError("pool must designate exactly one cloud baseline, found " +
                           std::to_string(baselines));
}

double WorkloadTrace::serviceable_fraction(const ModelPool& pool) const {
    if (rows.empty()) return 0.0;
    size_t n = 0;
    for (const auto& r : rows) {
        for (const auto& [id, cap] : r.capable) {
            const ModelProfile* m = pool.find(id);
            if (cap && m && m->location == Location::Local) {
                ++n;
                break;
            }
        }
    }
    return double(n) / double(rows.size());
}

std::string strategy_name(const RoutingStrategy& s) {
    if (std::holds_alternative<CloudOnly>(s)) return "cloud-only";
    if (std::holds_alternative<Oracle>(s)) return "oracle";
    const auto& p = std::get<PAccurate>(s);
    std::ostringstream os;
    os << "p-accurate-" << p.p << (p.expected_value ? "-ev" : "-mc");
    return os.str();
}

const ModelProfile& oracle_route(const TraceRow& row, const ModelPool& pool) {
    const ModelProfile* best = nullptr;
    double best_energy = 0.0;
    for (const auto& m : pool.models) {
        if (m.location != Location::Local) continue;
        auto it = row.capable.find(m.model_id);
        if (it == row.capable.end() || !it->second) continue;
        double e = m.energy_j(row.input_tokens, row.output_tokens);
        if (!best || m.active_params < best->active_params ||
            (m.active_params == best->active_params &&
             (e < best_energy ||
              (e == best_energy && m.model_id < best->model_id)))) {
            best = &m;
            best_energy = e;
        }
    }
    return best ? *best : pool.baseline();
}

const ModelProfile& p_accurate_route(const TraceRow& row, const ModelPool& pool, double p,
                                     std::mt19937_64& rng) {
    const ModelProfile& oracle_choice = oracle_route(row, pool);
    if (oracle_choice.location == Location::Cloud) return oracle_choice;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return u(rng) < p ? oracle_choice : pool.baseline();
}

SavingsFractions savings(const ResourceTotals& strategy, const ResourceTotals& baseline) {
    if (baseline.energy_j <= 0 && baseline.flops <= 0 && baseline.cost_usd <= 0)
        throw RoutingError("savings: zero baseline totals");
    SavingsFractions out;
    if (baseline.energy_j > 0) out.energy = 1.0 - strategy.energy_j / baseline.energy_j;
    if (baseline.flops > 0) out.flops = 1.0 - strategy.flops / baseline.flops;
    if (baseline.cost_usd > 0) out.cost = 1.0 - strategy.cost_usd / baseline.cost_usd;
    return out;
}

namespace {

ResourceTotals query_resources(const ModelProfile& m, const TraceRow& row) {
    return {m.energy_j(row.input_tokens, row.output_tokens),
            m.flops(row.input_tokens, row.output_tokens),
            cost_of_query(row.input_tokens, row.output_tokens, m.pricing)};
}

void accumulate(ResourceTotals& acc, const ResourceTotals& q, double w = 1.0) {
    acc.energy_j += w * q.energy_j;
    acc.flops += w * q.flops;
    acc.cost_usd += w * q.cost_usd;
}

}  // namespace

SavingsReport simulate(const WorkloadTrace& trace, const RoutingStrategy& strategy,
                       const ModelPool& pool, const SimulateOptions& opts) {
    pool.validate();
    for (const auto& row : trace.rows) {
        for (const auto& [id, cap] : row.capable) {
            if (!pool.find(id))
                throw RoutingError("trace references model without a profile: " + id);
        }
    }

    SavingsReport report;
    report.strategy = strategy_name(strategy);
    if (trace.rows.empty()) {
        report.savings_defined = false;
        return report;
    }

    std::mt19937_64 rng;
    const PAccurate* pa = std::get_if<PAccurate>(&strategy);
    if (pa && !pa->expected_value) rng.seed(pa->seed);

    const size_t stride = std::max<size_t>(1, trace.rows.size() / std::max<size_t>(1, opts.series_points));
    const ModelProfile& cloud = pool.baseline();

    size_t i = 0;
    for (const auto& row : trace.rows) {
        if (std::holds_alternative<CloudOnly>(strategy)) {
            accumulate(report.totals, query_resources(cloud, row));
        } else if (std::holds_alternative<Oracle>(strategy)) {
            accumulate(report.totals, query_resources(oracle_route(row, pool), row));
        } else if (pa->expected_value) {
            const ModelProfile& choice = oracle_route(row, pool);
            if (choice.location == Location::Cloud) {
                accumulate(report.totals, query_resources(cloud, row));
            } else {
                // deterministic weights {oracle: p, cloud: 1-p}
                accumulate(report.totals, query_resources(choice, row), pa->p);
                accumulate(report.totals, query_resources(cloud, row), 1.0 - pa->p);
            }
        } else {
            accumulate(report.totals, query_resources(p_accurate_route(row, pool, pa->p, rng), row));
        }
        ++i;
        if (i % stride == 0 || i == trace.rows.size())
            report.series.emplace_back(row.t_ns, report.totals);
    }
    return report;
}

std::vector<SavingsReport> simulate_all(const WorkloadTrace& trace,
                                        const std::vector<RoutingStrategy>& strategies,
                                        const ModelPool& pool, const SimulateOptions& opts) {
    SavingsReport base = simulate(trace, CloudOnly{}, pool, opts);
    std::vector<SavingsReport> out;
    out.push_back(base);
    for (const auto& s : strategies) {
        if (std::holds_alternative<CloudOnly>(s)) continue;
        SavingsReport r = simulate(trace, s, pool, opts);
        if (r.savings_defined && base.savings_defined)
            r.savings_vs_baseline = savings(r.totals, base.totals);
        out.push_back(std::move(r));
    }
    return out;
}

WorkloadTrace synthesize_trace(const TraceSynthesisConfig& cfg, const ModelPool& pool) {
    if (cfg.rate_per_s <= 0) throw RoutingError("synthesize_trace: rate must be positive");
    pool.validate();

    std::vector<const ModelProfile*> locals;
    for (const auto& m : pool.models)
        if (m.location == Location::Local) locals.push_back(&m);
    std::sort(locals.begin(), locals.end(), [](const ModelProfile* a, const ModelProfile* b) {
        return a->active_params < b->active_params;
    });

    std::mt19937_64 rng(cfg.seed);
    std::exponential_distribution<double> inter(cfg.rate_per_s);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::lognormal_distribution<double> in_len(cfg.input_log_mean, cfg.input_log_sigma);
    std::lognormal_distribution<double> out_len(cfg.output_log_mean, cfg.output_log_sigma);

    WorkloadTrace trace;
    double t = 0.0;
    size_t qid = 0;
    for (;;) {
        t += inter(rng);
        if (t >= cfg.duration_s) break;
        TraceRow row;
        row.t_ns = int64_t(t * 1e9);
        row.query_id = "synth-" + std::to_string(qid++);
        row.input_tokens = std::max<int64_t>(1, int64_t(in_len(rng)));
        row.output_tokens = std::max<int64_t>(1, int64_t(out_len(rng)));
        for (const auto& m : pool.models) row.capable[m.model_id] = false;
        row.capable[pool.baseline().model_id] = true;  // cloud always capable
        if (!locals.empty() && u(rng) < cfg.serviceable_fraction) {
            // nested capability: min solving size and everything above it
            size_t min_idx = size_t(u(rng) * double(locals.size()));
            min_idx = std::min(min_idx, locals.size() - 1);
            for (size_t i = min_idx; i < locals.size(); ++i)
                row.capable[locals[i]->model_id] = true;
        }
        trace.rows.push_back(std::move(row));
    }
    return trace;
}

std::map<std::string, Pricing> load_pricing(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw RoutingError("cannot open pricing file: " + csv_path);
    std::map<std::string, Pricing> out;
    std::string line;
    std::getline(in, line);  // header: model,input_usd_per_1m,output_usd_per_1m
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string model, ins, outs;
        if (!std::getline(ss, model, ',') || !std::getline(ss, ins, ',') ||
            !std::getline(ss, outs, ','))
            throw RoutingError("pricing file: bad row: " + line);
        out[model] = Pricing{std::stod(ins), std::stod(outs)};
    }
    return out;
}

ModelPool load_model_pool(const std::string& json_path) {
    std::ifstream in(json_path);
    if (!in) throw RoutingError("cannot open model pool: " + json_path);
    json j = json::parse(in);
    ModelPool pool;
    for (const auto& m : j.at("models")) {
        ModelProfile p;
        p.model_id = m.at("model_id").get<std::string>();
        p.location = m.value("location", std::string("local")) == "cloud" ? Location::Cloud
                                                                          : Location::Local;
        p.active_params = m.at("active_params").get<double>();
        p.pricing.usd_per_1m_input_tokens = m.value("usd_per_1m_input_tokens", 0.0);
        p.pricing.usd_per_1m_output_tokens = m.value("usd_per_1m_output_tokens", 0.0);
        p.energy_base_j = m.value("energy_base_j", 0.0);
        p.energy_per_input_token_j = m.value("energy_per_input_token_j", 0.0);
        p.energy_per_output_token_j = m.value("energy_per_output_token_j", 0.0);
        p.baseline = m.value("baseline", false);
        pool.models.push_back(std::move(p));
    }
    pool.validate();
    return pool;
}

}  // namespace wattprof
