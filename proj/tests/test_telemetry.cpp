#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

#include "wattprof/telemetry.hpp"

using namespace wattprof;

namespace {

std::string write_tmp(const std::string& name, const std::string& content) {
    std::string path = name;
    std::ofstream out(path);
    out << content;
    return path;
}

PowerTrace constant_trace(double watts, int64_t start_ns, int64_t end_ns, int64_t step_ns) {
    PowerTrace t;
    for (int64_t ts = start_ns; ts <= end_ns; ts += step_ns) {
        AggregateSample s;
        s.t_ns = ts;
        s.total_power_watts = watts;
        s.device_count = 1;
        t.samples.push_back(s);
    }
    return t;
}

}  // namespace

TEST_CASE("replay backend returns file rows verbatim") {
    auto path = write_tmp("replay_identity.csv",
                          "t_ns,device_id,power_watts,memory_mb,temperature_c\n"
                          "0,gpu0,100,1024,50\n"
                          "50000000,gpu0,102,1024,51\n");
    ReplayBackend backend(path);
    auto first = backend.poll();
    REQUIRE(first.size() == 1);
    CHECK(first[0].t_ns == 0);
    CHECK(first[0].power_watts == 100.0);
    CHECK(*first[0].memory_mb == 1024.0);
    auto second = backend.poll();
    CHECK(second[0].power_watts == 102.0);
    CHECK(backend.poll().empty());  // exhausted cleanly
    std::remove(path.c_str());
}

TEST_CASE("synthetic constant backend emits configured power per device") {
    SyntheticBackend::Config cfg;
    cfg.power_watts = 120.0;
    cfg.devices = 2;
    SyntheticBackend backend(cfg);
    for (int i = 0; i < 3; ++i) {
        auto samples = backend.poll();
        REQUIRE(samples.size() == 2);
        CHECK(samples[0].power_watts == 120.0);
        CHECK(samples[1].power_watts == 120.0);
        CHECK(samples[0].t_ns == samples[1].t_ns);
    }
}

TEST_CASE("capability projection: power-only source leaves other fields absent") {
    auto path = write_tmp("replay_poweronly.csv",
                          "t_ns,device_id,power_watts\n"
                          "0,gpu0,80\n");
    ReplayBackend backend(path);
    auto samples = backend.poll();
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].power_watts == 80.0);
    CHECK_FALSE(samples[0].memory_mb.has_value());
    CHECK_FALSE(samples[0].temperature_c.has_value());
    CHECK(backend.descriptor().capabilities ==
          std::set<Capability>{Capability::Power});
    std::remove(path.c_str());
}

TEST_CASE("replay backend rejects malformed and unopenable sources") {
    CHECK_THROWS_AS(ReplayBackend{"/nonexistent/trace.csv"}, BackendUnavailable);
    auto path = write_tmp("replay_bad.csv",
                          "t_ns,device_id,power_watts\n"
                          "0,gpu0,not-a-number\n");
    CHECK_THROWS_AS(ReplayBackend{path}, ParseError);
    std::remove(path.c_str());
}

TEST_CASE("aggregate_devices sums power/memory and averages temperature") {
    std::vector<PowerSample> samples(2);
    samples[0] = {0, "dev0", 100.0, 512.0, 60.0, std::nullopt, std::nullopt};
    samples[1] = {0, "dev1", 50.0, 256.0, 70.0, std::nullopt, std::nullopt};
    auto agg = aggregate_devices(samples);
    CHECK(agg.total_power_watts == 150.0);
    CHECK(agg.total_memory_mb == 768.0);
    CHECK(*agg.mean_temperature_c == 65.0);
    CHECK(agg.device_count == 2);
}

TEST_CASE("aggregate_devices single device is the identity") {
    std::vector<PowerSample> samples(1);
    samples[0].power_watts = 80.0;
    auto agg = aggregate_devices(samples);
    CHECK(agg.total_power_watts == 80.0);
    CHECK(agg.device_count == 1);
}

TEST_CASE("aggregate_devices averages temperature over reporting devices only") {
    std::vector<PowerSample> samples(2);
    samples[0].power_watts = 100.0;  // no temperature
    samples[1].power_watts = 50.0;
    samples[1].temperature_c = 70.0;
    auto agg = aggregate_devices(samples);
    CHECK(agg.total_power_watts == 150.0);
    CHECK(*agg.mean_temperature_c == 70.0);

    std::vector<PowerSample> none(1);
    none[0].power_watts = 10.0;
    CHECK_FALSE(aggregate_devices(none).mean_temperature_c.has_value());
}

TEST_CASE("aggregate_devices rejects empty input and mixed timestamps") {
    CHECK_THROWS_AS(aggregate_devices({}), TelemetryError);
    std::vector<PowerSample> mixed(2);
    mixed[0].t_ns = 0;
    mixed[1].t_ns = 1;
    CHECK_THROWS_AS(aggregate_devices(mixed), TelemetryError);
}

TEST_CASE("aggregate_devices is permutation-invariant") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 500.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<PowerSample> samples(5);
        for (auto& s : samples) {
            s.t_ns = 42;
            s.power_watts = u(rng);
            s.memory_mb = u(rng);
            if (u(rng) > 250.0) s.temperature_c = u(rng) / 10.0;
        }
        auto a = aggregate_devices(samples);
        std::shuffle(samples.begin(), samples.end(), rng);
        auto b = aggregate_devices(samples);
        CHECK(a.total_power_watts == doctest::Approx(b.total_power_watts).epsilon(1e-12));
        CHECK(a.total_memory_mb == doctest::Approx(b.total_memory_mb).epsilon(1e-12));
        CHECK(a.mean_temperature_c.has_value() == b.mean_temperature_c.has_value());
        if (a.mean_temperature_c)
            CHECK(*a.mean_temperature_c == doctest::Approx(*b.mean_temperature_c).epsilon(1e-12));
    }
}

TEST_CASE("sampler: constant synthetic source, 20 polls, all 100 W") {
    SyntheticBackend::Config cfg;
    SyntheticBackend backend(cfg);  // default 100 W
    Sampler sampler(backend);
    auto trace = sampler.poll_n(20);
    REQUIRE(trace.samples.size() == 20);
    for (const auto& s : trace.samples) CHECK(s.total_power_watts == 100.0);
    CHECK_FALSE(trace.error_marker);
}

TEST_CASE("sampler: zero polls give an empty trace with success status") {
    SyntheticBackend backend({});
    Sampler sampler(backend);
    auto trace = sampler.poll_n(0);
    CHECK(trace.empty());
    CHECK_FALSE(trace.error_marker);
}

TEST_CASE("sampler: replay exhaustion mid-run closes the trace with an error marker") {
    auto path = write_tmp("replay_short.csv",
                          "t_ns,device_id,power_watts\n"
                          "0,gpu0,100\n"
                          "50000000,gpu0,100\n");
    ReplayBackend backend(path);
    Sampler sampler(backend);
    auto trace = sampler.poll_n(5);  // asks for more than the file holds
    CHECK(trace.samples.size() == 2);
    CHECK(trace.error_marker);
    std::remove(path.c_str());
}

TEST_CASE("replay determinism: two drains over the same file are identical") {
    auto path = write_tmp("replay_det.csv",
                          "t_ns,device_id,power_watts,memory_mb\n"
                          "0,gpu0,60,512\n0,gpu1,40,256\n"
                          "50000000,gpu0,61,512\n50000000,gpu1,39,256\n");
    ReplayBackend b1(path), b2(path);
    auto t1 = Sampler(b1).drain();
    auto t2 = Sampler(b2).drain();
    REQUIRE(t1.samples.size() == t2.samples.size());
    for (size_t i = 0; i < t1.samples.size(); ++i) {
        CHECK(t1.samples[i].t_ns == t2.samples[i].t_ns);
        CHECK(t1.samples[i].total_power_watts == t2.samples[i].total_power_watts);
        CHECK(t1.samples[i].total_memory_mb == t2.samples[i].total_memory_mb);
    }
    std::remove(path.c_str());
}

TEST_CASE("integrate_energy: constant 100 W over 2 s is 200 J") {
    auto trace = constant_trace(100.0, 0, 2'000'000'000, 50'000'000);
    double j = integrate_energy(trace, 0, 2'000'000'000);
    CHECK(j == doctest::Approx(200.0).epsilon(1e-12));
}

TEST_CASE("integrate_energy: linear ramp 0->100 W over 1 s is 50 J") {
    PowerTrace trace;
    for (int i = 0; i <= 20; ++i) {
        AggregateSample s;
        s.t_ns = int64_t(i) * 50'000'000;
        s.total_power_watts = 100.0 * double(i) / 20.0;
        trace.samples.push_back(s);
    }
    double j = integrate_energy(trace, 0, 1'000'000'000);
    CHECK(j == doctest::Approx(50.0).epsilon(1e-12));
}

TEST_CASE("integrate_energy: hand trapezoid over a piecewise trace") {
    PowerTrace trace;
    trace.samples = {{0, 100.0}, {1'000'000'000, 100.0}, {2'000'000'000, 50.0}};
    double j = integrate_energy(trace, 0, 2'000'000'000);
    CHECK(j == doctest::Approx(175.0).epsilon(1e-12));  // 100 + 75
}

TEST_CASE("integrate_energy interpolates at off-sample boundaries") {
    auto trace = constant_trace(100.0, 0, 2'000'000'000, 50'000'000);
    double j = integrate_energy(trace, 25'000'000, 1'025'000'000);
    CHECK(j == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("integrate_energy error cases") {
    auto trace = constant_trace(100.0, 0, 1'000'000'000, 50'000'000);
    CHECK_THROWS_AS(integrate_energy(trace, 500, 500), TelemetryError);
    CHECK_THROWS_AS(integrate_energy(trace, 2'000'000'000, 3'000'000'000),
                    EmptyWindowCoverage);
    PowerTrace empty;
    CHECK_THROWS_AS(integrate_energy(empty, 0, 1), EmptyWindowCoverage);
}

TEST_CASE("integrate_energy additivity over random split points") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> power(0.0, 400.0);
    for (int trial = 0; trial < 200; ++trial) {
        PowerTrace trace;
        int n = 10 + int(rng() % 30);
        int64_t t = 0;
        for (int i = 0; i < n; ++i) {
            trace.samples.push_back({t, power(rng)});
            t += 10'000'000 + int64_t(rng() % 90'000'000);
        }
        int64_t start = trace.samples.front().t_ns;
        int64_t end = trace.samples.back().t_ns;
        std::uniform_int_distribution<int64_t> mid(start + 1, end - 1);
        int64_t m = mid(rng);
        double whole = integrate_energy(trace, start, end);
        double parts = integrate_energy(trace, start, m) + integrate_energy(trace, m, end);
        CHECK(parts == doctest::Approx(whole).epsilon(1e-9));
    }
}

TEST_CASE("integrate_energy is monotone in window length") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> power(0.0, 300.0);
    PowerTrace trace;
    for (int i = 0; i <= 100; ++i) trace.samples.push_back({int64_t(i) * 50'000'000, power(rng)});
    double prev = 0.0;
    for (int64_t end = 500'000'000; end <= 5'000'000'000; end += 250'000'000) {
        double j = integrate_energy(trace, 0, end);
        CHECK(j >= prev - 1e-12);
        prev = j;
    }
}

TEST_CASE("energy_counter_delta: end minus start") {
    PowerTrace trace;
    for (int i = 0; i <= 10; ++i) {
        AggregateSample s;
        s.t_ns = int64_t(i) * 100'000'000;
        s.total_power_watts = 250.0;
        s.energy_counter_j = 1000.0 + 25.0 * double(i);
        trace.samples.push_back(s);
    }
    double d = energy_counter_delta(trace, 0, 1'000'000'001);
    CHECK(d == doctest::Approx(250.0).epsilon(1e-12));
}

TEST_CASE("energy_counter_delta: counter absent and counter regression") {
    auto trace = constant_trace(100.0, 0, 1'000'000'000, 100'000'000);
    CHECK_THROWS_AS(energy_counter_delta(trace, 0, 1'000'000'000), CounterAbsent);

    PowerTrace regress;
    for (int i = 0; i <= 4; ++i) {
        AggregateSample s;
        s.t_ns = int64_t(i) * 100'000'000;
        s.energy_counter_j = i == 3 ? 10.0 : 100.0 * double(i);  // dips mid-window
        regress.samples.push_back(s);
    }
    CHECK_THROWS_AS(energy_counter_delta(regress, 0, 500'000'000), CounterRegression);
}

TEST_CASE("window_power_values covers interpolated boundaries") {
    PowerTrace trace;
    trace.samples = {{0, 100.0}, {1'000'000'000, 200.0}};
    auto vals = window_power_values(trace, 250'000'000, 750'000'000);
    REQUIRE(vals.size() == 2);
    CHECK(vals[0] == doctest::Approx(125.0));
    CHECK(vals[1] == doctest::Approx(175.0));
}

TEST_CASE("vendor row parsers normalize canned text") {
    auto nv = parse_nvml_csv_row("0, 71.53, 11016, 64", 123);
    CHECK(nv.device_id == "gpu0");
    CHECK(nv.power_watts == doctest::Approx(71.53));
    CHECK(*nv.memory_mb == doctest::Approx(11016.0));
    CHECK(*nv.temperature_c == doctest::Approx(64.0));
    CHECK(nv.t_ns == 123);

    auto rocm = parse_rocm_csv_row("1, 187.0, 71.0, 16368", 456);
    CHECK(rocm.device_id == "gpu1");
    CHECK(rocm.power_watts == doctest::Approx(187.0));
    CHECK(*rocm.temperature_c == doctest::Approx(71.0));
    CHECK(*rocm.memory_mb == doctest::Approx(16368.0));

    CHECK_THROWS_AS(parse_nvml_csv_row("0", 0), ParseError);
    CHECK_THROWS_AS(parse_rocm_csv_row("0, watts", 0), ParseError);
}

TEST_CASE("make_backend parses specs") {
    auto synth = make_backend("synthetic:watts=42,devices=2,seed=9");
    auto samples = synth->poll();
    REQUIRE(samples.size() == 2);
    CHECK(samples[0].power_watts == 42.0);
    CHECK(synth->descriptor().kind == BackendKind::Synthetic);

    CHECK_THROWS_AS(make_backend("quantum:foo"), BackendUnavailable);
    CHECK_THROWS_AS(make_backend("replay:"), BackendUnavailable);
}

TEST_CASE("replay fixture trace integrates to constant 100 W totals") {
    ReplayBackend backend(std::string(WATTPROF_FIXTURE_DIR) + "/replay_trace.csv");
    auto trace = Sampler(backend).drain();
    REQUIRE(trace.samples.size() == 241);
    CHECK(trace.samples[0].total_power_watts == 100.0);
    CHECK(trace.samples[0].device_count == 2);
    double j = integrate_energy(trace, 0, 2'000'000'000);
    CHECK(j == doctest::Approx(200.0).epsilon(1e-12));
}
