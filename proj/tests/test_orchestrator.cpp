#include <doctest.h>

#include <cmath>
#include <random>

#include "wattprof/orchestrator.hpp"

using namespace wattprof;

namespace {

QuerySpec query_of(const std::string& prompt) {
    QuerySpec q;
    q.query_id = "q";
    q.prompt = prompt;
    return q;
}

PowerTrace constant_trace(double watts, double seconds) {
    PowerTrace t;
    for (int64_t ts = 0; ts <= int64_t(seconds * 1e9); ts += 50'000'000)
        t.samples.push_back({ts, watts});
    return t;
}

}  // namespace

TEST_CASE("summarize computes the four summary statistics") {
    auto s = summarize({3, 1, 2, 4});
    CHECK(s.min == 1);
    CHECK(s.max == 4);
    CHECK(s.avg == doctest::Approx(2.5));
    CHECK(s.median == doctest::Approx(2.5));
    auto odd = summarize({5, 1, 3});
    CHECK(odd.median == 3);
}

TEST_CASE("estimate_flops formula and guards") {
    CHECK(estimate_flops(8e9, 1000, 500) == doctest::Approx(2.4e13).epsilon(1e-12));
    CHECK(estimate_flops(1, 1, 0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(estimate_flops(8e9, 0, 0), OrchestratorError);
    CHECK_THROWS_AS(estimate_flops(0, 10, 10), OrchestratorError);
}

TEST_CASE("run_query: scripted timing maps to TTFT and throughput") {
    SimClock clock;
    MockChatEndpoint endpoint(clock);
    MockChatEndpoint::Script s;
    s.text = "ten token output goes here like so one two three";
    s.ttft_s = 0.2;
    s.total_s = 1.2;
    s.output_tokens = 10;
    s.input_tokens = 5;
    endpoint.push(s);

    auto [gen, window] = run_query(endpoint, query_of("hello"), clock);
    CHECK(*gen.ttft_s == doctest::Approx(0.2));
    CHECK(gen.total_s == doctest::Approx(1.2));
    CHECK(gen.throughput_tokens_per_sec == doctest::Approx(10.0));  // 10 / (1.2 - 0.2)
    CHECK(gen.per_token_ms == doctest::Approx(100.0));
    CHECK(window.end_ns - window.start_ns == 1'200'000'000);
}

TEST_CASE("run_query: usage metadata is copied verbatim") {
    SimClock clock;
    MockChatEndpoint endpoint(clock);
    MockChatEndpoint::Script s;
    s.text = "short";
    s.input_tokens = 100;
    s.output_tokens = 50;
    endpoint.push(s);
    auto [gen, window] = run_query(endpoint, query_of("p"), clock);
    CHECK(gen.input_tokens == 100);
    CHECK(gen.output_tokens == 50);
    CHECK_FALSE(gen.tokens_approximate);
}

TEST_CASE("run_query: missing usage falls back to the flagged estimate") {
    SimClock clock;
    MockChatEndpoint endpoint(clock);
    MockChatEndpoint::Script s;
    s.text = "three word answer";
    endpoint.push(s);
    auto [gen, window] = run_query(endpoint, query_of("two words"), clock);
    CHECK(gen.tokens_approximate);
    CHECK(gen.input_tokens == 2);
    CHECK(gen.output_tokens == 3);
}

TEST_CASE("run_query propagates endpoint errors and guards empty prompts") {
    SimClock clock;
    MockChatEndpoint endpoint(clock);
    MockChatEndpoint::Script fail;
    fail.status = 500;
    fail.text = "internal";
    endpoint.push(fail);
    CHECK_THROWS_AS(run_query(endpoint, query_of("p"), clock), EndpointError);
    CHECK_THROWS_AS(run_query(endpoint, query_of(""), clock), OrchestratorError);
}

TEST_CASE("non-streaming endpoints record TTFT as absent, not zero") {
    SimClock clock;
    MockChatEndpoint endpoint(clock);
    MockChatEndpoint::Script s;
    s.text = "x";
    s.ttft_s = 0.0;  // mock convention for non-streaming
    endpoint.push(s);
    auto [gen, window] = run_query(endpoint, query_of("p"), clock);
    CHECK_FALSE(gen.ttft_s.has_value());
}

TEST_CASE("profile_from_windows: constant source across 10 repeats") {
    auto trace = constant_trace(100.0, 30.0);
    std::vector<Window> windows;
    for (int r = 0; r < 10; ++r) {
        int64_t start = int64_t(r) * 2'000'000'000;
        windows.push_back({start, start + 1'000'000'000});
    }
    auto profile = profile_from_windows(trace, windows, {});
    CHECK(profile.per_query_joules == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(profile.joules_std == doctest::Approx(0.0));
    CHECK(profile.watts.avg == doctest::Approx(100.0));
    CHECK(profile.repeats == 10);
}

TEST_CASE("profile_from_windows: repeats=1 equals the single-window measurement") {
    auto trace = constant_trace(150.0, 5.0);
    auto one = profile_from_windows(trace, {{0, 2'000'000'000}}, {});
    CHECK(one.per_query_joules == doctest::Approx(300.0).epsilon(1e-12));
    CHECK(one.joules_std == 0.0);
    CHECK(one.repeats == 1);
}

TEST_CASE("profile_from_windows: hand mean of two scripted repeats") {
    // 1 s at 100 W, then 1 s at 200 W
    PowerTrace trace;
    for (int64_t ts = 0; ts <= 1'000'000'000; ts += 50'000'000)
        trace.samples.push_back({ts, 100.0});
    for (int64_t ts = 1'050'000'000; ts <= 3'000'000'000; ts += 50'000'000)
        trace.samples.push_back({ts, 200.0});
    std::vector<Window> windows{{0, 1'000'000'000}, {2'000'000'000, 3'000'000'000}};
    auto profile = profile_from_windows(trace, windows, {});
    CHECK(profile.per_query_joules == doctest::Approx(150.0).epsilon(1e-12));
    CHECK(profile.watts.avg == doctest::Approx(150.0).epsilon(1e-12));
    CHECK(profile.joules_std == doctest::Approx(50.0).epsilon(1e-12));
}

TEST_CASE("repeat averaging equals the mean of independent single-repeat profiles") {
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> watts(50.0, 250.0);
    PowerTrace trace;
    for (int64_t ts = 0; ts <= 20'000'000'000; ts += 50'000'000)
        trace.samples.push_back({ts, watts(rng)});

    std::vector<Window> windows;
    for (int r = 0; r < 5; ++r) {
        int64_t start = int64_t(r) * 4'000'000'000 + 100'000'000;
        windows.push_back({start, start + 1'500'000'000});
    }
    auto combined = profile_from_windows(trace, windows, {});
    double mean_j = 0.0, mean_wavg = 0.0;
    for (const auto& w : windows) {
        auto single = profile_from_windows(trace, {w}, {});
        mean_j += single.per_query_joules;
        mean_wavg += single.watts.avg;
    }
    mean_j /= double(windows.size());
    mean_wavg /= double(windows.size());
    CHECK(combined.per_query_joules == doctest::Approx(mean_j).epsilon(1e-12));
    CHECK(combined.watts.avg == doctest::Approx(mean_wavg).epsilon(1e-12));
}

TEST_CASE("energy/latency consistency: joules bounded by watt extremes") {
    std::mt19937_64 rng(73);
    std::uniform_real_distribution<double> watts(10.0, 400.0);
    PowerTrace trace;
    for (int64_t ts = 0; ts <= 10'000'000'000; ts += 50'000'000)
        trace.samples.push_back({ts, watts(rng)});

    for (int trial = 0; trial < 100; ++trial) {
        int64_t start = int64_t(rng() % 8'000'000'000);
        int64_t end = start + 100'000'000 + int64_t(rng() % 1'900'000'000);
        auto p = profile_from_windows(trace, {{start, end}}, {});
        double dt = double(end - start) * 1e-9;
        CHECK(p.per_query_joules <= p.watts.max * dt + 1e-9);
        CHECK(p.per_query_joules >= p.watts.min * dt - 1e-9);
    }
}

TEST_CASE("profiling session over the replay fixture is deterministic") {
    const std::string trace_path = std::string(WATTPROF_FIXTURE_DIR) + "/replay_trace.csv";
    const std::string mock_path = std::string(WATTPROF_FIXTURE_DIR) + "/mock_endpoint.json";

    auto run_once = [&](std::vector<double>& joules) {
        SimClock clock;
        auto endpoint = MockChatEndpoint::from_file(clock, mock_path);
        ReplayBackend backend(trace_path);
        ProfileOptions opts;
        opts.repeats = 2;
        ProfilingSession session(*endpoint, backend, clock, opts);
        for (const auto& prompt :
             {std::string("What is 2 + 2? (A) 3 (B) 4 (C) 5"),
              std::string("What is the capital of France? (A) Paris (B) Rome (C) Madrid"),
              std::string("Which planet is largest? (A) Mars (B) Venus (C) Jupiter")}) {
            auto res = session.profile_query(query_of(prompt));
            joules.push_back(res.profile.per_query_joules);
        }
    };

    std::vector<double> first, second;
    run_once(first);
    run_once(second);
    REQUIRE(first.size() == 3);
    CHECK(first == second);
    // constant 100 W trace: joules = 100 x scripted total_s
    CHECK(first[0] == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(first[1] == doctest::Approx(200.0).epsilon(1e-9));
    CHECK(first[2] == doctest::Approx(150.0).epsilon(1e-9));
}

TEST_CASE("profiling session over a constant synthetic backend") {
    SimClock clock;
    MockChatEndpoint endpoint(clock);
    MockChatEndpoint::Script s;
    s.text = "answer";
    s.total_s = 1.0;
    endpoint.script_for("p", s);  // reused for every repeat

    SyntheticBackend::Config cfg;  // 100 W default
    cfg.budget = 2000;
    SyntheticBackend backend(cfg);
    ProfileOptions opts;
    opts.repeats = 10;
    ProfilingSession session(endpoint, backend, clock, opts);
    auto res = session.profile_query(query_of("p"));
    CHECK(res.profile.per_query_joules == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(res.profile.joules_std == doctest::Approx(0.0));
    CHECK(res.profile.repeats == 10);
}

TEST_CASE("profiling session reports flops when params are configured") {
    SimClock clock;
    auto endpoint = MockChatEndpoint::from_file(
        clock, std::string(WATTPROF_FIXTURE_DIR) + "/mock_endpoint.json");
    ReplayBackend backend(std::string(WATTPROF_FIXTURE_DIR) + "/replay_trace.csv");
    ProfileOptions opts;
    opts.repeats = 1;
    opts.active_params = 14e9;
    ProfilingSession session(*endpoint, backend, clock, opts);
    auto res = session.profile_query(query_of("What is 2 + 2? (A) 3 (B) 4 (C) 5"));
    // usage metadata: 100 in, 50 out
    CHECK(*res.profile.flops_per_request == doctest::Approx(2.0 * 14e9 * 150).epsilon(1e-12));
    CHECK(res.generation.input_tokens == 100);
}

TEST_CASE("a failing repeat aborts the profile with a partial-failure report") {
    SimClock clock;
    MockChatEndpoint endpoint(clock);
    MockChatEndpoint::Script ok;
    ok.text = "fine";
    ok.total_s = 0.5;
    MockChatEndpoint::Script fail;
    fail.status = 500;
    fail.text = "boom";
    endpoint.push(ok);
    endpoint.push(fail);

    ReplayBackend replay(std::string(WATTPROF_FIXTURE_DIR) + "/replay_trace.csv");
    ProfileOptions opts;
    opts.repeats = 3;
    ProfilingSession session(endpoint, replay, clock, opts);
    try {
        session.profile_query(query_of("p"));
        FAIL("expected OrchestratorError");
    } catch (const OrchestratorError& e) {
        std::string what = e.what();
        CHECK(what.find("1 completed") != std::string::npos);
    }
}
