#pragma once

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wattprof/clock.hpp"

namespace wattprof {

struct EndpointError : std::runtime_error {
    EndpointError(int status, const std::string& body)
        : std::runtime_error("endpoint error: status " + std::to_string(status) + ": " + body),
          status(status),
          body(body) {}
    explicit EndpointError(const std::string& what)
        : std::runtime_error(what), status(0) {}
    int status;
    std::string body;
};
struct EndpointTimeout : EndpointError {
    using EndpointError::EndpointError;
};
struct StreamInterrupted : EndpointError {
    using EndpointError::EndpointError;
};

struct DecodingConfig {
    double temperature = 0.6;
    double top_p = 0.95;
    int top_k = 20;
    double min_p = 0.0;
    int max_output_tokens = 32768;
    std::optional<double> repetition_penalty;
    std::optional<double> length_penalty;
};

struct ChatRequest {
    std::string prompt;
    DecodingConfig decoding;
    bool thinking_enabled = false;
    bool want_logprobs = false;
};

struct ChatResponse {
    std::string text;
    std::optional<int> input_tokens;    // from endpoint usage metadata
    std::optional<int> output_tokens;
    std::optional<double> ttft_s;       // absent on non-streaming endpoints
    std::optional<std::vector<double>> token_logprobs;
    std::optional<double> init_duration_s;  // endpoint-reported, when present
};

class ChatEndpoint {
public:
    virtual ~ChatEndpoint() = default;
    virtual ChatResponse complete(const ChatRequest& req) = 0;
    virtual std::string model_id() const = 0;
};

// OpenAI-compatible chat-completions client. Auth token is read from the
// named environment variable, never passed as a flag.
class HttpChatEndpoint final : public ChatEndpoint {
public:
    struct Config {
        std::string base_url;  // e.g. http://localhost:8000
        std::string model;
        std::string auth_env_var = "WATTPROF_API_KEY";
        bool streaming = true;
        int timeout_s = 600;
    };

    explicit HttpChatEndpoint(Config cfg);
    ChatResponse complete(const ChatRequest& req) override;
    std::string model_id() const override { return cfg_.model; }

private:
    Config cfg_;
};

// Deterministic scripted endpoint used by the test suite and the CLI's
// mock:// scheme. Advances a SimClock by scripted timings instead of
// doing real work.
class MockChatEndpoint final : public ChatEndpoint {
public:
    struct Script {
        std::string text;
        double ttft_s = 0.0;    // 0 => reported absent (non-streaming)
        double total_s = 0.1;
        std::optional<int> input_tokens;
        std::optional<int> output_tokens;
        std::optional<std::vector<double>> token_logprobs;
        int status = 200;       // non-200 raises EndpointError
    };

    MockChatEndpoint(Clock& clock, std::string model = "mock-model")
        : clock_(clock), model_(std::move(model)) {}

    // Responses matched by exact query text, with a sequential fallback queue.
    void script_for(const std::string& prompt, Script s) { by_prompt_[prompt] = std::move(s); }
    void push(Script s) { queue_.push_back(std::move(s)); }

    // Loads a JSON script file: {"model": ..., "responses": [{"prompt":..., ...}]}
    static std::unique_ptr<MockChatEndpoint> from_file(Clock& clock, const std::string& path);

    ChatResponse complete(const ChatRequest& req) override;
    std::string model_id() const override { return model_; }

private:
    Clock& clock_;
    std::string model_;
    std::map<std::string, Script> by_prompt_;
    std::deque<Script> queue_;
};

// "mock:<script.json>" or "http(s)://host[/|,model=...,auth_env=...]".
std::unique_ptr<ChatEndpoint> make_endpoint(const std::string& spec, Clock& clock);

// Whitespace-delimited token estimate used when the endpoint reports no
// usage metadata; always flagged approximate by callers.
int approx_token_count(const std::string& text);

}  // namespace wattprof
