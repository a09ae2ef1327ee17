#include "wattprof/endpoint.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace wattprof {

using json = nlohmann::json;

int approx_token_count(const std::string& text) {
    std::istringstream ss(text);
    std::string word;
    int n = 0;
    while (ss >> word) ++n;
    return n;
}

// ---------------------------------------------------------------------------
// HttpChatEndpoint

HttpChatEndpoint::HttpChatEndpoint(Config cfg) : cfg_(std::move(cfg)) {}

ChatResponse HttpChatEndpoint::complete(const ChatRequest& req) {
    json body = {
        {"model", cfg_.model},
        {"messages", json::array({{{"role", "user"}, {"content", req.prompt}}})},
        {"temperature", req.decoding.temperature},
        {"top_p", req.decoding.top_p},
        {"top_k", req.decoding.top_k},
        {"min_p", req.decoding.min_p},
        {"max_tokens", req.decoding.max_output_tokens},
    };
    if (req.decoding.repetition_penalty) body["repetition_penalty"] = *req.decoding.repetition_penalty;
    if (req.decoding.length_penalty) body["length_penalty"] = *req.decoding.length_penalty;
    if (req.want_logprobs) body["logprobs"] = true;
    if (req.thinking_enabled) body["chat_template_kwargs"] = {{"enable_thinking", true}};
    body["stream"] = cfg_.streaming;

    httplib::Client client(cfg_.base_url);
    client.set_read_timeout(cfg_.timeout_s, 0);
    client.set_connection_timeout(10, 0);
    httplib::Headers headers;
    if (const char* key = std::getenv(cfg_.auth_env_var.c_str()); key && *key)
        headers.emplace("Authorization", std::string("Bearer ") + key);

    ChatResponse resp;
    auto t0 = std::chrono::steady_clock::now();

    if (!cfg_.streaming) {
        auto res = client.Post("/v1/chat/completions", headers, body.dump(), "application/json");
        if (!res) throw EndpointTimeout("endpoint unreachable: " + cfg_.base_url);
        if (res->status != 200) throw EndpointError(res->status, res->body);
        json j = json::parse(res->body);
        resp.text = j["choices"][0]["message"]["content"].get<std::string>();
        if (j.contains("usage")) {
            const auto& u = j["usage"];
            if (u.contains("prompt_tokens")) resp.input_tokens = u["prompt_tokens"].get<int>();
            if (u.contains("completion_tokens")) resp.output_tokens = u["completion_tokens"].get<int>();
        }
        if (j["choices"][0].contains("logprobs") && !j["choices"][0]["logprobs"].is_null()) {
            std::vector<double> lps;
            for (const auto& t : j["choices"][0]["logprobs"]["content"])
                lps.push_back(t["logprob"].get<double>());
            if (!lps.empty()) resp.token_logprobs = std::move(lps);
        }
        return resp;
    }

    // Streaming: SSE "data: {...}" chunks, TTFT at the first content delta.
    body["stream_options"] = {{"include_usage", true}};
    std::string text;
    std::optional<double> ttft;
    std::optional<int> in_tok, out_tok;
    std::vector<double> lps;
    std::string pending;
    bool done = false;

    httplib::Request hreq;
    hreq.method = "POST";
    hreq.path = "/v1/chat/completions";
    hreq.headers = headers;
    hreq.body = body.dump();
    hreq.set_header("Content-Type", "application/json");
    hreq.content_receiver =
        [&](const char* data, size_t len, uint64_t /*offset*/, uint64_t /*total*/) {
            pending.append(data, len);
            size_t nl;
            while ((nl = pending.find('\n')) != std::string::npos) {
                std::string line = pending.substr(0, nl);
                pending.erase(0, nl + 1);
                if (line.rfind("data: ", 0) != 0) continue;
                std::string payload = line.substr(6);
                if (payload == "[DONE]") {
                    done = true;
                    continue;
                }
                json j = json::parse(payload, nullptr, false);
                if (j.is_discarded()) continue;
                if (j.contains("choices") && !j["choices"].empty()) {
                    const auto& d = j["choices"][0]["delta"];
                    if (d.contains("content") && !d["content"].is_null()) {
                        std::string chunk = d["content"].get<std::string>();
                        if (!chunk.empty() && !ttft) {
                            ttft = std::chrono::duration<double>(
                                       std::chrono::steady_clock::now() - t0)
                                       .count();
                        }
                        text += chunk;
                    }
                    if (j["choices"][0].contains("logprobs") &&
                        !j["choices"][0]["logprobs"].is_null()) {
                        for (const auto& t : j["choices"][0]["logprobs"]["content"])
                            lps.push_back(t["logprob"].get<double>());
                    }
                }
                if (j.contains("usage") && !j["usage"].is_null()) {
                    const auto& u = j["usage"];
                    if (u.contains("prompt_tokens")) in_tok = u["prompt_tokens"].get<int>();
                    if (u.contains("completion_tokens"))
                        out_tok = u["completion_tokens"].get<int>();
                }
            }
            return true;
        };
    auto res = client.send(hreq);

    if (!res) throw EndpointTimeout("endpoint unreachable: " + cfg_.base_url);
    if (res->status != 200) throw EndpointError(res->status, res->body);
    if (!done && text.empty()) throw StreamInterrupted("stream ended without data");

    resp.text = std::move(text);
    resp.ttft_s = ttft;
    resp.input_tokens = in_tok;
    resp.output_tokens = out_tok;
    if (!lps.empty()) resp.token_logprobs = std::move(lps);
    return resp;
}

// ---------------------------------------------------------------------------
// MockChatEndpoint

ChatResponse MockChatEndpoint::complete(const ChatRequest& req) {
    Script s;
    if (auto it = by_prompt_.find(req.prompt); it != by_prompt_.end()) {
        s = it->second;
    } else if (!queue_.empty()) {
        s = queue_.front();
        queue_.pop_front();
    } else {
        throw EndpointError("mock endpoint: no script for prompt: " + req.prompt);
    }
    if (s.status != 200) {
        clock_.advance_ns(int64_t(s.total_s * 1e9));
        throw EndpointError(s.status, s.text);
    }
    clock_.advance_ns(int64_t(s.total_s * 1e9));
    ChatResponse resp;
    resp.text = s.text;
    resp.input_tokens = s.input_tokens;
    resp.output_tokens = s.output_tokens;
    if (s.ttft_s > 0.0) resp.ttft_s = s.ttft_s;
    resp.token_logprobs = s.token_logprobs;
    return resp;
}

std::unique_ptr<MockChatEndpoint> MockChatEndpoint::from_file(Clock& clock,
                                                              const std::string& path) {
    std::ifstream in(path);
    if (!in) throw EndpointError("cannot open mock script: " + path);
    json j = json::parse(in);
    auto ep = std::make_unique<MockChatEndpoint>(
        clock, j.value("model", std::string("mock-model")));
    for (const auto& r : j.at("responses")) {
        Script s;
        s.text = r.value("text", std::string());
        s.ttft_s = r.value("ttft_s", 0.0);
        s.total_s = r.value("total_s", 0.1);
        if (r.contains("input_tokens")) s.input_tokens = r["input_tokens"].get<int>();
        if (r.contains("output_tokens")) s.output_tokens = r["output_tokens"].get<int>();
        if (r.contains("token_logprobs"))
            s.token_logprobs = r["token_logprobs"].get<std::vector<double>>();
        s.status = r.value("status", 200);
        if (r.contains("prompt"))
            ep->script_for(r["prompt"].get<std::string>(), std::move(s));
        else
            ep->push(std::move(s));
    }
    return ep;
}

// ---------------------------------------------------------------------------

std::unique_ptr<ChatEndpoint> make_endpoint(const std::string& spec, Clock& clock) {
    if (spec.rfind("mock:", 0) == 0)
        return MockChatEndpoint::from_file(clock, spec.substr(5));
    if (spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0) {
        // url[,model=...][,auth_env=...][,no-stream]
        HttpChatEndpoint::Config cfg;
        std::stringstream ss(spec);
        std::string part;
        bool first = true;
        while (std::getline(ss, part, ',')) {
            if (first) {
                cfg.base_url = part;
                first = false;
                continue;
            }
            auto eq = part.find('=');
            std::string k = eq == std::string::npos ? part : part.substr(0, eq);
            std::string v = eq == std::string::npos ? "" : part.substr(eq + 1);
            if (k == "model") cfg.model = v;
            else if (k == "auth_env") cfg.auth_env_var = v;
            else if (k == "no-stream") cfg.streaming = false;
            else throw EndpointError("unknown endpoint option: " + k);
        }
        return std::make_unique<HttpChatEndpoint>(cfg);
    }
    throw EndpointError("unknown endpoint spec: " + spec +
                        " (expected mock:<file> or http(s)://...)");
}

}  // namespace wattprof
