#include "wattprof/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <regex>

#include <nlohmann/json.hpp>

#include "wattprof/assets.hpp"

namespace wattprof {

using json = nlohmann::json;

namespace {

constexpr std::array<std::pair<Verdict, const char*>, 5> kVerdictTokens = {{
    {Verdict::AMuchBetter, "[[A>>B]]"},
    {Verdict::ABetter, "[[A>B]]"},
    {Verdict::Tie, "[[A=B]]"},
    {Verdict::BBetter, "[[B>A]]"},
    {Verdict::BMuchBetter, "[[B>>A]]"},
}};

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    size_t b = s.find_last_not_of(" \t\r\n");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

std::optional<Verdict> last_token_in(const std::string& text) {
    std::optional<Verdict> best;
    size_t best_pos = 0;
    for (const auto& [v, tok] : kVerdictTokens) {
        size_t pos = 0, found = std::string::npos;
        std::string t(tok);
        while ((pos = text.find(t, pos)) != std::string::npos) {
            found = pos;
            pos += t.size();
        }
        if (found != std::string::npos && (!best || found > best_pos)) {
            // [[A>B]] is a prefix-free match problem: [[A>>B]] contains no
            // occurrence of "[[A>B]]", so plain find is safe here.
            best = v;
            best_pos = found;
        }
    }
    return best;
}

}  // namespace

const char* verdict_token(Verdict v) {
    for (const auto& [vv, tok] : kVerdictTokens)
        if (vv == v) return tok;
    return "";
}

Verdict parse_verdict(const std::string& judge_output) {
    // Structured-output field preferred when the judge returns JSON.
    json j = json::parse(judge_output, nullptr, false);
    if (!j.is_discarded() && j.is_object() && j.contains("verdict") &&
        j["verdict"].is_string()) {
        if (auto v = last_token_in(j["verdict"].get<std::string>())) return *v;
    }
    if (auto v = last_token_in(judge_output)) return *v;
    throw NoVerdictFound("no verdict token in judge output");
}

bool verdict_to_success(Verdict v, Side local_position) {
    switch (v) {
        case Verdict::Tie:
            return true;  // win/tie rate counts ties
        case Verdict::AMuchBetter:
        case Verdict::ABetter:
            return local_position == Side::A;
        case Verdict::BBetter:
        case Verdict::BMuchBetter:
            return local_position == Side::B;
    }
    return false;
}

char extract_choice_letter(const std::string& response, const std::set<char>& alphabet) {
    if (alphabet.empty()) throw EvaluationError("extract_choice_letter: empty alphabet");

    auto in_alphabet = [&](char c) {
        return alphabet.count(char(std::toupper(static_cast<unsigned char>(c)))) > 0;
    };

    // Ordered pattern list, last match over the whole response wins.
    // 1. "answer is X" / "final answer: X"   2. "Answer: X"   3. "(X)" / bare letter
    static const std::regex pat(
        R"((?:answer\s+is\s*\(?([A-Za-z])\)?)|(?:answer\s*:\s*\(?([A-Za-z])\)?)|(?:\(([A-Za-z])\)))",
        std::regex::icase);

    std::optional<char> found;
    for (auto it = std::sregex_iterator(response.begin(), response.end(), pat);
         it != std::sregex_iterator(); ++it) {
        for (int g = 1; g <= 3; ++g) {
            if ((*it)[g].matched) {
                char c = char(std::toupper(static_cast<unsigned char>((*it)[g].str()[0])));
                if (in_alphabet(c)) found = c;
            }
        }
    }
    if (found) return *found;

    // Bare letter on its own line (commonly the whole response).
    std::string t = trim(response);
    if (t.size() == 1 && in_alphabet(t[0]))
        return char(std::toupper(static_cast<unsigned char>(t[0])));
    auto nl = t.find_last_of('\n');
    if (nl != std::string::npos) {
        std::string last = trim(t.substr(nl + 1));
        if (last.size() == 1 && in_alphabet(last[0]))
            return char(std::toupper(static_cast<unsigned char>(last[0])));
    }
    throw EvaluationError("extract_choice_letter: no letter found");
}

McScore score_multiple_choice(const std::string& response, char reference_letter,
                              const std::set<char>& alphabet) {
    McScore score;
    char ref = char(std::toupper(static_cast<unsigned char>(reference_letter)));
    if (!alphabet.count(ref))
        throw EvaluationError("score_multiple_choice: reference letter outside alphabet");
    try {
        char got = extract_choice_letter(response, alphabet);
        score.extracted = got;
        score.success = (got == ref);
    } catch (const EvaluationError&) {
        score.success = false;
        score.unparsed = true;  // kept distinct from a wrong answer
    }
    return score;
}

std::string pairwise_judge_prompt() {
    return read_text_file(asset_path("prompts/pairwise_judge.txt"));
}

std::string reference_judge_prompt(const std::string& question, const std::string& response,
                                   const std::string& reference) {
    std::string t = read_text_file(asset_path("prompts/reference_judge.txt"));
    t = fill_template(std::move(t), "question", question);
    t = fill_template(std::move(t), "response", response);
    t = fill_template(std::move(t), "reference", reference);
    return t;
}

PairwiseResult judge_pairwise(const std::string& query, const std::string& response_a,
                              const std::string& response_b, ChatEndpoint& judge,
                              const JudgeConfig& cfg) {
    std::string prompt = pairwise_judge_prompt();
    prompt = fill_template(std::move(prompt), "query", query);
    prompt = fill_template(std::move(prompt), "response_a", response_a);
    prompt = fill_template(std::move(prompt), "response_b", response_b);

    ChatRequest req;
    req.prompt = std::move(prompt);
    ChatResponse resp = judge.complete(req);

    PairwiseResult out;
    try {
        out.verdict = parse_verdict(resp.text);
    } catch (const NoVerdictFound& e) {
        throw Unscored(std::string("judge output unparsable: ") + e.what());
    }
    out.local_position = cfg.local_position;
    out.success = verdict_to_success(out.verdict, cfg.local_position);
    out.judge_model_id = cfg.judge_model_id.empty() ? judge.model_id() : cfg.judge_model_id;
    return out;
}

bool judge_reference(const std::string& question, const std::string& response,
                     const std::string& reference, ChatEndpoint& judge) {
    ChatRequest req;
    req.prompt = reference_judge_prompt(question, response, reference);
    ChatResponse resp = judge.complete(req);
    std::string t = trim(resp.text);
    if (t == "True") return true;
    if (t == "False") return false;
    throw Unscored("reference judge returned non-boolean output: " + t);
}

}  // namespace wattprof
