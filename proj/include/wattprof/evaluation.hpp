#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <string>

#include "wattprof/endpoint.hpp"

namespace wattprof {

struct EvaluationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoVerdictFound : EvaluationError {
    using EvaluationError::EvaluationError;
};
struct Unscored : EvaluationError {
    using EvaluationError::EvaluationError;
};

// Five-point pairwise verdict, ordered from A strongest to B strongest.
enum class Verdict { AMuchBetter, ABetter, Tie, BBetter, BMuchBetter };

enum class Side { A, B };

const char* verdict_token(Verdict v);  // "[[A>>B]]" etc.

// Extracts exactly one verdict token from judge output. When the output is
// the prompt's JSON schema, the structured "verdict" field is preferred;
// otherwise the last token occurrence wins (final-answer convention).
// Throws NoVerdictFound.
Verdict parse_verdict(const std::string& judge_output);

// Success iff the local side wins or ties.
bool verdict_to_success(Verdict v, Side local_position);

struct McScore {
    bool success = false;
    bool unparsed = false;  // extraction failed; distinct from a wrong answer
    std::optional<char> extracted;
};

// Last-match extraction over a documented, ordered pattern list:
//   1. "answer is X" / "final answer: X"
//   2. "Answer: X"
//   3. terminal "(X)" or a bare letter line
// restricted to the given alphabet. Throws EvaluationError on extraction
// failure (callers usually want score_multiple_choice instead).
char extract_choice_letter(const std::string& response, const std::set<char>& alphabet);

McScore score_multiple_choice(const std::string& response, char reference_letter,
                              const std::set<char>& alphabet = {'A', 'B', 'C', 'D', 'E',
                                                                'F', 'G', 'H', 'I', 'J'});

struct PairwiseResult {
    Verdict verdict;
    bool success;           // for the local side
    Side local_position;
    std::string judge_model_id;
};

struct JudgeConfig {
    Side local_position = Side::B;  // frontier reference occupies the other side
    std::string judge_model_id;
};

// Fills the pairwise chat-judging template with (query, response_a,
// response_b), requests structured output, parses the verdict.
// Throws EndpointError / Unscored.
PairwiseResult judge_pairwise(const std::string& query, const std::string& response_a,
                              const std::string& response_b, ChatEndpoint& judge,
                              const JudgeConfig& cfg = {});

// Reference-answer True/False judging. Accepts exactly "True"/"False"
// (surrounding whitespace tolerated); anything else throws Unscored.
bool judge_reference(const std::string& question, const std::string& response,
                     const std::string& reference, ChatEndpoint& judge);

// Versioned prompt assets.
std::string pairwise_judge_prompt();
std::string reference_judge_prompt(const std::string& question, const std::string& response,
                                   const std::string& reference);

}  // namespace wattprof
