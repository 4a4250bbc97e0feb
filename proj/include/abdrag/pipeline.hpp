#pragma once

#include <chrono>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "abdrag/abduction.hpp"
#include "abdrag/config.hpp"
#include "abdrag/providers.hpp"
#include "abdrag/retriever.hpp"
#include "abdrag/sufficiency.hpp"
#include "abdrag/types.hpp"
#include "abdrag/validation.hpp"

namespace abdrag {

/// Answer prompt. Evidence is numbered E1..En in rank order; when a premise
/// was adopted it rides along as a declared assumption.
inline std::string build_answer_prompt(const std::string& query_text,
                                       const EvidenceSet& evidence,
                                       const std::optional<std::string>& premise) {
    std::string prompt = "Answer the question using only the evidence.\n";
    prompt += "Question: " + query_text + "\n";
    for (std::size_t i = 0; i < evidence.passages.size(); ++i)
        prompt += "E" + std::to_string(i + 1) + ": " + evidence.passages[i].text + "\n";
    if (premise) prompt += "Assumed premise: " + *premise + "\n";
    prompt += "Answer:";
    return prompt;
}

namespace detail {

inline std::string first_completion(const GenerationProvider& gen, const std::string& prompt) {
    GenerationRequest req;
    req.prompt = prompt;
    req.max_candidates = 1;
    req.temperature = 0.0;
    return trim(gen.generate(req).front());
}

} // namespace detail

/// Answers from the evidence alone.
inline std::string answer_direct(const GenerationProvider& gen, const std::string& query_text,
                                 const EvidenceSet& evidence) {
    return detail::first_completion(gen, build_answer_prompt(query_text, evidence, std::nullopt));
}

/// Answers with an adopted premise spliced into the prompt.
inline std::string answer_with_premise(const GenerationProvider& gen,
                                       const std::string& query_text,
                                       const EvidenceSet& evidence,
                                       const std::string& premise) {
    if (trim(premise).empty())
        throw std::invalid_argument("answer_with_premise: premise must be non-empty");
    return detail::first_completion(gen, build_answer_prompt(query_text, evidence, premise));
}

/// Everything one query produces: the answer, the full decision trace, and
/// the evidence before and after augmentation (identical on the direct
/// branch).
struct RunResult {
    std::string answer;
    QueryTrace trace;
    EvidenceSet retrieved;
    EvidenceSet working;
};

/// One query, end to end:
///
///   retrieve -> sufficiency gate -> [direct answer]
///                                or [abduce premises -> augment evidence
///                                    -> validate -> select -> answer]
///
/// When abduction yields no candidate, or none survives validation, the
/// pipeline still answers — from the evidence it has — and the trace marks
/// that answer unsupported rather than pretending the gap was filled.
inline RunResult run_query(const Index& index, const GenerationProvider& gen,
                           const NliProvider& nli, const Query& query,
                           const PipelineConfig& cfg) {
    using clock = std::chrono::steady_clock;
    auto ms_since = [](clock::time_point t0) {
        return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    };
    const auto t_start = clock::now();

    RunResult r;
    r.trace.query_id = query.id;

    auto t0 = clock::now();
    r.retrieved = retrieve(index, query.text, cfg.k);
    r.trace.timings.retrieval_ms = ms_since(t0);
    for (std::size_t i = 0; i < r.retrieved.passages.size(); ++i)
        r.trace.retrieved.emplace_back(r.retrieved.passages[i].id,
                                       r.retrieved.retrieval_scores[i]);

    t0 = clock::now();
    auto suff = assess_sufficiency(nli, r.retrieved, query.text, cfg);
    r.trace.timings.sufficiency_ms = ms_since(t0);
    r.trace.sufficiency_score = suff.score;

    if (suff.sufficient) {
        r.working = r.retrieved;
        t0 = clock::now();
        r.answer = answer_direct(gen, query.text, r.retrieved);
        r.trace.timings.answering_ms = ms_since(t0);
        r.trace.branch = Branch::Direct;
        r.trace.answer = r.answer;
        r.trace.unsupported = false;
        r.trace.timings.total_ms = ms_since(t_start);
        return r;
    }

    t0 = clock::now();
    r.trace.premises = generate_premises(gen, query.text, r.retrieved, cfg);
    r.trace.timings.generation_ms = ms_since(t0);

    t0 = clock::now();
    r.working = r.retrieved;
    if (!r.trace.premises.empty() && cfg.premise_retrieval) {
        for (const auto& p : r.trace.premises)
            r.working = EvidenceSet::merged(r.working, retrieve(index, p, cfg.k));
        std::set<std::string> original;
        for (const auto& p : r.retrieved.passages) original.insert(p.id);
        for (const auto& p : r.working.passages)
            if (!original.count(p.id)) r.trace.augmented_ids.push_back(p.id);
    }
    if (!r.trace.premises.empty())
        r.trace.candidates = validate_candidates(nli, index, r.working, r.trace.premises, cfg);
    r.trace.timings.validation_ms = ms_since(t0);

    auto sel = select_best(r.trace.candidates);
    t0 = clock::now();
    if (sel) {
        r.trace.branch = Branch::Abductive;
        r.trace.selected_premise = r.trace.candidates[*sel].text;
        r.trace.unsupported = false;
        r.answer = answer_with_premise(gen, query.text, r.working, *r.trace.selected_premise);
    } else {
        r.trace.branch = Branch::AbductiveFallback;
        r.trace.unsupported = true;
        r.answer = answer_direct(gen, query.text, r.working);
    }
    r.trace.timings.answering_ms = ms_since(t0);
    r.trace.answer = r.answer;
    r.trace.timings.total_ms = ms_since(t_start);
    return r;
}

// ---------------------------------------------------------------------------
// Trace serialization. Key order is part of the format (stable across runs
// and platforms); timings are runtime measurements, not outputs, so they
// are deliberately left out.
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json candidate_to_json(const PremiseCandidate& c) {
    nlohmann::ordered_json j;
    j["text"] = c.text;
    j["entail"] = c.entail;
    j["plausibility"] = c.plausibility;
    j["score"] = c.score;
    j["consistent"] = c.consistent;
    if (c.error) j["error"] = *c.error;
    return j;
}

inline nlohmann::ordered_json trace_to_json(const QueryTrace& t) {
    nlohmann::ordered_json j;
    j["query_id"] = t.query_id;
    j["branch"] = to_string(t.branch);
    j["sufficiency_score"] = t.sufficiency_score;
    nlohmann::ordered_json retrieved = nlohmann::ordered_json::array();
    for (const auto& [id, score] : t.retrieved)
        retrieved.push_back({{"id", id}, {"score", score}});
    j["retrieved"] = std::move(retrieved);
    j["augmented_ids"] = t.augmented_ids;
    j["premises"] = t.premises;
    nlohmann::ordered_json cands = nlohmann::ordered_json::array();
    for (const auto& c : t.candidates) cands.push_back(candidate_to_json(c));
    j["candidates"] = std::move(cands);
    if (t.selected_premise)
        j["selected_premise"] = *t.selected_premise;
    else
        j["selected_premise"] = nullptr;
    j["answer"] = t.answer;
    j["unsupported"] = t.unsupported;
    if (t.error) j["error"] = *t.error;
    return j;
}

} // namespace abdrag
