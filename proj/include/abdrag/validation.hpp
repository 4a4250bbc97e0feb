#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "abdrag/config.hpp"
#include "abdrag/providers.hpp"
#include "abdrag/retriever.hpp"
#include "abdrag/types.hpp"

namespace abdrag {

struct ConsistencyResult {
    bool consistent = true;
    double max_contradiction = 0.0;
};

/// A candidate premise is consistent when no evidence passage contradicts
/// it above the threshold. With no evidence there is nothing to contradict,
/// so the result is vacuously consistent with contradiction 0.
inline ConsistencyResult consistency_check(const NliProvider& nli, const EvidenceSet& evidence,
                                           const std::string& premise_text,
                                           double contradiction_threshold) {
    ConsistencyResult r;
    for (const auto& p : evidence.passages)
        r.max_contradiction =
            std::max(r.max_contradiction, nli.classify(p.text, premise_text).contradiction);
    r.consistent = !(r.max_contradiction > contradiction_threshold);
    return r;
}

/// How strongly the evidence supports the candidate: max entailment of the
/// candidate across passages, 0 for empty evidence.
inline double evidence_entailment(const NliProvider& nli, const EvidenceSet& evidence,
                                  const std::string& premise_text) {
    double best = 0.0;
    for (const auto& p : evidence.passages)
        best = std::max(best, nli.classify(p.text, premise_text).entail);
    return best;
}

/// Combined candidate score: alpha * entailment + beta * plausibility.
/// Both inputs must already be in [0,1]; the weights come validated from
/// the config, so the result is bounded by alpha + beta.
inline double score_premise(double entail, double plaus, double alpha, double beta) {
    auto in01 = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
    if (!in01(entail)) throw std::invalid_argument("score_premise: entail outside [0,1]");
    if (!in01(plaus)) throw std::invalid_argument("score_premise: plausibility outside [0,1]");
    if (!(alpha >= 0.0) || !(beta >= 0.0))
        throw std::invalid_argument("score_premise: weights must be non-negative");
    return alpha * entail + beta * plaus;
}

/// Scores one candidate against the evidence and the corpus. When
/// premise retrieval is disabled the plausibility term is 0 and the score
/// reduces to weighted entailment.
inline PremiseCandidate validate_candidate(const NliProvider& nli, const Index& index,
                                           const EvidenceSet& evidence, const std::string& text,
                                           const PipelineConfig& cfg) {
    PremiseCandidate c;
    c.text = text;
    auto cons = consistency_check(nli, evidence, text, cfg.contradiction_threshold);
    c.consistent = cons.consistent;
    c.entail = evidence_entailment(nli, evidence, text);
    c.plausibility = cfg.premise_retrieval ? plausibility(index, text) : 0.0;
    c.score = score_premise(c.entail, c.plausibility, cfg.alpha, cfg.beta);
    return c;
}

/// Validates every candidate. A provider failure while validating one
/// candidate degrades that candidate (inconsistent, score 0, error text
/// recorded) instead of aborting the batch — the other candidates still
/// compete.
inline std::vector<PremiseCandidate> validate_candidates(const NliProvider& nli,
                                                         const Index& index,
                                                         const EvidenceSet& evidence,
                                                         const std::vector<std::string>& texts,
                                                         const PipelineConfig& cfg) {
    std::vector<PremiseCandidate> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        try {
            out.push_back(validate_candidate(nli, index, evidence, t, cfg));
        } catch (const Error& e) {
            PremiseCandidate c;
            c.text = t;
            c.consistent = false;
            c.entail = 0.0;
            c.plausibility = 0.0;
            c.score = 0.0;
            c.error = e.what();
            out.push_back(std::move(c));
        }
    }
    return out;
}

/// Picks the winning candidate: highest score among consistent ones, ties
/// broken by lexicographically smallest text. Inconsistent candidates are
/// never selectable. Returns nothing when no candidate survives.
inline std::optional<std::size_t> select_best(const std::vector<PremiseCandidate>& candidates) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        if (!c.consistent) continue;
        if (!best) {
            best = i;
            continue;
        }
        const auto& b = candidates[*best];
        if (c.score > b.score || (c.score == b.score && c.text < b.text)) best = i;
    }
    return best;
}

} // namespace abdrag
