#pragma once

#include <algorithm>
#include <string>

#include "abdrag/config.hpp"
#include "abdrag/providers.hpp"
#include "abdrag/types.hpp"

namespace abdrag {

struct SufficiencyResult {
    double score = 0.0;  // in [0,1]
    bool sufficient = false;
};

/// How strongly the evidence entails the query, reduced to one number.
/// Default reduction: classify each passage against the query text and take
/// the max entailment. Alternatives (mean aggregation, concatenating the
/// passages into one premise) are config switches. Empty evidence scores 0.
///
/// Treating "evidence entails the question text" as a sufficiency signal is
/// one pragmatic reduction of an underspecified judgment, not the only one;
/// the config knobs exist to make that choice visible.
inline double sufficiency_score(const NliProvider& nli, const EvidenceSet& evidence,
                                const std::string& query_text, const PipelineConfig& cfg) {
    if (evidence.passages.empty()) return 0.0;

    if (cfg.sufficiency_concat) {
        std::string joined;
        for (const auto& p : evidence.passages) {
            if (!joined.empty()) joined += " ";
            joined += p.text;
        }
        return nli.classify(joined, query_text).entail;
    }

    double agg = 0.0;
    for (std::size_t i = 0; i < evidence.passages.size(); ++i) {
        double e = nli.classify(evidence.passages[i].text, query_text).entail;
        if (cfg.entail_aggregation == EntailAgg::Max)
            agg = std::max(agg, e);
        else
            agg += e;
    }
    if (cfg.entail_aggregation == EntailAgg::Mean)
        agg /= static_cast<double>(evidence.passages.size());
    return agg;
}

/// The gate: scores at or above the threshold pass straight to answering;
/// anything strictly below triggers premise abduction.
inline bool is_sufficient(double score, double tau) { return score >= tau; }

inline SufficiencyResult assess_sufficiency(const NliProvider& nli, const EvidenceSet& evidence,
                                            const std::string& query_text,
                                            const PipelineConfig& cfg) {
    SufficiencyResult r;
    r.score = sufficiency_score(nli, evidence, query_text, cfg);
    r.sufficient = is_sufficient(r.score, cfg.tau);
    return r;
}

} // namespace abdrag
