#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "abdrag/errors.hpp"
#include "abdrag/text.hpp"

namespace abdrag {

/// One retrievable evidence unit. `id` is unique within a corpus, `text` is
/// non-empty after trimming, `title` may be empty.
struct Passage {
    std::string id;
    std::string title;
    std::string text;

    bool operator==(const Passage&) const = default;
};

struct Query {
    std::string id;
    std::string text;
    std::vector<std::string> gold_answers; // may be empty at inference time

    bool operator==(const Query&) const = default;
};

/// Passages paired with their retrieval scores. Sets built by retrieval are
/// sorted by descending score (ties by ascending id); merged sets keep the
/// base set's order and append unseen passages, since scores from different
/// retrieval runs are not comparable.
struct EvidenceSet {
    std::vector<Passage> passages;
    std::vector<double> retrieval_scores;

    bool empty() const { return passages.empty(); }
    std::size_t size() const { return passages.size(); }

    /// Structural invariants shared by every evidence set: equal lengths,
    /// unique ids, non-negative scores.
    void validate_basic() const {
        if (passages.size() != retrieval_scores.size())
            throw DataError("evidence set: passages and scores differ in length");
        std::set<std::string> seen;
        for (const auto& p : passages)
            if (!seen.insert(p.id).second)
                throw DataError("evidence set: duplicate passage id: " + p.id);
        for (double s : retrieval_scores)
            if (!(s >= 0.0))
                throw DataError("evidence set: negative retrieval score");
    }

    /// Builds a retrieval-ranked set and enforces descending score order.
    static EvidenceSet ranked(std::vector<std::pair<Passage, double>> hits) {
        EvidenceSet ev;
        ev.passages.reserve(hits.size());
        ev.retrieval_scores.reserve(hits.size());
        for (auto& [p, s] : hits) {
            ev.passages.push_back(std::move(p));
            ev.retrieval_scores.push_back(s);
        }
        ev.validate_basic();
        for (std::size_t i = 1; i < ev.retrieval_scores.size(); ++i)
            if (ev.retrieval_scores[i - 1] < ev.retrieval_scores[i])
                throw DataError("evidence set: scores not in descending order");
        return ev;
    }

    /// Appends passages from `extra` whose ids are not in `base`. Never
    /// removes or reorders the base passages.
    static EvidenceSet merged(const EvidenceSet& base, const EvidenceSet& extra) {
        EvidenceSet out = base;
        std::set<std::string> ids;
        for (const auto& p : base.passages) ids.insert(p.id);
        for (std::size_t i = 0; i < extra.passages.size(); ++i) {
            if (ids.insert(extra.passages[i].id).second) {
                out.passages.push_back(extra.passages[i]);
                out.retrieval_scores.push_back(extra.retrieval_scores[i]);
            }
        }
        return out;
    }
};

/// A hypothesized missing premise with its validation outcome.
/// `score` is alpha*entail + beta*plausibility; an inconsistent candidate is
/// never selectable regardless of score.
struct PremiseCandidate {
    std::string text;
    double entail = 0.0;        // in [0,1]
    double plausibility = 0.0;  // in [0,1]
    double score = 0.0;         // >= 0
    bool consistent = false;
    std::optional<std::string> error; // set when validation of this candidate failed

    bool operator==(const PremiseCandidate&) const = default;
};

enum class Branch { Direct, Abductive, AbductiveFallback };

inline std::string to_string(Branch b) {
    switch (b) {
        case Branch::Direct: return "direct";
        case Branch::Abductive: return "abductive";
        case Branch::AbductiveFallback: return "abductive_fallback";
    }
    return "direct";
}

inline Branch branch_from_string(const std::string& s) {
    if (s == "direct") return Branch::Direct;
    if (s == "abductive") return Branch::Abductive;
    if (s == "abductive_fallback") return Branch::AbductiveFallback;
    throw DataError("unknown branch: " + s);
}

/// Wall-clock stage timings in milliseconds. Kept out of the serialized
/// trace schema so repeated runs produce byte-identical files.
struct StageTimings {
    double retrieval_ms = 0.0;
    double sufficiency_ms = 0.0;
    double generation_ms = 0.0;
    double validation_ms = 0.0;
    double answering_ms = 0.0;
    double total_ms = 0.0;
};

/// Per-query record of every intermediate pipeline value.
///
/// Invariants:
///   - direct             => no premise, no candidates, unsupported=false
///   - abductive          => premise present, equal to the max-score
///                           consistent candidate (ties: smallest text)
///   - abductive_fallback => no premise, unsupported=true
struct QueryTrace {
    std::string query_id;
    Branch branch = Branch::Direct;
    double sufficiency_score = 0.0;
    std::vector<std::pair<std::string, double>> retrieved; // (id, score)
    std::vector<std::string> augmented_ids;                // ids added by premise retrieval
    std::vector<std::string> premises;                     // generator output after cleanup
    std::vector<PremiseCandidate> candidates;
    std::optional<std::string> selected_premise;
    std::string answer;
    bool unsupported = false;
    std::optional<std::string> error;
    StageTimings timings; // excluded from serialization
};

} // namespace abdrag
