#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "abdrag/errors.hpp"
#include "abdrag/text.hpp"
#include "abdrag/types.hpp"

namespace abdrag {

/// Okapi BM25 constants. Standard defaults (Trotman et al., OSIR 2012).
inline constexpr double kBm25K1 = 1.2;
inline constexpr double kBm25B = 0.75;

/// Saturation constant of the plausibility map s1/(s1 + c). Chosen so that
/// mid-range BM25 scores stay informative once mapped into [0,1).
inline constexpr double kPlausibilitySaturation = 10.0;

/// Write-once inverted index. Read-shared after build; concurrent retrieval
/// needs no synchronization. Ordered containers keep serialization and
/// iteration deterministic.
struct Index {
    // token -> (passage id, term frequency), ids ascending
    std::map<std::string, std::vector<std::pair<std::string, int>>> postings;
    std::map<std::string, int> doc_lengths; // passage id -> token count
    std::map<std::string, Passage> passages;
    double avg_doc_length = 0.0;
    std::size_t doc_count = 0; // N
};

/// Builds the index from a corpus. Fails on duplicate ids (naming the id)
/// and on passages whose text is empty after trimming. An empty corpus is
/// allowed and yields N = 0.
inline Index build_index(const std::vector<Passage>& corpus) {
    Index idx;
    long long total_len = 0;
    for (const auto& p : corpus) {
        if (p.id.empty()) throw DataError("passage with empty id");
        if (trim(p.text).empty())
            throw DataError("passage has empty text: " + p.id);
        if (!idx.passages.emplace(p.id, p).second)
            throw DataError("duplicate passage id: " + p.id);

        auto tokens = tokenize(p.text);
        idx.doc_lengths[p.id] = static_cast<int>(tokens.size());
        total_len += static_cast<long long>(tokens.size());

        std::map<std::string, int> tf;
        for (const auto& t : tokens) ++tf[t];
        for (const auto& [tok, f] : tf) idx.postings[tok].emplace_back(p.id, f);
    }
    // Posting lists id-ascending regardless of corpus order.
    for (auto& [tok, list] : idx.postings)
        std::sort(list.begin(), list.end());
    idx.doc_count = idx.passages.size();
    idx.avg_doc_length =
        idx.doc_count == 0 ? 0.0
                           : static_cast<double>(total_len) / static_cast<double>(idx.doc_count);
    return idx;
}

/// BM25 score of one passage against a token list, with
/// idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)).
/// Query tokens are processed in list order, duplicates contributing once
/// per occurrence. Zero when no query token occurs in the passage.
inline double bm25_score(const Index& index, const std::vector<std::string>& query_tokens,
                         const std::string& id) {
    auto dl_it = index.doc_lengths.find(id);
    if (dl_it == index.doc_lengths.end())
        throw DataError("unknown passage id: " + id);
    const double dl = static_cast<double>(dl_it->second);

    double score = 0.0;
    for (const auto& tok : query_tokens) {
        auto p_it = index.postings.find(tok);
        if (p_it == index.postings.end()) continue;
        const auto& list = p_it->second;
        auto e = std::lower_bound(list.begin(), list.end(), id,
                                  [](const auto& entry, const std::string& key) {
                                      return entry.first < key;
                                  });
        if (e == list.end() || e->first != id) continue;
        const double tf = static_cast<double>(e->second);
        const double df = static_cast<double>(list.size());
        const double n = static_cast<double>(index.doc_count);
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        const double denom =
            tf + kBm25K1 * (1.0 - kBm25B + kBm25B * dl / index.avg_doc_length);
        score += idf * (tf * (kBm25K1 + 1.0)) / denom;
    }
    return score;
}

/// Top-k retrieval: descending score, ties by ascending passage id,
/// zero-score passages excluded, at most k results.
inline EvidenceSet retrieve(const Index& index, const std::string& query_text, int k) {
    if (k < 1) throw std::invalid_argument("retrieve: k must be >= 1");
    auto tokens = tokenize(query_text);

    std::set<std::string> candidates;
    for (const auto& tok : tokens) {
        auto it = index.postings.find(tok);
        if (it == index.postings.end()) continue;
        for (const auto& [id, tf] : it->second) candidates.insert(id);
    }

    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(candidates.size());
    for (const auto& id : candidates) {
        double s = bm25_score(index, tokens, id);
        if (s > 0.0) scored.emplace_back(id, s);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (scored.size() > static_cast<std::size_t>(k)) scored.resize(static_cast<std::size_t>(k));

    std::vector<std::pair<Passage, double>> hits;
    hits.reserve(scored.size());
    for (const auto& [id, s] : scored) hits.emplace_back(index.passages.at(id), s);
    return EvidenceSet::ranked(std::move(hits));
}

/// Top-1 BM25 score of arbitrary text against the corpus; 0 when no match.
inline double retrieve_top1_score(const Index& index, const std::string& text) {
    auto tokens = tokenize(text);
    std::set<std::string> candidates;
    for (const auto& tok : tokens) {
        auto it = index.postings.find(tok);
        if (it == index.postings.end()) continue;
        for (const auto& [id, tf] : it->second) candidates.insert(id);
    }
    double best = 0.0;
    for (const auto& id : candidates) best = std::max(best, bm25_score(index, tokens, id));
    return best;
}

/// Corpus-grounded support for a premise: r = s1 / (s1 + 10) where s1 is
/// the top-1 BM25 score of the premise against the corpus. Bounded in
/// [0,1), strictly monotone in s1, and 0 when nothing matches.
///
/// This saturating map is this artifact's own definition of a premise
/// plausibility score; it is not a semantic measure.
inline double plausibility(const Index& index, const std::string& premise_text) {
    const double s1 = retrieve_top1_score(index, premise_text);
    return s1 / (s1 + kPlausibilitySaturation);
}

// ---------------------------------------------------------------------------
// Corpus file: one JSON object per line with fields {"id","title","text"};
// "title" optional. UTF-8. Lines beginning with '#' and blank lines ignored.
// ---------------------------------------------------------------------------

inline std::vector<Passage> load_corpus_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file: " + path);
    std::vector<Passage> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(t);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("corpus parse error at line " + std::to_string(lineno) + ": " +
                            e.what());
        }
        if (!j.is_object() || !j.contains("id") || !j.contains("text") ||
            !j["id"].is_string() || !j["text"].is_string())
            throw DataError("corpus line " + std::to_string(lineno) +
                            ": expected object with string fields id, text");
        Passage p;
        p.id = j["id"].get<std::string>();
        p.text = j["text"].get<std::string>();
        if (j.contains("title")) {
            if (!j["title"].is_string())
                throw DataError("corpus line " + std::to_string(lineno) + ": title must be a string");
            p.title = j["title"].get<std::string>();
        }
        if (trim(p.text).empty())
            throw DataError("corpus line " + std::to_string(lineno) + ": empty text for id " + p.id);
        out.push_back(std::move(p));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Index file: single JSON document holding passages, postings, and stats.
// Keys are emitted in sorted order; the file is deterministic for a given
// corpus.
// ---------------------------------------------------------------------------

inline void save_index(const Index& index, const std::string& path) {
    nlohmann::ordered_json j;
    j["format"] = "abdrag-index";
    j["version"] = 1;
    j["doc_count"] = index.doc_count;
    j["avg_doc_length"] = index.avg_doc_length;
    nlohmann::ordered_json passages = nlohmann::ordered_json::array();
    for (const auto& [id, p] : index.passages)
        passages.push_back({{"id", p.id}, {"title", p.title}, {"text", p.text}});
    j["passages"] = std::move(passages);
    nlohmann::ordered_json lengths = nlohmann::ordered_json::object();
    for (const auto& [id, len] : index.doc_lengths) lengths[id] = len;
    j["doc_lengths"] = std::move(lengths);
    nlohmann::ordered_json postings = nlohmann::ordered_json::object();
    for (const auto& [tok, list] : index.postings) {
        nlohmann::ordered_json entries = nlohmann::ordered_json::array();
        for (const auto& [id, tf] : list) entries.push_back({id, tf});
        postings[tok] = std::move(entries);
    }
    j["postings"] = std::move(postings);

    std::ofstream out(path);
    if (!out) throw DataError("cannot write index file: " + path);
    out << j.dump(2) << "\n";
}

inline Index load_index(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open index file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("index parse error: ") + e.what());
    }
    if (!j.is_object() || j.value("format", "") != "abdrag-index")
        throw DataError("not an index file: " + path);

    Index idx;
    try {
        for (const auto& jp : j.at("passages")) {
            Passage p{jp.at("id").get<std::string>(), jp.value("title", ""),
                      jp.at("text").get<std::string>()};
            if (!idx.passages.emplace(p.id, p).second)
                throw DataError("index file: duplicate passage id: " + p.id);
        }
        for (const auto& [id, len] : j.at("doc_lengths").items())
            idx.doc_lengths[id] = len.get<int>();
        for (const auto& [tok, entries] : j.at("postings").items()) {
            auto& list = idx.postings[tok];
            for (const auto& e : entries)
                list.emplace_back(e.at(0).get<std::string>(), e.at(1).get<int>());
        }
        idx.doc_count = j.at("doc_count").get<std::size_t>();
        idx.avg_doc_length = j.at("avg_doc_length").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("index file malformed: ") + e.what());
    }

    // Structural invariants: postings reference known ids, counts line up.
    if (idx.doc_count != idx.passages.size() || idx.doc_lengths.size() != idx.passages.size())
        throw DataError("index file: passage count mismatch");
    for (const auto& [tok, list] : idx.postings)
        for (const auto& [id, tf] : list)
            if (!idx.doc_lengths.count(id))
                throw DataError("index file: posting references unknown id: " + id);
    return idx;
}

} // namespace abdrag
