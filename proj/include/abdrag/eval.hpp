#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "abdrag/errors.hpp"
#include "abdrag/pipeline.hpp"
#include "abdrag/text.hpp"
#include "abdrag/types.hpp"

namespace abdrag {

/// Answer normalization for matching: ASCII lowercase, ASCII punctuation
/// deleted, standalone articles (a, an, the) dropped, whitespace collapsed.
inline std::string normalize_answer(const std::string& s) {
    std::string lowered;
    lowered.reserve(s.size());
    for (char ch : s) {
        unsigned char u = static_cast<unsigned char>(ch);
        if (u < 128 && std::ispunct(u)) continue;
        lowered.push_back(u < 128 ? static_cast<char>(std::tolower(u)) : ch);
    }
    std::string out;
    std::string tok;
    auto flush = [&]() {
        if (tok.empty()) return;
        if (tok != "a" && tok != "an" && tok != "the") {
            if (!out.empty()) out += ' ';
            out += tok;
        }
        tok.clear();
    };
    for (char ch : lowered) {
        unsigned char u = static_cast<unsigned char>(ch);
        if (u < 128 && std::isspace(u))
            flush();
        else
            tok.push_back(ch);
    }
    flush();
    return out;
}

inline std::vector<std::string> answer_tokens(const std::string& s) {
    std::vector<std::string> toks;
    std::string norm = normalize_answer(s);
    std::string cur;
    for (char ch : norm) {
        if (ch == ' ') {
            if (!cur.empty()) toks.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) toks.push_back(std::move(cur));
    return toks;
}

/// 1.0 when the normalized prediction equals any normalized gold answer.
inline double exact_match(const std::string& prediction, const std::vector<std::string>& golds) {
    if (golds.empty()) throw std::invalid_argument("exact_match: no gold answers");
    std::string p = normalize_answer(prediction);
    for (const auto& g : golds)
        if (p == normalize_answer(g)) return 1.0;
    return 0.0;
}

/// Token-overlap F1 against one gold answer: multiset intersection of the
/// normalized tokens. Both sides empty scores 1, exactly one side empty
/// scores 0.
inline double f1_single(const std::string& prediction, const std::string& gold) {
    auto p = answer_tokens(prediction);
    auto g = answer_tokens(gold);
    if (p.empty() && g.empty()) return 1.0;
    if (p.empty() || g.empty()) return 0.0;
    std::multiset<std::string> gset(g.begin(), g.end());
    std::size_t common = 0;
    for (const auto& t : p) {
        auto it = gset.find(t);
        if (it != gset.end()) {
            gset.erase(it);
            ++common;
        }
    }
    if (common == 0) return 0.0;
    double precision = static_cast<double>(common) / static_cast<double>(p.size());
    double recall = static_cast<double>(common) / static_cast<double>(g.size());
    return 2.0 * precision * recall / (precision + recall);
}

/// Best F1 over the gold answers.
inline double f1(const std::string& prediction, const std::vector<std::string>& golds) {
    if (golds.empty()) throw std::invalid_argument("f1: no gold answers");
    double best = 0.0;
    for (const auto& g : golds) best = std::max(best, f1_single(prediction, g));
    return best;
}

// ---------------------------------------------------------------------------
// Dataset: one JSON object per line, {"id","question","answers"[,
// "gold_evidence_ids"][, "plausibility_annotation"]}. The annotation is a
// 1-5 human rating carried through to the report untouched.
// ---------------------------------------------------------------------------

struct DatasetItem {
    Query query;
    std::vector<std::string> gold_evidence_ids;
    std::optional<int> plausibility_annotation;
};

inline std::vector<DatasetItem> load_dataset_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path);
    std::vector<DatasetItem> out;
    std::set<std::string> ids;
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
            throw DataError("dataset parse error at line " + std::to_string(lineno) + ": " +
                            e.what());
        }
        auto fail = [&](const std::string& why) {
            throw DataError("dataset line " + std::to_string(lineno) + ": " + why);
        };
        if (!j.is_object() || !j.contains("id") || !j.contains("question") ||
            !j.contains("answers"))
            fail("expected object with id, question, answers");
        DatasetItem item;
        try {
            item.query.id = j.at("id").get<std::string>();
            item.query.text = j.at("question").get<std::string>();
            for (const auto& a : j.at("answers"))
                item.query.gold_answers.push_back(a.get<std::string>());
            if (j.contains("gold_evidence_ids"))
                for (const auto& g : j.at("gold_evidence_ids"))
                    item.gold_evidence_ids.push_back(g.get<std::string>());
            if (j.contains("plausibility_annotation")) {
                int v = j.at("plausibility_annotation").get<int>();
                if (v < 1 || v > 5) fail("plausibility_annotation must be in 1..5");
                item.plausibility_annotation = v;
            }
        } catch (const nlohmann::json::exception& e) {
            fail(e.what());
        }
        if (item.query.id.empty()) fail("empty id");
        if (item.query.gold_answers.empty()) fail("answers must be non-empty");
        if (!ids.insert(item.query.id).second) fail("duplicate query id: " + item.query.id);
        out.push_back(std::move(item));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation run.
// ---------------------------------------------------------------------------

struct EvalRow {
    std::string id;
    Branch branch = Branch::Direct;
    double em = 0.0;
    double f1 = 0.0;
    bool contradicted = false;
    std::optional<int> plausibility_annotation;
    std::optional<std::string> error;
};

struct EvalReport {
    std::size_t n_queries = 0;
    bool empty = true;
    double em = 0.0;
    double f1 = 0.0;
    double contradiction_rate = 0.0;
    double abduction_trigger_rate = 0.0;
    std::vector<EvalRow> rows;
    std::vector<QueryTrace> traces; // one per row, same order
};

namespace detail {

/// Does any originally retrieved passage contradict the answer? Measured
/// against pre-augmentation evidence on purpose: adopted premises must not
/// be allowed to vouch for the answer they produced.
inline bool answer_contradicted(const NliProvider& nli, const EvidenceSet& retrieved,
                                const std::string& answer, double threshold) {
    for (const auto& p : retrieved.passages)
        if (nli.classify(p.text, answer).contradiction > threshold) return true;
    return false;
}

inline void eval_one(const Index& index, const GenerationProvider& gen, const NliProvider& nli,
                     const DatasetItem& item, const PipelineConfig& cfg, EvalRow& row,
                     QueryTrace& trace) {
    row.id = item.query.id;
    row.plausibility_annotation = item.plausibility_annotation;
    try {
        RunResult res = run_query(index, gen, nli, item.query, cfg);
        trace = std::move(res.trace);
        row.branch = trace.branch;
        row.em = exact_match(res.answer, item.query.gold_answers);
        row.f1 = f1(res.answer, item.query.gold_answers);
        row.contradicted =
            answer_contradicted(nli, res.retrieved, res.answer, cfg.contradiction_threshold);
    } catch (const Error& e) {
        row.error = e.what();
        trace.query_id = item.query.id;
        trace.error = e.what();
    }
}

} // namespace detail

/// Evaluates the pipeline over a dataset. Rows and traces come back in
/// dataset order no matter how many worker threads run; a failed query
/// becomes an error row (metrics 0) without sinking the batch. Aggregates
/// are plain means over rows; an empty dataset reports zeros and says so.
inline EvalReport run_eval(const Index& index, const GenerationProvider& gen,
                           const NliProvider& nli, const std::vector<DatasetItem>& items,
                           const PipelineConfig& cfg, int jobs = 1) {
    if (jobs < 1) throw std::invalid_argument("run_eval: jobs must be >= 1");
    EvalReport report;
    report.n_queries = items.size();
    report.empty = items.empty();
    report.rows.resize(items.size());
    report.traces.resize(items.size());
    if (items.empty()) return report;

    auto worker_body = [&](std::size_t i) {
        detail::eval_one(index, gen, nli, items[i], cfg, report.rows[i], report.traces[i]);
    };

    if (jobs == 1 || items.size() == 1) {
        for (std::size_t i = 0; i < items.size(); ++i) worker_body(i);
    } else {
        std::atomic<std::size_t> next{0};
        auto loop = [&]() {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= items.size()) return;
                worker_body(i);
            }
        };
        std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(jobs),
                                                      items.size());
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(loop);
        for (auto& th : pool) th.join();
    }

    double em_sum = 0.0, f1_sum = 0.0;
    std::size_t contradicted = 0, triggered = 0;
    for (const auto& row : report.rows) {
        em_sum += row.em;
        f1_sum += row.f1;
        if (row.contradicted) ++contradicted;
        if (row.branch != Branch::Direct) ++triggered;
    }
    const double n = static_cast<double>(report.rows.size());
    report.em = em_sum / n;
    report.f1 = f1_sum / n;
    report.contradiction_rate = static_cast<double>(contradicted) / n;
    report.abduction_trigger_rate = static_cast<double>(triggered) / n;
    return report;
}

inline nlohmann::ordered_json report_to_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["n_queries"] = report.n_queries;
    j["empty"] = report.empty;
    j["em"] = report.em;
    j["f1"] = report.f1;
    j["contradiction_rate"] = report.contradiction_rate;
    j["abduction_trigger_rate"] = report.abduction_trigger_rate;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : report.rows) {
        nlohmann::ordered_json jr;
        jr["id"] = row.id;
        jr["branch"] = to_string(row.branch);
        jr["em"] = row.em;
        jr["f1"] = row.f1;
        jr["contradicted"] = row.contradicted;
        if (row.plausibility_annotation)
            jr["plausibility_annotation"] = *row.plausibility_annotation;
        else
            jr["plausibility_annotation"] = nullptr;
        if (row.error) jr["error"] = *row.error;
        rows.push_back(std::move(jr));
    }
    j["rows"] = std::move(rows);
    return j;
}

/// Runs the evaluation and writes both artifacts: the aggregate report as
/// pretty-printed JSON and the per-query traces as JSONL. Both files are
/// byte-stable for deterministic providers.
inline EvalReport run_eval_to_files(const Index& index, const GenerationProvider& gen,
                                    const NliProvider& nli,
                                    const std::vector<DatasetItem>& items,
                                    const PipelineConfig& cfg, int jobs,
                                    const std::string& report_path,
                                    const std::string& trace_path) {
    EvalReport report = run_eval(index, gen, nli, items, cfg, jobs);
    {
        std::ofstream out(report_path);
        if (!out) throw DataError("cannot write report file: " + report_path);
        out << report_to_json(report).dump(2) << "\n";
    }
    {
        std::ofstream out(trace_path);
        if (!out) throw DataError("cannot write trace file: " + trace_path);
        for (const auto& t : report.traces) out << trace_to_json(t).dump() << "\n";
    }
    return report;
}

} // namespace abdrag
