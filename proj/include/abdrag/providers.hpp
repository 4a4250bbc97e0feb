#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "abdrag/errors.hpp"
#include "abdrag/text.hpp"

namespace abdrag {

/// Three-way entailment verdict. Components form a probability simplex.
struct NliVerdict {
    double entail = 0.0;
    double neutral = 1.0;
    double contradiction = 0.0;

    /// Rejects verdicts outside the simplex (tolerance 1e-6 on the sum).
    void validate() const {
        auto in01 = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
        if (!in01(entail) || !in01(neutral) || !in01(contradiction))
            throw ProviderError("nli verdict component outside [0,1]");
        if (std::abs(entail + neutral + contradiction - 1.0) > 1e-6)
            throw ProviderError("nli verdict does not sum to 1");
    }
};

struct GenerationRequest {
    std::string prompt;
    int max_candidates = 4;
    double temperature = 0.7;
};

/// Text generation backend. The public wrapper normalizes raw completions:
/// whitespace-only ones are dropped, duplicates keep their first occurrence,
/// and the list is truncated to max_candidates. If normalization leaves
/// nothing, the call is retried once; a second empty round raises
/// EmptyCompletionError. Implementations override do_generate only.
class GenerationProvider {
public:
    virtual ~GenerationProvider() = default;

    std::vector<std::string> generate(const GenerationRequest& req) const {
        if (req.max_candidates < 1)
            throw std::invalid_argument("generate: max_candidates must be >= 1");
        for (int attempt = 0; attempt < 2; ++attempt) {
            auto raw = do_generate(req);
            std::vector<std::string> out;
            std::set<std::string> seen;
            for (const auto& c : raw) {
                if (trim(c).empty()) continue;
                if (!seen.insert(c).second) continue;
                out.push_back(c);
                if (out.size() == static_cast<std::size_t>(req.max_candidates)) break;
            }
            if (!out.empty()) return out;
        }
        throw EmptyCompletionError("no usable completion after retry");
    }

private:
    virtual std::vector<std::string> do_generate(const GenerationRequest& req) const = 0;
};

/// Entailment backend. The public wrapper validates every verdict, so a
/// misbehaving implementation surfaces as ProviderError at the call site.
class NliProvider {
public:
    virtual ~NliProvider() = default;

    NliVerdict classify(const std::string& premise, const std::string& hypothesis) const {
        NliVerdict v = do_classify(premise, hypothesis);
        v.validate();
        return v;
    }

private:
    virtual NliVerdict do_classify(const std::string& premise,
                                   const std::string& hypothesis) const = 0;
};

// ---------------------------------------------------------------------------
// Mock providers. Pure functions of their inputs: no state, no randomness,
// no clock — identical calls give identical results, across threads too.
// ---------------------------------------------------------------------------

/// One canned-response rule: fires when every needle in `contains` occurs
/// in the prompt.
struct MockEntry {
    std::vector<std::string> contains;
    std::vector<std::string> responses;
};

/// Table-driven generator. First matching entry wins; a prompt matching no
/// entry yields {"UNKNOWN"} so callers always see some completion.
class MockGenerationProvider final : public GenerationProvider {
public:
    explicit MockGenerationProvider(std::vector<MockEntry> table) : table_(std::move(table)) {}

private:
    std::vector<std::string> do_generate(const GenerationRequest& req) const override {
        for (const auto& entry : table_) {
            bool all = true;
            for (const auto& needle : entry.contains)
                if (req.prompt.find(needle) == std::string::npos) { all = false; break; }
            if (all) return entry.responses;
        }
        return {"UNKNOWN"};
    }

    std::vector<MockEntry> table_;
};

/// Mock table file: JSON array of {"contains": [...], "responses": [...]}.
inline std::vector<MockEntry> load_mock_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open mock table: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("mock table parse error: ") + e.what());
    }
    if (!j.is_array()) throw DataError("mock table must be a JSON array");
    std::vector<MockEntry> table;
    for (const auto& je : j) {
        if (!je.is_object() || !je.contains("contains") || !je.contains("responses"))
            throw DataError("mock table entry needs contains and responses");
        MockEntry e;
        for (const auto& s : je.at("contains")) e.contains.push_back(s.get<std::string>());
        for (const auto& s : je.at("responses")) e.responses.push_back(s.get<std::string>());
        table.push_back(std::move(e));
    }
    return table;
}

/// Rule-based entailment stand-in. Scores are functions of token overlap
/// and a literal negation pattern — convenient to hand-compute in tests,
/// deliberately not a semantic model:
///
///   e = min(0.9, |tokens(premise) ∩ tokens(hyp)| / |tokens(hyp)|)
///   c = 0.9 if the hypothesis is some premise sentence with a single
///       "not" inserted, else 0.05
///
/// then (e, c) are renormalized if they exceed the simplex, otherwise the
/// remainder goes to neutral. Entailment is capped at 0.9, so any
/// sufficiency threshold above 0.9 can never be met under this mock.
class MockNliProvider final : public NliProvider {
private:
    NliVerdict do_classify(const std::string& premise,
                           const std::string& hypothesis) const override {
        auto hyp_tokens = tokenize(hypothesis);
        std::set<std::string> hyp_set(hyp_tokens.begin(), hyp_tokens.end());
        auto prem_tokens = tokenize(premise);
        std::set<std::string> prem_set(prem_tokens.begin(), prem_tokens.end());

        double e_raw = 0.0;
        if (!hyp_set.empty()) {
            std::size_t common = 0;
            for (const auto& t : hyp_set)
                if (prem_set.count(t)) ++common;
            e_raw = std::min(0.9, static_cast<double>(common) /
                                      static_cast<double>(hyp_set.size()));
        }

        double c_raw = is_negation_of_sentence(premise, hyp_tokens) ? 0.9 : 0.05;

        NliVerdict v;
        if (e_raw + c_raw <= 1.0) {
            v.entail = e_raw;
            v.contradiction = c_raw;
            v.neutral = std::max(0.0, 1.0 - e_raw - c_raw);
        } else {
            v.entail = e_raw / (e_raw + c_raw);
            v.contradiction = c_raw / (e_raw + c_raw);
            v.neutral = 0.0;
        }
        return v;
    }

    /// True when hyp_tokens equal the token list of some premise sentence
    /// (split on .!?;) with exactly one "not" inserted at any position.
    static bool is_negation_of_sentence(const std::string& premise,
                                        const std::vector<std::string>& hyp_tokens) {
        std::string current;
        auto flush = [&]() {
            auto toks = tokenize(current);
            current.clear();
            return toks;
        };
        std::vector<std::vector<std::string>> sentences;
        for (char ch : premise) {
            if (ch == '.' || ch == '!' || ch == '?' || ch == ';') {
                auto toks = flush();
                if (!toks.empty()) sentences.push_back(std::move(toks));
            } else {
                current.push_back(ch);
            }
        }
        {
            auto toks = flush();
            if (!toks.empty()) sentences.push_back(std::move(toks));
        }

        for (const auto& sent : sentences) {
            if (hyp_tokens.size() != sent.size() + 1) continue;
            for (std::size_t pos = 0; pos <= sent.size(); ++pos) {
                if (hyp_tokens[pos] != "not") continue;
                bool match = true;
                for (std::size_t i = 0; i < sent.size() && match; ++i) {
                    const auto& h = hyp_tokens[i < pos ? i : i + 1];
                    if (h != sent[i]) match = false;
                }
                if (match) return true;
            }
        }
        return false;
    }
};

} // namespace abdrag
