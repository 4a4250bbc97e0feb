#pragma once

#include <set>
#include <string>
#include <vector>

#include "abdrag/config.hpp"
#include "abdrag/errors.hpp"
#include "abdrag/providers.hpp"
#include "abdrag/text.hpp"
#include "abdrag/types.hpp"

namespace abdrag {

/// Prompt asking the generator to hypothesize what the evidence leaves
/// unstated. Evidence passages are numbered E1..En in rank order.
inline std::string build_abduction_prompt(const std::string& query_text,
                                          const EvidenceSet& evidence) {
    std::string prompt =
        "You are given a question and the evidence retrieved for it.\n";
    prompt += "Question: " + query_text + "\n";
    for (std::size_t i = 0; i < evidence.passages.size(); ++i)
        prompt += "E" + std::to_string(i + 1) + ": " + evidence.passages[i].text + "\n";
    prompt += "What assumption would make reasoning possible?\n";
    prompt += "List each assumption on its own line.";
    return prompt;
}

/// Splits completions into one candidate per non-empty line, trims each,
/// drops duplicates keeping first occurrence, and caps the list at m.
inline std::vector<std::string> parse_candidates(const std::vector<std::string>& completions,
                                                 int m) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& completion : completions) {
        for (const auto& line : split_lines(completion)) {
            std::string c = trim(line);
            if (c.empty()) continue;
            if (!seen.insert(c).second) continue;
            out.push_back(std::move(c));
            if (out.size() == static_cast<std::size_t>(m)) return out;
        }
    }
    return out;
}

/// Produces up to m candidate missing premises for a query whose evidence
/// fell short. Zero candidates is a legitimate outcome — the generator had
/// nothing usable — and is reported as an empty list, not an error, so the
/// caller can fall back to answering without a premise. Provider failures
/// other than empty output propagate.
inline std::vector<std::string> generate_premises(const GenerationProvider& gen,
                                                  const std::string& query_text,
                                                  const EvidenceSet& evidence,
                                                  const PipelineConfig& cfg) {
    GenerationRequest req;
    req.prompt = build_abduction_prompt(query_text, evidence);
    req.temperature = 0.7;

    std::vector<std::string> completions;
    if (cfg.per_sample_generation) {
        // m independent single-completion calls; an empty call just
        // contributes nothing.
        req.max_candidates = 1;
        for (int i = 0; i < cfg.m; ++i) {
            try {
                auto one = gen.generate(req);
                completions.insert(completions.end(), one.begin(), one.end());
            } catch (const EmptyCompletionError&) {
            }
        }
    } else {
        req.max_candidates = cfg.m;
        try {
            completions = gen.generate(req);
        } catch (const EmptyCompletionError&) {
            return {};
        }
    }
    return parse_candidates(completions, cfg.m);
}

} // namespace abdrag
