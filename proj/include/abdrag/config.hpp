#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "abdrag/errors.hpp"
#include "abdrag/text.hpp"

namespace abdrag {

/// How per-passage entailment verdicts are aggregated into Entail(E, p).
enum class EntailAgg { Max, Mean };

/// Run configuration. Loaded from a flat key-value file; every field has a
/// documented default. Immutable by convention after validate().
///
/// Secrets are never stored inline: `api_key_env` names the environment
/// variable that holds the provider API key.
struct PipelineConfig {
    double tau = 0.5;   // sufficiency threshold, in [0,1]
    double alpha = 0.5; // weight of entailment in premise scoring, >= 0
    double beta = 0.5;  // weight of plausibility in premise scoring, >= 0
    int k = 5;          // retrieval depth, >= 1
    int m = 4;          // candidate premise count, >= 1
    bool premise_retrieval = true; // enable premise-aligned evidence augmentation

    std::string gen_endpoint; // base URL of the generation service ("" = unset)
    std::string nli_endpoint; // base URL of the NLI service ("" = unset)
    std::string model = "default";
    double timeout_seconds = 30.0;
    std::string api_key_env; // env var holding the API key; "" = no auth header
    int max_inflight = 8;    // per-provider cap on concurrent HTTP requests

    double contradiction_threshold = 0.5; // NLI contradiction mass above which a pair contradicts
    bool sufficiency_concat = false;      // score concatenated evidence instead of per-passage max
    EntailAgg entail_aggregation = EntailAgg::Max;
    bool per_sample_generation = false;   // one generation call per candidate instead of one batched call

    bool operator==(const PipelineConfig&) const = default;

    void validate() const {
        if (!(tau >= 0.0 && tau <= 1.0))
            throw ConfigError("tau must be in [0,1] (got " + format_double(tau) + ")");
        if (!(alpha >= 0.0))
            throw ConfigError("alpha must be >= 0 (got " + format_double(alpha) + ")");
        if (!(beta >= 0.0))
            throw ConfigError("beta must be >= 0 (got " + format_double(beta) + ")");
        if (!(alpha + beta > 0.0))
            throw ConfigError("alpha + beta must be positive");
        if (k < 1) throw ConfigError("k must be >= 1 (got " + std::to_string(k) + ")");
        if (m < 1) throw ConfigError("m must be >= 1 (got " + std::to_string(m) + ")");
        if (!(timeout_seconds > 0.0))
            throw ConfigError("timeout_seconds must be positive");
        if (max_inflight < 1)
            throw ConfigError("max_inflight must be >= 1");
        if (!(contradiction_threshold > 0.0 && contradiction_threshold <= 1.0))
            throw ConfigError("contradiction_threshold must be in (0,1]");
    }

    static std::string format_double(double v) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }
};

namespace detail {

inline double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("invalid numeric value for " + key + ": '" + value + "'");
    }
}

inline int parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        int v = std::stoi(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("invalid integer value for " + key + ": '" + value + "'");
    }
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("invalid boolean value for " + key + ": '" + value +
                      "' (expected true/false)");
}

} // namespace detail

/// Parses the flat key-value config format: one `key = value` per line,
/// `#` starts a comment, blank lines ignored, unknown keys rejected.
/// Unspecified keys keep their defaults. Does not call validate().
inline PipelineConfig config_parse(const std::string& content) {
    PipelineConfig cfg;
    std::istringstream in(content);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config parse error at line " + std::to_string(lineno) +
                              ": expected 'key = value'");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config parse error at line " + std::to_string(lineno) +
                              ": empty key");

        if (key == "tau") cfg.tau = detail::parse_double(key, value);
        else if (key == "alpha") cfg.alpha = detail::parse_double(key, value);
        else if (key == "beta") cfg.beta = detail::parse_double(key, value);
        else if (key == "k") cfg.k = detail::parse_int(key, value);
        else if (key == "m") cfg.m = detail::parse_int(key, value);
        else if (key == "premise_retrieval") cfg.premise_retrieval = detail::parse_bool(key, value);
        else if (key == "gen_endpoint") cfg.gen_endpoint = value;
        else if (key == "nli_endpoint") cfg.nli_endpoint = value;
        else if (key == "model") cfg.model = value;
        else if (key == "timeout_seconds") cfg.timeout_seconds = detail::parse_double(key, value);
        else if (key == "api_key_env") cfg.api_key_env = value;
        else if (key == "max_inflight") cfg.max_inflight = detail::parse_int(key, value);
        else if (key == "contradiction_threshold")
            cfg.contradiction_threshold = detail::parse_double(key, value);
        else if (key == "sufficiency_concat") cfg.sufficiency_concat = detail::parse_bool(key, value);
        else if (key == "entail_aggregation") {
            if (value == "max") cfg.entail_aggregation = EntailAgg::Max;
            else if (value == "mean") cfg.entail_aggregation = EntailAgg::Mean;
            else throw ConfigError("invalid value for entail_aggregation: '" + value +
                                   "' (expected max or mean)");
        }
        else if (key == "per_sample_generation")
            cfg.per_sample_generation = detail::parse_bool(key, value);
        else throw ConfigError("unknown config key: " + key);
    }
    return cfg;
}

/// Loads and validates a config file.
inline PipelineConfig config_load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    PipelineConfig cfg = config_parse(buf.str());
    cfg.validate();
    return cfg;
}

/// Serializes every key; config_parse(config_to_string(c)) == c.
inline std::string config_to_string(const PipelineConfig& cfg) {
    std::ostringstream out;
    out << "tau = " << PipelineConfig::format_double(cfg.tau) << "\n";
    out << "alpha = " << PipelineConfig::format_double(cfg.alpha) << "\n";
    out << "beta = " << PipelineConfig::format_double(cfg.beta) << "\n";
    out << "k = " << cfg.k << "\n";
    out << "m = " << cfg.m << "\n";
    out << "premise_retrieval = " << (cfg.premise_retrieval ? "true" : "false") << "\n";
    out << "gen_endpoint = " << cfg.gen_endpoint << "\n";
    out << "nli_endpoint = " << cfg.nli_endpoint << "\n";
    out << "model = " << cfg.model << "\n";
    out << "timeout_seconds = " << PipelineConfig::format_double(cfg.timeout_seconds) << "\n";
    out << "api_key_env = " << cfg.api_key_env << "\n";
    out << "max_inflight = " << cfg.max_inflight << "\n";
    out << "contradiction_threshold = "
        << PipelineConfig::format_double(cfg.contradiction_threshold) << "\n";
    out << "sufficiency_concat = " << (cfg.sufficiency_concat ? "true" : "false") << "\n";
    out << "entail_aggregation = "
        << (cfg.entail_aggregation == EntailAgg::Max ? "max" : "mean") << "\n";
    out << "per_sample_generation = " << (cfg.per_sample_generation ? "true" : "false") << "\n";
    return out.str();
}

inline void config_save(const PipelineConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file: " + path);
    out << config_to_string(cfg);
}

} // namespace abdrag
