#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdlib>
#include <memory>
#include <semaphore>
#include <string>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "abdrag/config.hpp"
#include "abdrag/errors.hpp"
#include "abdrag/providers.hpp"

namespace abdrag {

/// Reads the API key from the environment variable named in the config.
/// Empty name means "no auth". A name that is set but resolves to nothing
/// is a configuration mistake and fails loudly.
inline std::string resolve_api_key(const std::string& api_key_env) {
    if (api_key_env.empty()) return "";
    const char* v = std::getenv(api_key_env.c_str());
    if (v == nullptr || *v == '\0')
        throw ConfigError("api key environment variable not set: " + api_key_env);
    return v;
}

namespace detail {

inline constexpr std::ptrdiff_t kMaxInflightCeiling = 1024;

/// Shared plumbing for the HTTP providers: endpoint, auth, timeouts, and a
/// semaphore bounding the number of requests in flight across threads.
class HttpTransport {
public:
    HttpTransport(std::string endpoint, double timeout_seconds, std::string api_key,
                  int max_inflight)
        : endpoint_(std::move(endpoint)),
          timeout_(std::chrono::milliseconds(
              static_cast<long long>(timeout_seconds * 1000.0))),
          api_key_(std::move(api_key)),
          inflight_(std::max<std::ptrdiff_t>(
              1, std::min<std::ptrdiff_t>(kMaxInflightCeiling, max_inflight))) {
        if (endpoint_.empty()) throw ConfigError("http provider endpoint is empty");
    }

    /// POSTs a JSON body and returns the parsed JSON response.
    /// Transport-level failures (refused, reset, timed out) raise
    /// TransportError; an HTTP response with a non-200 status or an
    /// unparseable body raises ProviderError.
    nlohmann::json post_json(const std::string& path, const nlohmann::json& body) const {
        inflight_.acquire();
        struct Release {
            std::counting_semaphore<kMaxInflightCeiling>& s;
            ~Release() { s.release(); }
        } release{inflight_};

        // A client per request: no shared connection state, safe to call
        // from any number of threads.
        httplib::Client cli(endpoint_);
        cli.set_connection_timeout(timeout_);
        cli.set_read_timeout(timeout_);
        cli.set_write_timeout(timeout_);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

        auto res = cli.Post(path, headers, body.dump(), "application/json");
        if (!res)
            throw TransportError("http request to " + endpoint_ + path +
                                 " failed: " + httplib::to_string(res.error()));
        if (res->status != 200)
            throw ProviderError("http status " + std::to_string(res->status) + " from " +
                                endpoint_ + path);
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw ProviderError(std::string("malformed json from ") + endpoint_ + path + ": " +
                                e.what());
        }
    }

private:
    std::string endpoint_;
    std::chrono::milliseconds timeout_;
    std::string api_key_;
    mutable std::counting_semaphore<kMaxInflightCeiling> inflight_;
};

} // namespace detail

/// Chat-completions client. One POST per generate() call; the number of
/// completions requested is carried in the body's "n" field.
class HttpGenerationProvider final : public GenerationProvider {
public:
    HttpGenerationProvider(const std::string& endpoint, std::string model,
                           double timeout_seconds, const std::string& api_key_env,
                           int max_inflight)
        : transport_(endpoint, timeout_seconds, resolve_api_key(api_key_env), max_inflight),
          model_(std::move(model)) {}

    explicit HttpGenerationProvider(const PipelineConfig& cfg)
        : HttpGenerationProvider(cfg.gen_endpoint, cfg.model, cfg.timeout_seconds,
                                 cfg.api_key_env, cfg.max_inflight) {}

private:
    std::vector<std::string> do_generate(const GenerationRequest& req) const override {
        nlohmann::json body = {
            {"model", model_},
            {"messages", nlohmann::json::array({nlohmann::json{{"role", "user"},
                                                               {"content", req.prompt}}})},
            {"n", req.max_candidates},
            {"temperature", req.temperature},
        };
        auto j = transport_.post_json("/v1/chat/completions", body);
        std::vector<std::string> out;
        try {
            for (const auto& choice : j.at("choices"))
                out.push_back(choice.at("message").at("content").get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            throw ProviderError(std::string("unexpected completion response shape: ") +
                                e.what());
        }
        return out;
    }

    detail::HttpTransport transport_;
    std::string model_;
};

/// Entailment-service client: POST /nli with {"premise","hypothesis"},
/// expecting {"entail","neutral","contradiction"}. The base-class wrapper
/// rejects responses off the probability simplex.
class HttpNliProvider final : public NliProvider {
public:
    HttpNliProvider(const std::string& endpoint, double timeout_seconds,
                    const std::string& api_key_env, int max_inflight)
        : transport_(endpoint, timeout_seconds, resolve_api_key(api_key_env), max_inflight) {}

    explicit HttpNliProvider(const PipelineConfig& cfg)
        : HttpNliProvider(cfg.nli_endpoint, cfg.timeout_seconds, cfg.api_key_env,
                          cfg.max_inflight) {}

private:
    NliVerdict do_classify(const std::string& premise,
                           const std::string& hypothesis) const override {
        nlohmann::json body = {{"premise", premise}, {"hypothesis", hypothesis}};
        auto j = transport_.post_json("/nli", body);
        NliVerdict v;
        try {
            v.entail = j.at("entail").get<double>();
            v.neutral = j.at("neutral").get<double>();
            v.contradiction = j.at("contradiction").get<double>();
        } catch (const nlohmann::json::exception& e) {
            throw ProviderError(std::string("unexpected nli response shape: ") + e.what());
        }
        return v;
    }

    detail::HttpTransport transport_;
};

} // namespace abdrag
