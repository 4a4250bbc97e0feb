#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "abdrag/providers.hpp"
#include "abdrag/providers_http.hpp"

using namespace abdrag;

// ---------------------------------------------------------------------------
// Verdict validation
// ---------------------------------------------------------------------------

TEST_CASE("verdict validation enforces the probability simplex") {
    REQUIRE_NOTHROW((NliVerdict{0.2, 0.5, 0.3}).validate());
    REQUIRE_NOTHROW((NliVerdict{0.0, 1.0, 0.0}).validate());
    REQUIRE_THROWS_AS((NliVerdict{0.5, 0.5, 0.5}).validate(), ProviderError);
    REQUIRE_THROWS_AS((NliVerdict{-0.1, 1.1, 0.0}).validate(), ProviderError);
    REQUIRE_THROWS_AS((NliVerdict{0.1, 0.1, 0.1}).validate(), ProviderError);
    double nan = std::nan("");
    REQUIRE_THROWS_AS((NliVerdict{nan, 0.5, 0.5}).validate(), ProviderError);
}

namespace {

class BrokenNli final : public NliProvider {
    NliVerdict do_classify(const std::string&, const std::string&) const override {
        return {0.9, 0.9, 0.9};
    }
};

} // namespace

TEST_CASE("classify wrapper rejects off-simplex verdicts from any backend") {
    BrokenNli broken;
    REQUIRE_THROWS_AS(broken.classify("a", "b"), ProviderError);
}

// ---------------------------------------------------------------------------
// Mock NLI: every value below is hand-computable from the documented rules.
// ---------------------------------------------------------------------------

TEST_CASE("mock nli: identical sentences entail at the cap") {
    MockNliProvider nli;
    auto v = nli.classify("Alice was born in Lima.", "Alice was born in Lima.");
    REQUIRE(v.entail == 0.9);
    REQUIRE(v.contradiction == 0.05);
    REQUIRE(v.neutral == Catch::Approx(0.05));
}

TEST_CASE("mock nli: inserted negation contradicts") {
    MockNliProvider nli;
    auto v = nli.classify("Alice was born in Lima.", "Alice was not born in Lima");
    // e_raw = 5/6, c_raw = 0.9; sum > 1 so both renormalize.
    REQUIRE(v.entail == Catch::Approx(25.0 / 52.0));
    REQUIRE(v.contradiction == Catch::Approx(27.0 / 52.0));
    REQUIRE(v.neutral == 0.0);
    REQUIRE(v.contradiction > 0.5); // above the default contradiction threshold
}

TEST_CASE("mock nli: disjoint sentences are neutral") {
    MockNliProvider nli;
    auto v = nli.classify("Honey never spoils.", "Mount Everest is tall");
    REQUIRE(v.entail == 0.0);
    REQUIRE(v.neutral == 0.95);
    REQUIRE(v.contradiction == 0.05);
}

TEST_CASE("mock nli: partial overlap scales entailment") {
    MockNliProvider nli;
    // hyp tokens {in, which, country, was, alice, born}: 4 of 6 occur in the premise.
    auto v = nli.classify("Alice was born in Lima.", "In which country was Alice born?");
    REQUIRE(v.entail == Catch::Approx(4.0 / 6.0));
    REQUIRE(v.contradiction == 0.05);
}

TEST_CASE("mock nli: edge cases") {
    MockNliProvider nli;
    auto empty = nli.classify("Some premise.", "");
    REQUIRE(empty.entail == 0.0);
    REQUIRE(empty.neutral == 0.95);

    // "not" present but the rest mismatches: no negation fire.
    auto v = nli.classify("Alice was born in Lima.", "Bruno was not born in Lima");
    REQUIRE(v.contradiction < 0.5);

    // Negation of the second sentence of a multi-sentence premise.
    auto multi = nli.classify("Honey never spoils. Alice was born in Lima.",
                              "Alice was not born in Lima");
    REQUIRE(multi.contradiction > 0.5);

    // Deterministic: same inputs, same verdict.
    auto a = nli.classify("x y z", "x q");
    auto b = nli.classify("x y z", "x q");
    REQUIRE(a.entail == b.entail);
    REQUIRE(a.neutral == b.neutral);
    REQUIRE(a.contradiction == b.contradiction);
}

TEST_CASE("mock nli is pure under concurrent use") {
    MockNliProvider nli;
    auto base = nli.classify("Alice was born in Lima.", "In which country was Alice born?");
    std::atomic<int> mismatches{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < 8; ++t)
        pool.emplace_back([&]() {
            for (int i = 0; i < 200; ++i) {
                auto v = nli.classify("Alice was born in Lima.",
                                      "In which country was Alice born?");
                if (v.entail != base.entail || v.neutral != base.neutral ||
                    v.contradiction != base.contradiction)
                    mismatches.fetch_add(1);
            }
        });
    for (auto& th : pool) th.join();
    REQUIRE(mismatches.load() == 0);
}

// ---------------------------------------------------------------------------
// Mock generation + the generate() wrapper contract
// ---------------------------------------------------------------------------

TEST_CASE("mock generation: first entry whose needles all match wins") {
    MockGenerationProvider gen({
        {{"alpha", "beta"}, {"both"}},
        {{"alpha"}, {"only alpha"}},
    });
    GenerationRequest req;
    req.prompt = "alpha and beta here";
    REQUIRE(gen.generate(req) == std::vector<std::string>{"both"});
    req.prompt = "alpha alone";
    REQUIRE(gen.generate(req) == std::vector<std::string>{"only alpha"});
    req.prompt = "nothing matches";
    REQUIRE(gen.generate(req) == std::vector<std::string>{"UNKNOWN"});
}

namespace {

class ScriptedGen final : public GenerationProvider {
public:
    explicit ScriptedGen(std::vector<std::vector<std::string>> rounds)
        : rounds_(std::move(rounds)) {}
    mutable int calls = 0;

private:
    std::vector<std::string> do_generate(const GenerationRequest&) const override {
        auto i = static_cast<std::size_t>(calls++);
        return i < rounds_.size() ? rounds_[i] : rounds_.back();
    }
    std::vector<std::vector<std::string>> rounds_;
};

} // namespace

TEST_CASE("generate drops blanks, dedupes, and truncates") {
    ScriptedGen gen({{"  ", "a", "b", "a", "", "c", "d", "e"}});
    GenerationRequest req;
    req.max_candidates = 3;
    REQUIRE(gen.generate(req) == std::vector<std::string>{"a", "b", "c"});
    REQUIRE(gen.calls == 1);
}

TEST_CASE("generate retries once on an all-blank round") {
    ScriptedGen gen({{"", "   "}, {"recovered"}});
    GenerationRequest req;
    REQUIRE(gen.generate(req) == std::vector<std::string>{"recovered"});
    REQUIRE(gen.calls == 2);
}

TEST_CASE("generate fails after two empty rounds") {
    ScriptedGen gen({{}, {}});
    GenerationRequest req;
    REQUIRE_THROWS_AS(gen.generate(req), EmptyCompletionError);
    REQUIRE(gen.calls == 2);
}

TEST_CASE("generate rejects nonsensical limits") {
    ScriptedGen gen({{"a"}});
    GenerationRequest req;
    req.max_candidates = 0;
    REQUIRE_THROWS_AS(gen.generate(req), std::invalid_argument);
}

TEST_CASE("mock table loads from the bundled fixture") {
    auto table = load_mock_table(std::string(ABDRAG_DATA_DIR) + "/mock_generation.json");
    REQUIRE(table.size() == 35);
    REQUIRE(table[0].contains.size() == 2);
    REQUIRE_THROWS_AS(load_mock_table("/nonexistent.json"), DataError);
}

// ---------------------------------------------------------------------------
// HTTP providers against a loopback server
// ---------------------------------------------------------------------------

namespace {

struct TestServer {
    httplib::Server svr;
    int port = 0;
    std::thread th;

    void start() {
        port = svr.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        th = std::thread([this]() { svr.listen_after_bind(); });
        svr.wait_until_ready();
    }

    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port); }

    ~TestServer() {
        svr.stop();
        if (th.joinable()) th.join();
    }
};

} // namespace

TEST_CASE("http generation: request shape, auth header, and response handling") {
    TestServer ts;
    nlohmann::json seen_body;
    std::string seen_auth;
    ts.svr.Post("/v1/chat/completions",
                [&](const httplib::Request& req, httplib::Response& res) {
                    seen_body = nlohmann::json::parse(req.body);
                    seen_auth = req.get_header_value("Authorization");
                    nlohmann::json out = {
                        {"choices",
                         {{{"message", {{"role", "assistant"}, {"content", "one"}}}},
                          {{"message", {{"role", "assistant"}, {"content", "one"}}}},
                          {{"message", {{"role", "assistant"}, {"content", "  "}}}},
                          {{"message", {{"role", "assistant"}, {"content", "two"}}}}}}};
                    res.set_content(out.dump(), "application/json");
                });
    ts.start();

    setenv("ABDRAG_TEST_KEY", "sekrit", 1);
    HttpGenerationProvider gen(ts.endpoint(), "test-model", 5.0, "ABDRAG_TEST_KEY", 4);
    GenerationRequest req;
    req.prompt = "What is up?";
    req.max_candidates = 3;
    req.temperature = 0.25;

    auto out = gen.generate(req);
    REQUIRE(out == std::vector<std::string>{"one", "two"}); // deduped, blank dropped

    REQUIRE(seen_auth == "Bearer sekrit");
    REQUIRE(seen_body.at("model") == "test-model");
    REQUIRE(seen_body.at("n") == 3);
    REQUIRE(seen_body.at("temperature") == 0.25);
    REQUIRE(seen_body.at("messages").size() == 1);
    REQUIRE(seen_body.at("messages")[0].at("role") == "user");
    REQUIRE(seen_body.at("messages")[0].at("content") == "What is up?");
}

TEST_CASE("http generation: api key env var must exist when named") {
    REQUIRE_THROWS_AS(
        HttpGenerationProvider("http://127.0.0.1:1", "m", 1.0, "ABDRAG_UNSET_KEY_XYZ", 1),
        ConfigError);
    REQUIRE(resolve_api_key("") == "");
}

TEST_CASE("http nli: verdict round-trip and simplex enforcement") {
    TestServer ts;
    nlohmann::json seen_body;
    bool bad_mode = false;
    ts.svr.Post("/nli", [&](const httplib::Request& req, httplib::Response& res) {
        seen_body = nlohmann::json::parse(req.body);
        nlohmann::json out =
            bad_mode
                ? nlohmann::json{{"entail", 0.9}, {"neutral", 0.9}, {"contradiction", 0.9}}
                : nlohmann::json{{"entail", 0.7}, {"neutral", 0.2}, {"contradiction", 0.1}};
        res.set_content(out.dump(), "application/json");
    });
    ts.start();

    HttpNliProvider nli(ts.endpoint(), 5.0, "", 4);
    auto v = nli.classify("the premise", "the hypothesis");
    REQUIRE(v.entail == 0.7);
    REQUIRE(v.neutral == 0.2);
    REQUIRE(v.contradiction == 0.1);
    REQUIRE(seen_body.at("premise") == "the premise");
    REQUIRE(seen_body.at("hypothesis") == "the hypothesis");

    bad_mode = true;
    REQUIRE_THROWS_AS(nli.classify("p", "h"), ProviderError);
}

TEST_CASE("http errors map by layer: transport vs provider") {
    // Provider errors: reachable server, unusable response.
    {
        TestServer ts;
        ts.svr.Post("/nli", [](const httplib::Request&, httplib::Response& res) {
            res.status = 500;
            res.set_content("boom", "text/plain");
        });
        ts.svr.Post("/v1/chat/completions",
                    [](const httplib::Request&, httplib::Response& res) {
                        res.set_content("this is not json", "application/json");
                    });
        ts.start();
        HttpNliProvider nli(ts.endpoint(), 5.0, "", 4);
        REQUIRE_THROWS_AS(nli.classify("p", "h"), ProviderError);
        HttpGenerationProvider gen(ts.endpoint(), "m", 5.0, "", 4);
        GenerationRequest req;
        REQUIRE_THROWS_AS(gen.generate(req), ProviderError);
    }
    // Missing field in otherwise valid JSON is also a provider error.
    {
        TestServer ts;
        ts.svr.Post("/nli", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"entail": 0.5})", "application/json");
        });
        ts.start();
        HttpNliProvider nli(ts.endpoint(), 5.0, "", 4);
        REQUIRE_THROWS_AS(nli.classify("p", "h"), ProviderError);
    }
    // Transport error: nobody listening. Grab a fresh port, then close it.
    int dead_port;
    {
        TestServer ts;
        ts.start();
        dead_port = ts.port;
    }
    HttpNliProvider nli("http://127.0.0.1:" + std::to_string(dead_port), 1.0, "", 4);
    REQUIRE_THROWS_AS(nli.classify("p", "h"), TransportError);
}

TEST_CASE("http timeout surfaces as a transport error") {
    TestServer ts;
    ts.svr.Post("/nli", [](const httplib::Request&, httplib::Response& res) {
        std::this_thread::sleep_for(std::chrono::milliseconds(1500));
        res.set_content(R"({"entail":1.0,"neutral":0.0,"contradiction":0.0})",
                        "application/json");
    });
    ts.start();
    HttpNliProvider nli(ts.endpoint(), 0.2, "", 4);
    REQUIRE_THROWS_AS(nli.classify("p", "h"), TransportError);
}

TEST_CASE("in-flight requests never exceed the configured cap") {
    TestServer ts;
    std::atomic<int> inflight{0};
    std::atomic<int> peak{0};
    ts.svr.Post("/nli", [&](const httplib::Request&, httplib::Response& res) {
        int now = inflight.fetch_add(1) + 1;
        int prev = peak.load();
        while (now > prev && !peak.compare_exchange_weak(prev, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(60));
        inflight.fetch_sub(1);
        res.set_content(R"({"entail":0.5,"neutral":0.5,"contradiction":0.0})",
                        "application/json");
    });
    ts.start();

    HttpNliProvider nli(ts.endpoint(), 5.0, "", 2); // cap = 2
    std::vector<std::thread> pool;
    std::atomic<int> failures{0};
    for (int t = 0; t < 8; ++t)
        pool.emplace_back([&]() {
            try {
                auto v = nli.classify("p", "h");
                if (v.entail != 0.5) failures.fetch_add(1);
            } catch (...) {
                failures.fetch_add(1);
            }
        });
    for (auto& th : pool) th.join();
    REQUIRE(failures.load() == 0);
    REQUIRE(peak.load() <= 2);
    REQUIRE(peak.load() >= 1);
}
