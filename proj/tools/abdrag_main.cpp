// abdrag — abductive retrieval-augmented question answering, command line.
//
// Subcommands:
//   ingest   build an index file from a passage corpus
//   ask      answer one question
//   eval     run a dataset and write report.json + trace.jsonl
//   trace    summarize a trace file
//
// Exit codes: 0 success; 2 usage, config, or data problems; 3 provider or
// transport failures. Errors print one line: "error: <category>: <detail>".

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "abdrag/abdrag.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string corpus_path;
    std::string index_path;
    bool mock = false;
    std::string mock_table_path;

    double tau = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    int k = 0;
    int m = 0;
    CLI::Option* tau_opt = nullptr;
    CLI::Option* alpha_opt = nullptr;
    CLI::Option* beta_opt = nullptr;
    CLI::Option* k_opt = nullptr;
    CLI::Option* m_opt = nullptr;
};

void add_input_opts(CLI::App* sub, CommonOpts& o) {
    auto* corpus = sub->add_option("--corpus", o.corpus_path, "Corpus JSONL to index on the fly");
    auto* index = sub->add_option("--index", o.index_path, "Prebuilt index file");
    corpus->excludes(index);
    index->excludes(corpus);
}

void add_pipeline_opts(CLI::App* sub, CommonOpts& o) {
    sub->add_option("--config", o.config_path, "Config file (key = value lines)");
    sub->add_flag("--mock", o.mock, "Use the deterministic offline providers");
    sub->add_option("--mock-table", o.mock_table_path,
                    "Canned-response table for the mock generator (JSON)");
    o.tau_opt = sub->add_option("--tau", o.tau, "Sufficiency threshold (overrides config)");
    o.alpha_opt = sub->add_option("--alpha", o.alpha, "Entailment weight (overrides config)");
    o.beta_opt = sub->add_option("--beta", o.beta, "Plausibility weight (overrides config)");
    o.k_opt = sub->add_option("--k", o.k, "Retrieval depth (overrides config)");
    o.m_opt = sub->add_option("--m", o.m, "Max candidate premises (overrides config)");
}

abdrag::PipelineConfig resolve_config(const CommonOpts& o) {
    abdrag::PipelineConfig cfg;
    if (!o.config_path.empty()) cfg = abdrag::config_load(o.config_path);
    if (o.tau_opt && o.tau_opt->count() > 0) cfg.tau = o.tau;
    if (o.alpha_opt && o.alpha_opt->count() > 0) cfg.alpha = o.alpha;
    if (o.beta_opt && o.beta_opt->count() > 0) cfg.beta = o.beta;
    if (o.k_opt && o.k_opt->count() > 0) cfg.k = o.k;
    if (o.m_opt && o.m_opt->count() > 0) cfg.m = o.m;
    cfg.validate();
    return cfg;
}

abdrag::Index resolve_index(const CommonOpts& o) {
    if (!o.corpus_path.empty())
        return abdrag::build_index(abdrag::load_corpus_jsonl(o.corpus_path));
    if (!o.index_path.empty()) return abdrag::load_index(o.index_path);
    throw abdrag::ConfigError("one of --corpus or --index is required");
}

struct Providers {
    std::unique_ptr<abdrag::GenerationProvider> gen;
    std::unique_ptr<abdrag::NliProvider> nli;
};

Providers resolve_providers(const CommonOpts& o, const abdrag::PipelineConfig& cfg) {
    Providers p;
    if (o.mock) {
        std::vector<abdrag::MockEntry> table;
        if (!o.mock_table_path.empty()) table = abdrag::load_mock_table(o.mock_table_path);
        p.gen = std::make_unique<abdrag::MockGenerationProvider>(std::move(table));
        p.nli = std::make_unique<abdrag::MockNliProvider>();
        return p;
    }
    if (cfg.gen_endpoint.empty())
        throw abdrag::ConfigError("gen_endpoint is required unless --mock is given");
    if (cfg.nli_endpoint.empty())
        throw abdrag::ConfigError("nli_endpoint is required unless --mock is given");
    p.gen = std::make_unique<abdrag::HttpGenerationProvider>(cfg);
    p.nli = std::make_unique<abdrag::HttpNliProvider>(cfg);
    return p;
}

std::string fmt4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

int cmd_ingest(const std::string& corpus_path, const std::string& out_path) {
    auto index = abdrag::build_index(abdrag::load_corpus_jsonl(corpus_path));
    abdrag::save_index(index, out_path);
    std::cout << "N=" << index.doc_count << " avg_doc_length=" << fmt4(index.avg_doc_length)
              << "\n";
    return 0;
}

int cmd_ask(const CommonOpts& o, const std::string& question, const std::string& query_id,
            const std::string& trace_out) {
    auto cfg = resolve_config(o);
    auto index = resolve_index(o);
    auto providers = resolve_providers(o, cfg);

    abdrag::Query q;
    q.id = query_id;
    q.text = question;
    auto result = abdrag::run_query(index, *providers.gen, *providers.nli, q, cfg);

    std::cout << "answer: " << result.answer << "\n";
    std::cout << "branch: " << abdrag::to_string(result.trace.branch) << "\n";
    std::cout << "sufficiency: " << fmt4(result.trace.sufficiency_score) << "\n";
    if (result.trace.selected_premise)
        std::cout << "premise: " << *result.trace.selected_premise << "\n";
    if (result.trace.unsupported) std::cout << "unsupported: true\n";

    if (!trace_out.empty()) {
        std::ofstream out(trace_out);
        if (!out) throw abdrag::DataError("cannot write trace file: " + trace_out);
        out << abdrag::trace_to_json(result.trace).dump(2) << "\n";
    }
    return 0;
}

int cmd_eval(const CommonOpts& o, const std::string& dataset_path, int jobs,
             const std::string& report_path, const std::string& trace_path) {
    auto cfg = resolve_config(o);
    auto index = resolve_index(o);
    auto providers = resolve_providers(o, cfg);
    auto items = abdrag::load_dataset_jsonl(dataset_path);

    auto report = abdrag::run_eval_to_files(index, *providers.gen, *providers.nli, items, cfg,
                                            jobs, report_path, trace_path);

    std::cout << "n_queries: " << report.n_queries << "\n";
    std::cout << "em: " << fmt4(report.em) << "\n";
    std::cout << "f1: " << fmt4(report.f1) << "\n";
    std::cout << "contradiction_rate: " << fmt4(report.contradiction_rate) << "\n";
    std::cout << "abduction_trigger_rate: " << fmt4(report.abduction_trigger_rate) << "\n";
    std::cout << "report: " << report_path << "\n";
    std::cout << "trace: " << trace_path << "\n";
    return 0;
}

int cmd_trace(const std::string& trace_path) {
    std::ifstream in(trace_path);
    if (!in) throw abdrag::DataError("cannot open trace file: " + trace_path);
    std::size_t total = 0, direct = 0, abductive = 0, fallback = 0, unsupported = 0, errors = 0;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = abdrag::trim(line);
        if (t.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(t);
        } catch (const nlohmann::json::exception& e) {
            throw abdrag::DataError("trace parse error at line " + std::to_string(lineno) +
                                    ": " + e.what());
        }
        ++total;
        auto branch = abdrag::branch_from_string(j.value("branch", "direct"));
        if (branch == abdrag::Branch::Direct) ++direct;
        else if (branch == abdrag::Branch::Abductive) ++abductive;
        else ++fallback;
        if (j.value("unsupported", false)) ++unsupported;
        if (j.contains("error")) ++errors;
    }
    std::cout << "queries: " << total << "\n";
    std::cout << "direct: " << direct << "\n";
    std::cout << "abductive: " << abductive << "\n";
    std::cout << "abductive_fallback: " << fallback << "\n";
    std::cout << "unsupported: " << unsupported << "\n";
    std::cout << "errors: " << errors << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Abductive retrieval-augmented question answering"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Build an index file from a corpus");
    std::string ingest_corpus, ingest_out;
    ingest->add_option("--corpus", ingest_corpus, "Corpus JSONL")->required();
    ingest->add_option("--out", ingest_out, "Index file to write")->required();

    // ask
    auto* ask = app.add_subcommand("ask", "Answer one question");
    CommonOpts ask_opts;
    std::string question, query_id = "q", ask_trace_out;
    ask->add_option("question", question, "The question text")->required();
    ask->add_option("--id", query_id, "Query id used in the trace");
    ask->add_option("--trace-out", ask_trace_out, "Write the full trace (JSON) here");
    add_input_opts(ask, ask_opts);
    add_pipeline_opts(ask, ask_opts);

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate over a dataset");
    CommonOpts eval_opts;
    std::string dataset_path, report_path = "report.json", trace_path = "trace.jsonl";
    int jobs = 1;
    eval->add_option("--dataset", dataset_path, "Dataset JSONL")->required();
    eval->add_option("--jobs", jobs, "Worker threads");
    eval->add_option("--report", report_path, "Report output path (default report.json)");
    eval->add_option("--trace", trace_path, "Trace output path (default trace.jsonl)");
    add_input_opts(eval, eval_opts);
    add_pipeline_opts(eval, eval_opts);

    // trace
    auto* trace = app.add_subcommand("trace", "Summarize a trace JSONL file");
    std::string trace_in;
    trace->add_option("file", trace_in, "Trace JSONL file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 2;
    }

    try {
        if (ingest->parsed()) return cmd_ingest(ingest_corpus, ingest_out);
        if (ask->parsed()) return cmd_ask(ask_opts, question, query_id, ask_trace_out);
        if (eval->parsed()) {
            if (jobs < 1) throw abdrag::ConfigError("--jobs must be >= 1");
            return cmd_eval(eval_opts, dataset_path, jobs, report_path, trace_path);
        }
        if (trace->parsed()) return cmd_trace(trace_in);
        std::cerr << "error: usage: no subcommand\n";
        return 2;
    } catch (const abdrag::ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 2;
    } catch (const abdrag::DataError& e) {
        std::cerr << "error: data: " << e.what() << "\n";
        return 2;
    } catch (const abdrag::TransportError& e) {
        std::cerr << "error: transport: " << e.what() << "\n";
        return 3;
    } catch (const abdrag::ProviderError& e) {
        std::cerr << "error: provider: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
}
