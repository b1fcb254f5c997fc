#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sara/assemble.hpp"
#include "sara/embed.hpp"
#include "sara/errors.hpp"
#include "sara/evalkit.hpp"
#include "sara/proxylm.hpp"
#include "sara/retrieval.hpp"
#include "sara/select.hpp"
#include "sara/textcore.hpp"

namespace {

using sara::ErrCode;
using sara::Error;

// Resolved run settings. Precedence: command-line flag, then --config file,
// then environment variable (endpoints only), then built-in default.
struct ToolConfig {
    std::string index_path;
    std::size_t chunk_size = 256;
    std::string retrieve_mode = "bm25";
    std::string template_id = "sara-inference-v1";
    std::string projection_path;
    std::string generate_endpoint;

    std::string embed_kind = "hash-stub";
    std::size_t embed_dim = 64;
    std::string embed_endpoint;
    bool embed_normalize = true;

    std::string proxy_kind = "ngram";
    int proxy_order = sara::kDefaultProxyOrder;
    double proxy_alpha = sara::kDefaultProxyAlpha;
    std::string proxy_endpoint;

    std::size_t n = 10;
    std::size_t k_sel = 5;
    std::string strategy = "emb";
    std::optional<double> min_csi_filter;
    bool condition_on_query = false;

    std::size_t budget_tokens = 512;
    std::size_t vector_token_cost = 1;
    std::string budget_mode = "fixed-k";
    std::size_t fixed_k = 5;
    std::size_t max_vectors = 8;
};

std::string env_or_empty(const char* name) {
    const char* value = std::getenv(name);
    return value ? std::string(value) : std::string();
}

template <typename T>
void read_key(const nlohmann::json& doc, const char* key, T& out) {
    if (!doc.contains(key)) return;
    try {
        out = doc[key].get<T>();
    } catch (const nlohmann::json::exception&) {
        throw Error(ErrCode::BadConfig, std::string("config key '") + key + "' has a wrong type");
    }
}

void apply_config_file(ToolConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrCode::MissingFile, "cannot open config: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrCode::BadConfig, "config " + path + ": " + e.what());
    }
    if (!doc.is_object()) throw Error(ErrCode::BadConfig, "config must be a JSON object");

    read_key(doc, "index", cfg.index_path);
    read_key(doc, "chunk_size", cfg.chunk_size);
    read_key(doc, "retrieve_mode", cfg.retrieve_mode);
    read_key(doc, "template_id", cfg.template_id);
    read_key(doc, "projection", cfg.projection_path);
    read_key(doc, "generate_endpoint", cfg.generate_endpoint);

    if (doc.contains("embed")) {
        const auto& e = doc["embed"];
        read_key(e, "kind", cfg.embed_kind);
        read_key(e, "dim", cfg.embed_dim);
        read_key(e, "endpoint", cfg.embed_endpoint);
        read_key(e, "normalize", cfg.embed_normalize);
    }
    if (doc.contains("proxy")) {
        const auto& p = doc["proxy"];
        read_key(p, "kind", cfg.proxy_kind);
        read_key(p, "order", cfg.proxy_order);
        read_key(p, "alpha", cfg.proxy_alpha);
        read_key(p, "endpoint", cfg.proxy_endpoint);
    }
    if (doc.contains("selection")) {
        const auto& s = doc["selection"];
        read_key(s, "n", cfg.n);
        read_key(s, "k", cfg.k_sel);
        read_key(s, "strategy", cfg.strategy);
        read_key(s, "condition_on_query", cfg.condition_on_query);
        if (s.contains("min_csi_filter")) {
            double value = 0.0;
            read_key(s, "min_csi_filter", value);
            cfg.min_csi_filter = value;
        }
    }
    if (doc.contains("budget")) {
        const auto& b = doc["budget"];
        read_key(b, "tokens", cfg.budget_tokens);
        read_key(b, "vector_cost", cfg.vector_token_cost);
        read_key(b, "mode", cfg.budget_mode);
        read_key(b, "k", cfg.fixed_k);
        read_key(b, "max_vectors", cfg.max_vectors);
    }
}

void resolve_endpoints(ToolConfig& cfg) {
    if (cfg.embed_endpoint.empty()) cfg.embed_endpoint = env_or_empty("SARA_EMBED_URL");
    if (cfg.proxy_endpoint.empty()) cfg.proxy_endpoint = env_or_empty("SARA_LOGPROB_URL");
    if (cfg.generate_endpoint.empty()) cfg.generate_endpoint = env_or_empty("SARA_GENERATE_URL");
}

sara::EmbedBackend make_embed_backend(const ToolConfig& cfg) {
    sara::EmbedBackendConfig ec;
    if (cfg.embed_kind == "hash-stub") {
        ec.kind = sara::EmbedBackendConfig::Kind::HashStub;
    } else if (cfg.embed_kind == "remote") {
        ec.kind = sara::EmbedBackendConfig::Kind::Remote;
    } else {
        throw Error(ErrCode::BadConfig, "unknown embed kind: " + cfg.embed_kind);
    }
    ec.dim = cfg.embed_dim;
    ec.endpoint = cfg.embed_endpoint;
    ec.normalize_output = cfg.embed_normalize;
    return sara::EmbedBackend(ec);
}

sara::CsiFn make_csi(const ToolConfig& cfg, const sara::Index& index) {
    if (cfg.proxy_kind == "ngram") {
        // The proxy model is rebuilt from the indexed chunk texts on demand;
        // training is deterministic so the scores are reproducible without
        // storing model state next to the index.
        return sara::make_ngram_csi(
            sara::ProxyLMModel::train(index.chunk_texts(), cfg.proxy_order, cfg.proxy_alpha));
    }
    if (cfg.proxy_kind == "remote") {
        if (cfg.proxy_endpoint.empty()) {
            throw Error(ErrCode::BadConfig,
                        "remote proxy requires an endpoint (config or SARA_LOGPROB_URL)");
        }
        return sara::make_remote_csi(cfg.proxy_endpoint);
    }
    throw Error(ErrCode::BadConfig, "unknown proxy kind: " + cfg.proxy_kind);
}

sara::PromptTemplate make_template(const ToolConfig& cfg) {
    const sara::PromptTemplate tpl = sara::inference_template();
    if (cfg.template_id != tpl.id) {
        throw Error(ErrCode::BadConfig, "unknown template_id: " + cfg.template_id);
    }
    return tpl;
}

sara::Index load_index(const ToolConfig& cfg) {
    if (cfg.index_path.empty()) {
        throw Error(ErrCode::BadArgument, "an index path is required (--index or config)");
    }
    return sara::Index::load(cfg.index_path);
}

std::vector<sara::RetrievedContext> run_retrieval(const ToolConfig& cfg, const sara::Index& index,
                                                  const std::string& query, std::size_t n) {
    if (cfg.retrieve_mode == "bm25") return index.retrieve_top_n(query, n);
    if (cfg.retrieve_mode == "dense") {
        return index.retrieve_dense(query, n, make_embed_backend(cfg));
    }
    throw Error(ErrCode::BadArgument, "unknown retrieve mode: " + cfg.retrieve_mode);
}

struct SelectionRun {
    sara::EvidenceSet evidence;
    std::vector<sara::TraceEntry> trace;
};

SelectionRun run_selection(const ToolConfig& cfg, const sara::Index& index,
                           const std::string& query, std::size_t k_sel) {
    const auto retrieved = run_retrieval(cfg, index, query, cfg.n);

    std::vector<sara::Candidate> candidates;
    std::vector<double> scores;
    candidates.reserve(retrieved.size());
    for (const auto& r : retrieved) {
        const auto& row = index.chunk(r.chunk);
        candidates.push_back({row.id, r.rank, row.text});
        scores.push_back(r.score);
    }

    sara::SelectionConfig sc;
    sc.n = cfg.n;
    sc.k_sel = k_sel;
    sc.strategy = sara::strategy_from_name(cfg.strategy);
    sc.min_csi_filter = cfg.min_csi_filter;
    sc.condition_on_query = cfg.condition_on_query;

    const sara::EmbedFn embed = make_embed_backend(cfg).fn();
    sara::CsiFn csi;
    if (sc.strategy == sara::Strategy::Csi) {
        csi = make_csi(cfg, index);
    } else {
        csi = [](const std::string&, const std::vector<std::string>&) -> sara::CsiScore {
            throw Error(ErrCode::BadConfig, "csi scorer invoked under the emb strategy");
        };
    }

    SelectionRun run;
    run.evidence = sara::select_evidence(query, candidates, scores, sc, embed, csi, &run.trace);
    return run;
}

void write_trace(const std::string& path, const std::vector<sara::TraceEntry>& trace,
                 const std::string& strategy) {
    std::ofstream out(path);
    if (!out) throw Error(ErrCode::Io, "cannot write trace: " + path);
    for (const auto& entry : trace) {
        nlohmann::json line;
        line["step"] = entry.step;
        line["chosen"] = entry.chunk_ref;
        line["score"] = entry.score;
        line["strategy"] = strategy;
        out << line.dump() << "\n";
    }
}

// Selection-ordered contexts ready for partitioning, resolved back through
// the index so assembly always works from stored chunk text.
std::vector<sara::EvidenceContext> evidence_contexts(const sara::Index& index,
                                                     const sara::EvidenceSet& evidence) {
    std::vector<sara::EvidenceContext> contexts;
    contexts.reserve(evidence.selected.size());
    for (const auto& sel : evidence.selected) {
        const auto ref = index.find_chunk(sel.chunk_ref);
        if (!ref) throw Error(ErrCode::UnknownChunk, "selected chunk missing: " + sel.chunk_ref);
        const auto& row = index.chunk(*ref);
        contexts.push_back(sara::EvidenceContext::from_text(row.id, row.text));
    }
    return contexts;
}

nlohmann::json assemble_one(const ToolConfig& cfg,
                            const std::vector<sara::EvidenceContext>& contexts,
                            const std::string& query, const sara::BudgetPolicy& policy,
                            const sara::EmbedFn& embed, const sara::ProjectionMap* projection,
                            const sara::PromptTemplate& tpl) {
    const sara::Partition partition = sara::partition_evidence(contexts, policy, query, tpl);

    std::vector<sara::CompressedContext> compressed;
    compressed.reserve(partition.compressed.size());
    for (const auto& ctx : partition.compressed) {
        compressed.push_back(
            {ctx.ref,
             sara::compress_context(ctx, embed, projection, policy.max_vectors_per_context)});
    }

    const sara::GenerationRequest request =
        sara::render_request(query, partition.natural, compressed, tpl);
    const std::size_t text_tokens = sara::request_text_tokens(request);
    const std::size_t vector_count = sara::request_vector_count(request);
    const std::size_t total = text_tokens + policy.vector_token_cost * vector_count;

    nlohmann::json out;
    out["k"] = partition.k;
    out["text_tokens"] = text_tokens;
    out["vector_count"] = vector_count;
    out["total_cost"] = total;
    out["within_budget"] = total <= policy.budget_tokens;
    out["request"] = nlohmann::json::parse(sara::serialize_request(request));
    return out;
}

sara::BudgetPolicy make_policy(const ToolConfig& cfg) {
    sara::BudgetPolicy policy;
    policy.budget_tokens = cfg.budget_tokens;
    policy.vector_token_cost = cfg.vector_token_cost;
    policy.k = cfg.fixed_k;
    policy.max_vectors_per_context = cfg.max_vectors;
    if (cfg.budget_mode == "fixed-k") {
        policy.mode = sara::BudgetPolicy::Mode::FixedK;
    } else if (cfg.budget_mode == "budget-fit") {
        policy.mode = sara::BudgetPolicy::Mode::BudgetFit;
    } else {
        throw Error(ErrCode::BadArgument, "unknown budget mode: " + cfg.budget_mode);
    }
    return policy;
}

void emit(const nlohmann::json& doc) { std::cout << doc.dump() << "\n"; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sara: BM25/dense retrieval, evidence selection, and hybrid prompt assembly"};
    app.require_subcommand(1);

    ToolConfig cfg;
    std::string config_path;
    std::string corpus_path;
    std::string out_path;
    std::string query;
    std::string trace_path;
    std::string pred_path;
    std::string gold_path;
    std::string report_path;
    std::string csv_path;
    double min_csi = 0.0;
    bool dispatch = false;

    // Flags write straight into cfg after the config file is applied, so the
    // precedence is flag > config > environment > default.
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file; flags override its values");
    };

    auto* cmd_index = app.add_subcommand("index", "Build and persist an index from corpus JSONL");
    add_common(cmd_index);
    cmd_index->add_option("--corpus", corpus_path, "Corpus JSONL path")->required();
    cmd_index->add_option("--out", out_path, "Output index directory")->required();
    auto* opt_chunk = cmd_index->add_option("--chunk-size", cfg.chunk_size, "Chunk size in tokens");

    auto* cmd_retrieve = app.add_subcommand("retrieve", "Rank chunks for a query");
    add_common(cmd_retrieve);
    cmd_retrieve->add_option("--index", cfg.index_path, "Index directory");
    cmd_retrieve->add_option("--query", query, "Query text")->required();
    auto* opt_rn = cmd_retrieve->add_option("--n", cfg.n, "Results to return");
    auto* opt_rmode = cmd_retrieve->add_option("--mode", cfg.retrieve_mode, "bm25 or dense");

    auto* cmd_select = app.add_subcommand("select", "Greedy evidence selection over retrieved chunks");
    add_common(cmd_select);
    cmd_select->add_option("--index", cfg.index_path, "Index directory");
    cmd_select->add_option("--query", query, "Query text")->required();
    auto* opt_sstrat = cmd_select->add_option("--strategy", cfg.strategy, "emb or csi");
    auto* opt_sn = cmd_select->add_option("--n", cfg.n, "Candidates to retrieve");
    auto* opt_sk = cmd_select->add_option("--k", cfg.k_sel, "Contexts to select");
    cmd_select->add_option("--trace", trace_path, "Write a JSONL selection trace here");
    auto* opt_sfilter =
        cmd_select->add_option("--min-csi-filter", min_csi, "Drop candidates scoring below this");
    auto* opt_squery_cond = cmd_select->add_flag("--condition-on-query", cfg.condition_on_query,
                                                 "Prepend the query to the CSI condition");
    auto* opt_srmode =
        cmd_select->add_option("--retrieve-mode", cfg.retrieve_mode, "bm25 or dense");

    auto* cmd_assemble =
        app.add_subcommand("assemble", "Emit a budgeted generation request for a query");
    add_common(cmd_assemble);
    cmd_assemble->add_option("--index", cfg.index_path, "Index directory");
    cmd_assemble->add_option("--query", query, "Query text")->required();
    auto* opt_astrat = cmd_assemble->add_option("--strategy", cfg.strategy, "emb or csi");
    auto* opt_an = cmd_assemble->add_option("--n", cfg.n, "Candidates to retrieve");
    auto* opt_abudget = cmd_assemble->add_option("--budget", cfg.budget_tokens, "Token budget");
    auto* opt_amode =
        cmd_assemble->add_option("--mode", cfg.budget_mode, "fixed-k or budget-fit");
    auto* opt_ak = cmd_assemble->add_option("--k", cfg.fixed_k, "Natural-text contexts (fixed-k)");
    auto* opt_avcost =
        cmd_assemble->add_option("--vector-cost", cfg.vector_token_cost, "Budget cost per vector");
    auto* opt_amaxv = cmd_assemble->add_option("--max-vectors", cfg.max_vectors,
                                               "Vector cap per compressed context");
    auto* opt_aproj =
        cmd_assemble->add_option("--projection", cfg.projection_path, "Projection map JSON");
    auto* opt_armode =
        cmd_assemble->add_option("--retrieve-mode", cfg.retrieve_mode, "bm25 or dense");
    cmd_assemble->add_flag("--dispatch", dispatch, "POST the request to the generate service");

    auto* cmd_sweep = app.add_subcommand("sweep", "Emit one fixed-k request per k = 0..N");
    add_common(cmd_sweep);
    cmd_sweep->add_option("--index", cfg.index_path, "Index directory");
    cmd_sweep->add_option("--query", query, "Query text")->required();
    auto* opt_wstrat = cmd_sweep->add_option("--strategy", cfg.strategy, "emb or csi");
    auto* opt_wn = cmd_sweep->add_option("--n", cfg.n, "Candidates to retrieve");
    auto* opt_wbudget = cmd_sweep->add_option("--budget", cfg.budget_tokens, "Token budget");
    auto* opt_wvcost =
        cmd_sweep->add_option("--vector-cost", cfg.vector_token_cost, "Budget cost per vector");
    auto* opt_wmaxv = cmd_sweep->add_option("--max-vectors", cfg.max_vectors,
                                            "Vector cap per compressed context");
    auto* opt_wproj =
        cmd_sweep->add_option("--projection", cfg.projection_path, "Projection map JSON");
    auto* opt_wrmode =
        cmd_sweep->add_option("--retrieve-mode", cfg.retrieve_mode, "bm25 or dense");

    auto* cmd_eval = app.add_subcommand("eval", "Score predictions against gold answers");
    add_common(cmd_eval);
    cmd_eval->add_option("--pred", pred_path, "Predictions JSONL")->required();
    cmd_eval->add_option("--gold", gold_path, "Gold answers JSONL")->required();
    cmd_eval->add_option("--report", report_path, "Write the JSON report here too");
    cmd_eval->add_option("--csv", csv_path, "Write per-record scores as CSV");

    try {
        app.parse(argc, argv);

        // Re-apply precedence: start from defaults + config file, then lay
        // explicitly passed flags back on top.
        if (!config_path.empty()) {
            ToolConfig flag_values = cfg;
            cfg = ToolConfig{};
            apply_config_file(cfg, config_path);
            auto keep = [&](const CLI::Option* opt, auto member) {
                if (opt != nullptr && opt->count() > 0) cfg.*member = flag_values.*member;
            };
            keep(opt_chunk, &ToolConfig::chunk_size);
            keep(opt_rn, &ToolConfig::n);
            keep(opt_sn, &ToolConfig::n);
            keep(opt_an, &ToolConfig::n);
            keep(opt_wn, &ToolConfig::n);
            keep(opt_rmode, &ToolConfig::retrieve_mode);
            keep(opt_srmode, &ToolConfig::retrieve_mode);
            keep(opt_armode, &ToolConfig::retrieve_mode);
            keep(opt_wrmode, &ToolConfig::retrieve_mode);
            keep(opt_sstrat, &ToolConfig::strategy);
            keep(opt_astrat, &ToolConfig::strategy);
            keep(opt_wstrat, &ToolConfig::strategy);
            keep(opt_sk, &ToolConfig::k_sel);
            keep(opt_ak, &ToolConfig::fixed_k);
            keep(opt_abudget, &ToolConfig::budget_tokens);
            keep(opt_wbudget, &ToolConfig::budget_tokens);
            keep(opt_amode, &ToolConfig::budget_mode);
            keep(opt_avcost, &ToolConfig::vector_token_cost);
            keep(opt_wvcost, &ToolConfig::vector_token_cost);
            keep(opt_amaxv, &ToolConfig::max_vectors);
            keep(opt_wmaxv, &ToolConfig::max_vectors);
            keep(opt_aproj, &ToolConfig::projection_path);
            keep(opt_wproj, &ToolConfig::projection_path);
            keep(opt_squery_cond, &ToolConfig::condition_on_query);
            for (auto* cmd : {cmd_retrieve, cmd_select, cmd_assemble, cmd_sweep}) {
                if (cmd->parsed() && cmd->count("--index") > 0) {
                    cfg.index_path = flag_values.index_path;
                }
            }
        }
        if (opt_sfilter->count() > 0) cfg.min_csi_filter = min_csi;
        resolve_endpoints(cfg);

        if (cmd_index->parsed()) {
            const auto documents = sara::load_corpus_jsonl(corpus_path, cfg.chunk_size);
            std::vector<sara::Chunk> chunks;
            for (const auto& doc : documents) {
                chunks.insert(chunks.end(), doc.chunks.begin(), doc.chunks.end());
            }
            const auto index = sara::Index::build(chunks, sara::rule_v1_profile());
            index.persist(out_path);
            nlohmann::json out;
            out["documents"] = documents.size();
            out["chunks"] = chunks.size();
            out["avg_chunk_len"] = index.avg_chunk_len();
            out["index"] = out_path;
            emit(out);
        } else if (cmd_retrieve->parsed()) {
            const auto index = load_index(cfg);
            const auto results = run_retrieval(cfg, index, query, cfg.n);
            nlohmann::json rows = nlohmann::json::array();
            for (const auto& r : results) {
                const auto& row = index.chunk(r.chunk);
                rows.push_back({{"chunk_id", row.id},
                                {"doc_id", row.doc_id},
                                {"seq_no", row.seq_no},
                                {"rank", r.rank},
                                {"score", r.score},
                                {"text", row.text}});
            }
            emit({{"query", query}, {"mode", cfg.retrieve_mode}, {"results", rows}});
        } else if (cmd_select->parsed()) {
            const auto index = load_index(cfg);
            const auto run = run_selection(cfg, index, query, cfg.k_sel);
            if (!trace_path.empty()) write_trace(trace_path, run.trace, cfg.strategy);
            nlohmann::json rows = nlohmann::json::array();
            for (const auto& sel : run.evidence.selected) {
                rows.push_back({{"chunk_id", sel.chunk_ref},
                                {"step", sel.step},
                                {"score", sel.score},
                                {"retrieval_rank", sel.retrieval_rank}});
            }
            emit({{"query", query}, {"strategy", cfg.strategy}, {"selected", rows}});
        } else if (cmd_assemble->parsed()) {
            const auto index = load_index(cfg);
            const auto tpl = make_template(cfg);
            const auto policy = make_policy(cfg);
            // Selection orders every retrieved candidate; the policy then
            // splits that ordering into natural and compressed parts.
            const auto retrieved_count = std::min(cfg.n, index.doc_count());
            const auto run = run_selection(cfg, index, query, retrieved_count);
            const auto contexts = evidence_contexts(index, run.evidence);

            std::optional<sara::ProjectionMap> projection;
            if (!cfg.projection_path.empty()) {
                projection = sara::load_projection_map(cfg.projection_path);
            }
            const sara::EmbedFn embed = make_embed_backend(cfg).fn();
            nlohmann::json out = assemble_one(cfg, contexts, query, policy, embed,
                                              projection ? &*projection : nullptr, tpl);
            if (dispatch) {
                if (cfg.generate_endpoint.empty()) {
                    throw Error(ErrCode::BadConfig,
                                "dispatch requires a generate endpoint (config or "
                                "SARA_GENERATE_URL)");
                }
                const auto request = sara::parse_request(out["request"].dump());
                out["answer"] = sara::dispatch_request(cfg.generate_endpoint, request);
            }
            emit(out);
        } else if (cmd_sweep->parsed()) {
            const auto index = load_index(cfg);
            const auto tpl = make_template(cfg);
            const auto total = std::min(cfg.n, index.doc_count());
            const auto run = run_selection(cfg, index, query, total);
            const auto contexts = evidence_contexts(index, run.evidence);

            std::optional<sara::ProjectionMap> projection;
            if (!cfg.projection_path.empty()) {
                projection = sara::load_projection_map(cfg.projection_path);
            }
            const sara::EmbedFn embed = make_embed_backend(cfg).fn();

            nlohmann::json entries = nlohmann::json::array();
            for (std::size_t k = 0; k <= contexts.size(); ++k) {
                sara::BudgetPolicy policy;
                policy.budget_tokens = cfg.budget_tokens;
                policy.vector_token_cost = cfg.vector_token_cost;
                policy.max_vectors_per_context = cfg.max_vectors;
                policy.mode = sara::BudgetPolicy::Mode::FixedK;
                policy.k = k;
                entries.push_back(assemble_one(cfg, contexts, query, policy, embed,
                                               projection ? &*projection : nullptr, tpl));
            }
            emit({{"query", query},
                  {"strategy", cfg.strategy},
                  {"n", contexts.size()},
                  {"budget", cfg.budget_tokens},
                  {"entries", entries}});
        } else if (cmd_eval->parsed()) {
            const auto records = sara::load_eval_records(pred_path, gold_path);
            const auto report = sara::evaluate_run(records);
            const std::string json = sara::report_to_json(report);
            if (!report_path.empty()) {
                std::ofstream out(report_path);
                if (!out) throw Error(ErrCode::Io, "cannot write report: " + report_path);
                out << json << "\n";
            }
            if (!csv_path.empty()) sara::write_report_csv(report, csv_path);
            std::cout << json << "\n";
        }
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return sara::exit_status(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
