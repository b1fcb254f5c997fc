// Acceptance harness. Each criterion prints one PASS/FAIL line; the exit
// code is the number of failures, so CTest treats any failure as a failed
// test while the log stays readable on its own.

#include <algorithm>
#include <bit>
#include <cfloat>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sara/assemble.hpp"
#include "sara/embed.hpp"
#include "sara/errors.hpp"
#include "sara/evalkit.hpp"
#include "sara/proxylm.hpp"
#include "sara/retrieval.hpp"
#include "sara/select.hpp"
#include "sara/textcore.hpp"

namespace {

// Small deterministic generator so runs are reproducible across platforms.
struct Lcg {
    std::uint64_t state;

    explicit Lcg(std::uint64_t seed) : state(seed ^ 0x9e3779b97f4a7c15ULL) {}

    std::uint64_t next() {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return state >> 11;
    }

    std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }

    std::size_t between(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }

    double unit() { return static_cast<double>(next() % 1000000) / 1000000.0; }
};

const std::vector<std::string>& word_pool() {
    static const std::vector<std::string> kWords = {
        "ridge", "vale", "stone", "brook", "ember", "frost",
        "gale",  "moss", "pike",  "reed",  "shale", "tarn",
    };
    return kWords;
}

std::string random_words(Lcg& rng, std::size_t count) {
    std::string out;
    for (std::size_t i = 0; i < count; ++i) {
        if (i > 0) out += ' ';
        out += word_pool()[rng.below(word_pool().size())];
    }
    return out;
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

sara::CsiFn forbidden_csi() {
    return [](const std::string&, const std::vector<std::string>&) -> sara::CsiScore {
        throw sara::Error(sara::ErrCode::BadConfig, "csi callback invoked unexpectedly");
    };
}

sara::EmbedFn forbidden_embed() {
    return [](const std::string&) -> sara::EmbeddingVector {
        throw sara::Error(sara::ErrCode::BadConfig, "embed callback invoked unexpectedly");
    };
}

std::filesystem::path fresh_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("sara_acceptance_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

bool float_bits_equal(float a, float b) {
    return std::bit_cast<std::uint32_t>(a) == std::bit_cast<std::uint32_t>(b);
}

bool double_bits_equal(double a, double b) {
    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

// ---------------------------------------------------------------------------
// 1. Selection-oracle equivalence.
//
// Re-scores every remaining candidate from scratch at every step, fully
// independently of the library's incremental bookkeeping, and demands exact
// agreement on the chosen sequence, the step scores, and the expanded query
// vector. Duplicate candidate texts are injected to force embedding ties.

struct OracleInstance {
    std::string query;
    std::vector<std::string> texts;
    std::size_t k_sel = 1;
};

OracleInstance random_instance(Lcg& rng, std::size_t max_k) {
    OracleInstance inst;
    const std::size_t m = rng.between(1, 8);
    inst.query = random_words(rng, rng.between(2, 6));
    for (std::size_t i = 0; i < m; ++i) {
        if (i > 0 && rng.below(4) == 0) {
            inst.texts.push_back(inst.texts[rng.below(i)]);  // forced tie
        } else {
            inst.texts.push_back(random_words(rng, rng.between(3, 10)));
        }
    }
    inst.k_sel = rng.between(1, std::min(max_k, m));
    return inst;
}

struct OracleSelection {
    std::vector<std::size_t> order;  // candidate indices in pick order
    std::vector<double> scores;     // aligned; order[0] carries the retrieval score
    std::vector<float> v_q;
};

OracleSelection oracle_select(const OracleInstance& inst, std::size_t dim,
                              std::span<const double> retrieval_scores) {
    OracleSelection out;
    std::vector<sara::EmbeddingVector> embeds;
    for (const auto& t : inst.texts) embeds.push_back(sara::hash_stub_embed(t, dim));
    const sara::EmbeddingVector q = sara::hash_stub_embed(inst.query, dim);

    out.v_q.resize(dim);
    for (std::size_t c = 0; c < dim; ++c) {
        out.v_q[c] = static_cast<float>(
            (static_cast<double>(q.values[c]) + static_cast<double>(embeds[0].values[c])) / 2.0);
    }

    out.order.push_back(0);
    out.scores.push_back(retrieval_scores[0]);

    std::vector<double> sum(dim, 0.0);
    for (std::size_t c = 0; c < dim; ++c) sum[c] = static_cast<double>(embeds[0].values[c]);

    std::vector<std::size_t> remaining;
    for (std::size_t i = 1; i < inst.texts.size(); ++i) remaining.push_back(i);

    for (std::size_t step = 2; step <= inst.k_sel; ++step) {
        const double denom = static_cast<double>(step);
        bool found = false;
        std::size_t best_slot = 0;
        double best_sq = 0.0;
        for (std::size_t slot = 0; slot < remaining.size(); ++slot) {
            const auto& cand = embeds[remaining[slot]];
            double sq = 0.0;
            for (std::size_t c = 0; c < dim; ++c) {
                const double mean = (sum[c] + static_cast<double>(cand.values[c])) / denom;
                const double diff = static_cast<double>(out.v_q[c]) - mean;
                sq += diff * diff;
            }
            if (!found || sq < best_sq) {
                found = true;
                best_slot = slot;
                best_sq = sq;
            }
        }
        const std::size_t idx = remaining[best_slot];
        out.order.push_back(idx);
        out.scores.push_back(std::sqrt(best_sq));
        for (std::size_t c = 0; c < dim; ++c) sum[c] += static_cast<double>(embeds[idx].values[c]);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best_slot));
    }
    return out;
}

Outcome criterion_selection_oracle() {
    constexpr std::size_t kDim = 16;
    Lcg rng(101);
    const sara::EmbedFn embed = [](const std::string& text) {
        return sara::hash_stub_embed(text, kDim);
    };

    for (int trial = 0; trial < 200; ++trial) {
        const OracleInstance inst = random_instance(rng, 4);
        std::vector<sara::Candidate> cands;
        std::vector<double> scores;
        for (std::size_t i = 0; i < inst.texts.size(); ++i) {
            cands.push_back({"c" + std::to_string(i), static_cast<std::uint32_t>(i + 1),
                             inst.texts[i]});
            scores.push_back(static_cast<double>(inst.texts.size() - i));
        }

        sara::SelectionConfig config;
        config.n = inst.texts.size();
        config.k_sel = inst.k_sel;
        config.strategy = sara::Strategy::Emb;

        const sara::EvidenceSet got =
            sara::select_evidence(inst.query, cands, scores, config, embed, forbidden_csi());
        const OracleSelection want = oracle_select(inst, kDim, scores);

        if (got.selected.size() != want.order.size()) {
            return {false, "trial " + std::to_string(trial) + ": size mismatch"};
        }
        for (std::size_t s = 0; s < want.order.size(); ++s) {
            const auto& sel = got.selected[s];
            const std::string want_ref = "c" + std::to_string(want.order[s]);
            if (sel.chunk_ref != want_ref || sel.step != s + 1 ||
                sel.retrieval_rank != want.order[s] + 1 ||
                !double_bits_equal(sel.score, want.scores[s])) {
                return {false, "trial " + std::to_string(trial) + " step " +
                                   std::to_string(s + 1) + ": picked " + sel.chunk_ref +
                                   ", oracle wants " + want_ref};
            }
        }
        if (!got.query_vec || got.query_vec->dim() != kDim) {
            return {false, "trial " + std::to_string(trial) + ": missing query vector"};
        }
        for (std::size_t c = 0; c < kDim; ++c) {
            if (!float_bits_equal(got.query_vec->values[c], want.v_q[c])) {
                return {false, "trial " + std::to_string(trial) + ": query vector differs"};
            }
        }
    }
    return {true, "200/200 instances exact, scores and query vectors bit-equal"};
}

// ---------------------------------------------------------------------------
// 2. CSI oracle.

Outcome criterion_csi_oracle() {
    const sara::ProxyLMModel unigram = sara::ProxyLMModel::train({"a a b"}, 1, 1.0);
    const sara::CsiScore got = unigram.csi_score("a b", {});
    if (std::fabs(got.value - 0.8959) > 1e-4) {
        return {false, "csi(\"a b\") = " + std::to_string(got.value) + ", want 0.8959 +/- 1e-4"};
    }

    const std::string trained =
        "the sun rose over the quiet harbor and the boats returned to the quiet harbor";
    const sara::ProxyLMModel bigram = sara::ProxyLMModel::train({trained}, 2, 0.1);
    const double seen = bigram.csi_score("the sun rose over the quiet harbor", {}).value;
    const double unseen = bigram.csi_score("zephyr quartz baffle crumpet", {}).value;
    if (!(seen < unseen)) {
        return {false, "redundancy violated: trained " + std::to_string(seen) +
                           " !< unseen " + std::to_string(unseen)};
    }
    return {true, "csi(\"a b\") = " + std::to_string(got.value) +
                      "; trained " + std::to_string(seen) + " < unseen " +
                      std::to_string(unseen)};
}

// ---------------------------------------------------------------------------
// 3. Argmin scaling invariance.
//
// Texts draw from a wide pool here. The narrow pool used by criterion 1
// manufactures exact distance collisions between different vectors, and
// those ties are decided by rounding noise rather than by any magnitude
// dependence, which is the property under test. Identical texts still get
// injected: equal vectors scale to equal vectors, so real ties stay stable.

const std::vector<std::string>& wide_pool() {
    static const std::vector<std::string> kWords = {
        "anchor",   "basalt",  "cascade", "driftwood", "estuary",  "fjord",
        "granite",  "horizon", "inlet",   "juniper",   "kelp",     "lagoon",
        "meadow",   "nimbus",  "orchard", "plateau",   "quarry",   "rapids",
        "summit",   "thicket", "upland",  "verge",     "waterfall", "xenolith",
        "yearling", "zenith",  "bluff",   "crag",      "delta",    "eddy",
        "floe",     "gorge",   "heath",   "isthmus",   "knoll",    "ledge",
        "marsh",    "notch",   "outcrop", "pinnacle",
    };
    return kWords;
}

OracleInstance wide_instance(Lcg& rng) {
    OracleInstance inst;
    const std::size_t m = rng.between(2, 8);
    auto words = [&](std::size_t count) {
        std::string out;
        for (std::size_t i = 0; i < count; ++i) {
            if (i > 0) out += ' ';
            out += wide_pool()[rng.below(wide_pool().size())];
        }
        return out;
    };
    inst.query = words(rng.between(2, 6));
    for (std::size_t i = 0; i < m; ++i) {
        if (i > 0 && rng.below(4) == 0) {
            inst.texts.push_back(inst.texts[rng.below(i)]);
        } else {
            inst.texts.push_back(words(rng.between(5, 12)));
        }
    }
    inst.k_sel = rng.between(2, std::min<std::size_t>(4, m));
    return inst;
}

Outcome criterion_scaling_invariance() {
    constexpr std::size_t kDim = 16;
    Lcg rng(303);
    const float scales[] = {0.1f, 3.0f, 100.0f};

    for (int trial = 0; trial < 50; ++trial) {
        const OracleInstance inst = wide_instance(rng);

        std::vector<sara::Candidate> cands;
        std::vector<double> scores;
        for (std::size_t i = 0; i < inst.texts.size(); ++i) {
            cands.push_back({"c" + std::to_string(i), static_cast<std::uint32_t>(i + 1),
                             inst.texts[i]});
            scores.push_back(static_cast<double>(inst.texts.size() - i));
        }
        sara::SelectionConfig config;
        config.n = inst.texts.size();
        config.k_sel = inst.k_sel;
        config.strategy = sara::Strategy::Emb;

        auto order_with_scale = [&](std::optional<float> scale) {
            sara::EmbedFn embed = [scale](const std::string& text) {
                sara::EmbeddingVector v = sara::hash_stub_embed(text, kDim);
                if (scale) {
                    for (float& x : v.values) x *= *scale;
                }
                return v;
            };
            const sara::EvidenceSet set =
                sara::select_evidence(inst.query, cands, scores, config, embed, forbidden_csi());
            std::vector<std::string> refs;
            for (const auto& sel : set.selected) refs.push_back(sel.chunk_ref);
            return refs;
        };

        const std::vector<std::string> base = order_with_scale(std::nullopt);
        for (float c : scales) {
            if (order_with_scale(c) != base) {
                return {false, "trial " + std::to_string(trial) + ": order changed at scale " +
                                   std::to_string(c)};
            }
        }
    }
    return {true, "50/50 instances identical across scales 0.1, 3, 100"};
}

// ---------------------------------------------------------------------------
// 4. Budget safety.

std::vector<sara::EvidenceContext> random_contexts(Lcg& rng) {
    std::vector<sara::EvidenceContext> out;
    const std::size_t count = rng.between(3, 12);
    for (std::size_t i = 0; i < count; ++i) {
        std::string text;
        const std::size_t sentences = rng.between(1, 9);
        for (std::size_t s = 0; s < sentences; ++s) {
            if (s > 0) text += ' ';
            std::string sentence = random_words(rng, rng.between(3, 29));
            sentence[0] = static_cast<char>(sentence[0] - 'a' + 'A');
            text += sentence + ".";
        }
        out.push_back(sara::EvidenceContext::from_text("r" + std::to_string(i), text));
    }
    return out;
}

std::size_t rendered_cost(const std::vector<sara::EvidenceContext>& natural,
                          const std::vector<sara::EvidenceContext>& compressed,
                          const std::string& question, const sara::BudgetPolicy& policy,
                          const sara::PromptTemplate& tpl, const sara::EmbedFn& embed) {
    std::vector<sara::CompressedContext> packed;
    for (const auto& ctx : compressed) {
        packed.emplace_back(ctx.ref, sara::compress_context(ctx, embed, nullptr,
                                                            policy.max_vectors_per_context));
    }
    const sara::GenerationRequest req = sara::render_request(question, natural, packed, tpl);
    return sara::request_text_tokens(req) +
           policy.vector_token_cost * sara::request_vector_count(req);
}

Outcome criterion_budget_safety() {
    Lcg rng(404);
    const sara::PromptTemplate tpl = sara::inference_template();
    const sara::EmbedFn embed = [](const std::string& text) {
        return sara::hash_stub_embed(text, 8);
    };

    int emitted = 0;
    int infeasible = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const auto contexts = random_contexts(rng);
        const std::string question = random_words(rng, rng.between(3, 8)) + "?";
        sara::BudgetPolicy policy;
        policy.budget_tokens = rng.between(128, 2048);
        policy.vector_token_cost = 1;
        policy.mode = sara::BudgetPolicy::Mode::BudgetFit;

        try {
            const sara::Partition part = sara::partition_evidence(contexts, policy, question, tpl);
            const std::size_t cost =
                rendered_cost(part.natural, part.compressed, question, policy, tpl, embed);
            if (cost > policy.budget_tokens) {
                return {false, "trial " + std::to_string(trial) + ": cost " +
                                   std::to_string(cost) + " exceeds budget " +
                                   std::to_string(policy.budget_tokens)};
            }
            ++emitted;
        } catch (const sara::Error& e) {
            if (e.code() != sara::ErrCode::BudgetInfeasible) throw;
            // Infeasibility must be real: even the all-compressed layout
            // has to exceed the budget.
            const std::size_t floor_cost =
                rendered_cost({}, contexts, question, policy, tpl, embed);
            if (floor_cost <= policy.budget_tokens) {
                return {false, "trial " + std::to_string(trial) +
                                   ": spurious infeasibility, floor cost " +
                                   std::to_string(floor_cost) + " fits budget " +
                                   std::to_string(policy.budget_tokens)};
            }
            ++infeasible;
        }
    }
    if (emitted < 400) {
        return {false, "only " + std::to_string(emitted) + "/500 assemblies emitted"};
    }

    // Monotonicity on a fixed fixture.
    std::vector<sara::EvidenceContext> fixture;
    for (std::size_t i = 0; i < 6; ++i) {
        std::string text;
        for (std::size_t s = 0; s < i + 2; ++s) {
            if (s > 0) text += ' ';
            text += "Sentence " + std::to_string(s) +
                    " walks the same worn path across the upper meadow again.";
        }
        fixture.push_back(sara::EvidenceContext::from_text("f" + std::to_string(i), text));
    }
    const std::string question = "Which path crosses the meadow?";
    std::size_t prev_k = 0;
    bool first = true;
    for (std::size_t budget = 128; budget <= 2048; budget += 32) {
        sara::BudgetPolicy policy;
        policy.budget_tokens = budget;
        policy.vector_token_cost = 1;
        policy.mode = sara::BudgetPolicy::Mode::BudgetFit;
        const sara::Partition part = sara::partition_evidence(fixture, policy, question, tpl);
        if (!first && part.k < prev_k) {
            return {false, "k dropped from " + std::to_string(prev_k) + " to " +
                               std::to_string(part.k) + " at budget " + std::to_string(budget)};
        }
        prev_k = part.k;
        first = false;
    }
    if (prev_k != fixture.size()) {
        return {false, "k never saturated: final k " + std::to_string(prev_k)};
    }
    return {true, std::to_string(emitted) + " emitted within budget, " +
                      std::to_string(infeasible) + " provably infeasible; k monotone to " +
                      std::to_string(prev_k)};
}

// ---------------------------------------------------------------------------
// 5. BM25 hand value.

sara::Chunk toy_chunk(const std::string& doc, const std::string& text) {
    sara::Chunk chunk;
    chunk.id = doc + "#0";
    chunk.doc_id = doc;
    chunk.seq_no = 0;
    chunk.text = text;
    chunk.token_count = sara::count_tokens(text);
    return chunk;
}

Outcome criterion_bm25_hand_value() {
    const std::vector<sara::Chunk> chunks = {
        toy_chunk("d1", "a b a"),
        toy_chunk("d2", "b c"),
        toy_chunk("d3", "c c c"),
    };
    const sara::Index index = sara::Index::build(chunks, sara::rule_v1_profile());
    const std::vector<std::string> query = {"a"};
    const double got = index.bm25_score(query, 0);
    if (std::fabs(got - 1.3028) > 1e-3) {
        return {false, "score(c1, \"a\") = " + std::to_string(got) + ", want 1.3028 +/- 1e-3"};
    }

    // IDF must fall strictly as the document frequency of "a" rises.
    auto idf_with_df = [](int df) {
        std::vector<sara::Chunk> corpus = {
            toy_chunk("d1", "a b"),
            toy_chunk("d2", df >= 2 ? "a c" : "c c"),
            toy_chunk("d3", df >= 3 ? "a d" : "d d"),
        };
        return sara::Index::build(corpus, sara::rule_v1_profile()).idf("a");
    };
    const double idf1 = idf_with_df(1);
    const double idf2 = idf_with_df(2);
    const double idf3 = idf_with_df(3);
    if (!(idf1 > idf2 && idf2 > idf3)) {
        return {false, "idf not monotone: " + std::to_string(idf1) + ", " + std::to_string(idf2) +
                           ", " + std::to_string(idf3)};
    }
    return {true, "score(c1, \"a\") = " + std::to_string(got) + "; idf " + std::to_string(idf1) +
                      " > " + std::to_string(idf2) + " > " + std::to_string(idf3)};
}

// ---------------------------------------------------------------------------
// 6. Metric oracles.
//
// The exhaustive sweep walks every pair of sequences of length <= 8 over a
// 3-symbol alphabet. The oracle is a textbook DP evaluated column by column
// while depth-first walking the trie of b-sequences, so each b extends its
// parent's work; the library side is called per pair.

std::size_t lcs_ref(std::span<const int> a, std::span<const int> b) {
    std::vector<std::size_t> row(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = 0;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t above = row[j];
            row[j] = a[i - 1] == b[j - 1] ? diag + 1 : std::max(above, row[j - 1]);
            diag = above;
        }
    }
    return row[b.size()];
}

struct LcsSweep {
    std::span<const int> a;
    long pairs = 0;
    long mismatches = 0;
    int path[8] = {};
    // cols[d][i] = LCS(a[0..i), first d symbols of the current path)
    std::size_t cols[9][9] = {};

    void dfs(std::size_t depth) {
        ++pairs;
        const std::span<const int> b(path, depth);
        if (sara::detail::lcs_length(a, b) != cols[depth][a.size()]) ++mismatches;
        if (depth == 8) return;
        for (int symbol = 0; symbol < 3; ++symbol) {
            path[depth] = symbol;
            const std::size_t* old_col = cols[depth];
            std::size_t* new_col = cols[depth + 1];
            new_col[0] = 0;
            for (std::size_t i = 1; i <= a.size(); ++i) {
                new_col[i] = a[i - 1] == symbol ? old_col[i - 1] + 1
                                                : std::max(old_col[i], new_col[i - 1]);
            }
            dfs(depth + 1);
        }
    }
};

std::vector<std::vector<int>> sequences_up_to(int max_len, int alphabet) {
    std::vector<std::vector<int>> seqs = {{}};
    std::vector<std::vector<int>> frontier = {{}};
    for (int len = 1; len <= max_len; ++len) {
        std::vector<std::vector<int>> next;
        for (const auto& s : frontier) {
            for (int c = 0; c < alphabet; ++c) {
                auto grown = s;
                grown.push_back(c);
                seqs.push_back(grown);
                next.push_back(std::move(grown));
            }
        }
        frontier = std::move(next);
    }
    return seqs;
}

Outcome criterion_metric_oracles() {
    const double f1 = sara::token_f1("the cat sat", "cat sat down");
    if (std::fabs(f1 - 0.6667) > 1e-4) {
        return {false, "token_f1 = " + std::to_string(f1) + ", want 0.6667 +/- 1e-4"};
    }
    const double rl = sara::rouge_l("a b c d", "a c d");
    if (std::fabs(rl - 0.8571) > 1e-4) {
        return {false, "rouge_l = " + std::to_string(rl) + ", want 0.8571 +/- 1e-4"};
    }

    const auto seqs = sequences_up_to(8, 3);
    long pairs = 0;
    for (const auto& a : seqs) {
        LcsSweep sweep;
        sweep.a = a;
        sweep.dfs(0);
        if (sweep.mismatches != 0) {
            return {false, "lcs mismatches for a sequence of length " +
                               std::to_string(a.size())};
        }
        pairs += sweep.pairs;
    }

    // Tie the core result back to the public string metric on a sample.
    Lcg rng(606);
    const char* words[] = {"aa", "bb", "cc"};
    auto to_text = [&](const std::vector<int>& seq) {
        std::string out;
        for (std::size_t i = 0; i < seq.size(); ++i) {
            if (i > 0) out += ' ';
            out += words[seq[i]];
        }
        return out;
    };
    for (int sample = 0; sample < 2000; ++sample) {
        const auto& a = seqs[rng.below(seqs.size())];
        const auto& b = seqs[rng.below(seqs.size())];
        double want;
        if (a.empty() && b.empty()) {
            want = 1.0;
        } else if (a.empty() || b.empty()) {
            want = 0.0;
        } else {
            const double lcs = static_cast<double>(lcs_ref(a, b));
            if (lcs == 0.0) {
                want = 0.0;
            } else {
                const double p = lcs / static_cast<double>(a.size());
                const double r = lcs / static_cast<double>(b.size());
                want = 2.0 * p * r / (p + r);
            }
        }
        const double got = sara::rouge_l(to_text(a), to_text(b));
        if (std::fabs(got - want) > 1e-12) {
            return {false, "string rouge_l deviates from oracle on sample " +
                               std::to_string(sample)};
        }
    }

    return {true, "hand values ok; " + std::to_string(pairs) +
                      " exhaustive pairs agree; 2000 string samples agree"};
}

// ---------------------------------------------------------------------------
// 7. Round-trips.

std::vector<sara::Chunk> fixture_chunks(std::size_t chunk_size) {
    const auto docs = sara::load_corpus_jsonl(
        std::filesystem::path(SARA_FIXTURE_DIR) / "corpus50.jsonl", chunk_size);
    std::vector<sara::Chunk> chunks;
    for (const auto& doc : docs) {
        for (const auto& chunk : doc.chunks) chunks.push_back(chunk);
    }
    return chunks;
}

std::string random_query(Lcg& rng) {
    static const std::vector<std::string> kTerms = {
        "glacier", "ice",   "valley", "river",  "storm",  "coral", "reef",
        "archive", "harbor", "desert", "forest", "carve",  "land",  "the",
        "and",     "of",     "zyxw",   "qqq",    "blorp",
    };
    std::string out;
    const std::size_t count = rng.between(1, 5);
    for (std::size_t i = 0; i < count; ++i) {
        if (i > 0) out += ' ';
        out += kTerms[rng.below(kTerms.size())];
    }
    return out;
}

Outcome criterion_round_trips() {
    // Index persist/load.
    const auto chunks = fixture_chunks(256);
    const sara::Index built = sara::Index::build(chunks, sara::rule_v1_profile());
    const auto dir = fresh_dir("index");
    built.persist(dir);
    const sara::Index loaded = sara::Index::load(dir);

    Lcg rng(707);
    for (int q = 0; q < 100; ++q) {
        const std::string query = random_query(rng);
        const auto before = built.retrieve_top_n(query, 10);
        const auto after = loaded.retrieve_top_n(query, 10);
        if (before.size() != after.size()) {
            return {false, "query " + std::to_string(q) + ": result sizes differ"};
        }
        for (std::size_t i = 0; i < before.size(); ++i) {
            if (built.chunk(before[i].chunk).id != loaded.chunk(after[i].chunk).id ||
                before[i].rank != after[i].rank ||
                !double_bits_equal(before[i].score, after[i].score)) {
                return {false, "query \"" + query + "\" rank " + std::to_string(i + 1) +
                                   " differs after reload"};
            }
        }
    }

    // GenerationRequest serialize/parse identity.
    Lcg req_rng(7072);
    const float specials[] = {0.0f,    -0.0f,   1.5f,  -2.75f, FLT_MIN,
                              FLT_MAX, 1e-42f,  0.1f,  3.0e38f, -1.0f};
    for (int t = 0; t < 100; ++t) {
        sara::GenerationRequest req;
        req.version = 1;
        req.instruction = random_words(req_rng, req_rng.between(3, 12));
        req.question = random_words(req_rng, req_rng.between(2, 7)) + "?";

        sara::Segment head;
        head.type = sara::Segment::Type::Text;
        head.content = req.instruction + " " + req.question + "\n";
        req.segments.push_back(head);

        const std::size_t dim = req_rng.between(1, 8);
        const std::size_t vec_segments = req_rng.below(4);
        for (std::size_t vs = 0; vs < vec_segments; ++vs) {
            sara::Segment seg;
            seg.type = sara::Segment::Type::Vectors;
            seg.origin = "chunk-" + std::to_string(vs);
            const std::size_t rows = req_rng.between(1, 4);
            for (std::size_t r = 0; r < rows; ++r) {
                sara::EmbeddingVector v;
                for (std::size_t c = 0; c < dim; ++c) {
                    if (req_rng.below(4) == 0) {
                        v.values.push_back(specials[req_rng.below(10)]);
                    } else {
                        v.values.push_back(
                            static_cast<float>((req_rng.unit() - 0.5) * 2000.0));
                    }
                }
                seg.vectors.push_back(std::move(v));
            }
            req.segments.push_back(std::move(seg));

            sara::Segment tail;
            tail.type = sara::Segment::Type::Text;
            tail.content = ";\n";
            req.segments.push_back(std::move(tail));
        }
        sara::Segment question_block;
        question_block.type = sara::Segment::Type::Text;
        question_block.content = "Question: " + req.question + "\nYour Answer:";
        req.segments.push_back(std::move(question_block));

        const std::string bytes = sara::serialize_request(req);
        const sara::GenerationRequest back = sara::parse_request(bytes);
        if (back.version != req.version || back.instruction != req.instruction ||
            back.question != req.question || back.segments.size() != req.segments.size()) {
            return {false, "request " + std::to_string(t) + ": top-level fields differ"};
        }
        for (std::size_t s = 0; s < req.segments.size(); ++s) {
            const auto& lhs = req.segments[s];
            const auto& rhs = back.segments[s];
            if (lhs.type != rhs.type || lhs.content != rhs.content || lhs.origin != rhs.origin ||
                lhs.vectors.size() != rhs.vectors.size()) {
                return {false, "request " + std::to_string(t) + " segment " + std::to_string(s) +
                                   " differs"};
            }
            for (std::size_t r = 0; r < lhs.vectors.size(); ++r) {
                if (lhs.vectors[r].dim() != rhs.vectors[r].dim()) {
                    return {false, "request " + std::to_string(t) + ": vector dim differs"};
                }
                for (std::size_t c = 0; c < lhs.vectors[r].dim(); ++c) {
                    if (!float_bits_equal(lhs.vectors[r].values[c], rhs.vectors[r].values[c])) {
                        return {false, "request " + std::to_string(t) +
                                           ": vector bits differ at segment " +
                                           std::to_string(s)};
                    }
                }
            }
        }
    }
    return {true, "100 query rankings bit-stable after reload; 100 request round-trips exact"};
}

// ---------------------------------------------------------------------------
// 8. Full-pipeline smoke test at the reference configuration.

Outcome criterion_smoke_test() {
    std::vector<std::string> violations;
    auto check = [&](bool ok, const std::string& what) {
        if (!ok) violations.push_back(what);
    };

    const auto chunks = fixture_chunks(256);
    const sara::Index index = sara::Index::build(chunks, sara::rule_v1_profile());
    const std::string query = "how do glaciers carve valleys and shape the land";

    const auto retrieved = index.retrieve_top_n(query, 10);
    check(retrieved.size() == 10, "retrieval returned " + std::to_string(retrieved.size()));
    for (std::size_t i = 0; i < retrieved.size(); ++i) {
        check(retrieved[i].rank == i + 1, "rank sequence broken");
        if (i > 0) check(retrieved[i].score <= retrieved[i - 1].score, "scores not non-increasing");
    }

    std::vector<sara::Candidate> cands;
    std::vector<double> scores;
    for (const auto& r : retrieved) {
        cands.push_back({index.chunk(r.chunk).id, r.rank, index.chunk(r.chunk).text});
        scores.push_back(r.score);
    }

    const sara::EmbedFn embed = [](const std::string& text) {
        return sara::hash_stub_embed(text, 64);
    };

    sara::SelectionConfig emb_config;
    emb_config.n = 10;
    emb_config.k_sel = 10;  // full ordering so every sweep k has evidence
    emb_config.strategy = sara::Strategy::Emb;
    const sara::EvidenceSet emb_set =
        sara::select_evidence(query, cands, scores, emb_config, embed, forbidden_csi());

    const sara::ProxyLMModel proxy = sara::ProxyLMModel::train(index.chunk_texts(), 3, 0.1);
    sara::SelectionConfig csi_config = emb_config;
    csi_config.strategy = sara::Strategy::Csi;
    const sara::EvidenceSet csi_set = sara::select_evidence(
        query, cands, scores, csi_config, forbidden_embed(), sara::make_ngram_csi(proxy));

    for (const sara::EvidenceSet* set : {&emb_set, &csi_set}) {
        check(set->selected.size() == 10, "selection size != 10");
        std::set<std::string> refs;
        for (std::size_t s = 0; s < set->selected.size(); ++s) {
            refs.insert(set->selected[s].chunk_ref);
            check(set->selected[s].step == s + 1, "selection steps not sequential");
        }
        check(refs.size() == set->selected.size(), "selection repeated a chunk");
        check(!set->selected.empty() && set->selected[0].chunk_ref == cands[0].chunk_ref,
              "selection does not seed from rank 1");
    }

    std::vector<sara::EvidenceContext> evidence;
    for (const auto& sel : emb_set.selected) {
        const auto ref = index.find_chunk(sel.chunk_ref);
        check(ref.has_value(), "selected chunk missing from index");
        if (!ref) continue;
        evidence.push_back(
            sara::EvidenceContext::from_text(sel.chunk_ref, index.chunk(*ref).text));
    }

    const sara::PromptTemplate tpl = sara::inference_template();
    const std::string question = query + "?";

    // Reference configuration: k = 5 natural contexts under a 512 budget.
    sara::BudgetPolicy fixed;
    fixed.budget_tokens = 512;
    fixed.vector_token_cost = 1;
    fixed.mode = sara::BudgetPolicy::Mode::FixedK;
    fixed.k = 5;
    const sara::Partition part = sara::partition_evidence(evidence, fixed, question, tpl);
    check(part.k == 5 && part.natural.size() == 5 && part.compressed.size() == 5,
          "fixed-k partition shape wrong");

    std::vector<sara::CompressedContext> packed;
    std::size_t expected_vectors = 0;
    for (const auto& ctx : part.compressed) {
        auto vecs = sara::compress_context(ctx, embed, nullptr, fixed.max_vectors_per_context);
        expected_vectors += vecs.size();
        packed.emplace_back(ctx.ref, std::move(vecs));
    }
    const sara::GenerationRequest request = sara::render_request(question, part.natural, packed, tpl);
    check(request.version == 1, "request version != 1");
    check(sara::request_vector_count(request) == expected_vectors, "vector count drifted");
    check(sara::request_text_tokens(request) > 0, "no text tokens in request");

    const std::string bytes = sara::serialize_request(request);
    const sara::GenerationRequest back = sara::parse_request(bytes);
    check(back.segments.size() == request.segments.size() &&
              back.instruction == request.instruction && back.question == request.question,
          "serialize/parse identity broken");
    bool vectors_exact = true;
    for (std::size_t s = 0; s < back.segments.size() && s < request.segments.size(); ++s) {
        const auto& lhs = request.segments[s];
        const auto& rhs = back.segments[s];
        if (lhs.vectors.size() != rhs.vectors.size()) vectors_exact = false;
        for (std::size_t r = 0; r < lhs.vectors.size() && vectors_exact; ++r) {
            for (std::size_t c = 0; c < lhs.vectors[r].dim(); ++c) {
                if (!float_bits_equal(lhs.vectors[r].values[c], rhs.vectors[r].values[c])) {
                    vectors_exact = false;
                    break;
                }
            }
        }
    }
    check(vectors_exact, "vectors not bit-exact after round trip");

    // The budgeted layout must honor the declared accounting.
    sara::BudgetPolicy fit = fixed;
    fit.mode = sara::BudgetPolicy::Mode::BudgetFit;
    const sara::Partition fit_part = sara::partition_evidence(evidence, fit, question, tpl);
    std::vector<sara::CompressedContext> fit_packed;
    for (const auto& ctx : fit_part.compressed) {
        fit_packed.emplace_back(
            ctx.ref, sara::compress_context(ctx, embed, nullptr, fit.max_vectors_per_context));
    }
    const sara::GenerationRequest fit_request =
        sara::render_request(question, fit_part.natural, fit_packed, tpl);
    const std::size_t fit_cost = sara::request_text_tokens(fit_request) +
                                 fit.vector_token_cost * sara::request_vector_count(fit_request);
    check(fit_cost <= fit.budget_tokens,
          "budget-fit cost " + std::to_string(fit_cost) + " exceeds 512");

    // Sweep k = 0..10: eleven valid requests, natural-text growth monotone.
    std::size_t prev_text = 0;
    int valid = 0;
    for (std::size_t k = 0; k <= 10; ++k) {
        sara::BudgetPolicy sweep_policy = fixed;
        sweep_policy.k = k;
        const sara::Partition sp = sara::partition_evidence(evidence, sweep_policy, question, tpl);
        std::vector<sara::CompressedContext> sp_packed;
        for (const auto& ctx : sp.compressed) {
            sp_packed.emplace_back(ctx.ref,
                                   sara::compress_context(ctx, embed, nullptr,
                                                          sweep_policy.max_vectors_per_context));
        }
        const sara::GenerationRequest sweep_request =
            sara::render_request(question, sp.natural, sp_packed, tpl);
        const std::string sweep_bytes = sara::serialize_request(sweep_request);
        const sara::GenerationRequest sweep_back = sara::parse_request(sweep_bytes);
        if (sweep_back.segments.size() == sweep_request.segments.size() &&
            sweep_back.version == 1) {
            ++valid;
        }
        const std::size_t text_tokens = sara::request_text_tokens(sweep_request);
        if (k > 0 && text_tokens < prev_text) {
            check(false, "text tokens fell from " + std::to_string(prev_text) + " to " +
                             std::to_string(text_tokens) + " at k=" + std::to_string(k));
        }
        prev_text = text_tokens;
    }
    check(valid == 11, "sweep produced " + std::to_string(valid) + "/11 valid requests");

    if (!violations.empty()) {
        std::string detail = std::to_string(violations.size()) + " violation(s): ";
        detail += violations.front();
        return {false, detail};
    }
    return {true, "pipeline + sweep clean: 0 invariant violations, 11/11 sweep requests"};
}

using CriterionFn = Outcome (*)();

struct CriterionSpec {
    const char* name;
    CriterionFn fn;
    double time_limit;  // seconds; 0 means untimed
};

}  // namespace

int main() {
    const CriterionSpec criteria[] = {
        {"selection-oracle-equivalence", criterion_selection_oracle, 5.0},
        {"csi-oracle", criterion_csi_oracle, 0.0},
        {"argmin-scaling-invariance", criterion_scaling_invariance, 0.0},
        {"budget-safety", criterion_budget_safety, 0.0},
        {"bm25-hand-value", criterion_bm25_hand_value, 0.0},
        {"metric-oracles", criterion_metric_oracles, 10.0},
        {"round-trips", criterion_round_trips, 0.0},
        {"paper-config-smoke", criterion_smoke_test, 10.0},
    };

    int failures = 0;
    constexpr std::size_t kCount = sizeof(criteria) / sizeof(criteria[0]);
    for (std::size_t i = 0; i < kCount; ++i) {
        const auto& spec = criteria[i];
        Outcome outcome;
        const auto start = std::chrono::steady_clock::now();
        try {
            outcome = spec.fn();
        } catch (const std::exception& e) {
            outcome = {false, std::string("unexpected exception: ") + e.what()};
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (spec.time_limit > 0.0 && seconds > spec.time_limit) {
            outcome.pass = false;
            outcome.detail += " [exceeded " + std::to_string(spec.time_limit) + "s limit]";
        }
        std::printf("%s  %zu  %-28s  %s  (%.2fs)\n", outcome.pass ? "PASS" : "FAIL", i + 1,
                    spec.name, outcome.detail.c_str(), seconds);
        if (!outcome.pass) ++failures;
    }
    return failures;
}
