#include "sara/select.hpp"

#include <algorithm>
#include <cmath>

#include "sara/errors.hpp"

namespace sara {

namespace {

void check_dim(const EmbeddingVector& v, std::size_t dim, const char* what) {
    if (v.dim() != dim) {
        throw Error(ErrCode::DimMismatch, std::string(what) + ": expected dim " +
                                              std::to_string(dim) + ", got " +
                                              std::to_string(v.dim()));
    }
}

// Rethrows backend and scoring errors tagged with the selection step that
// raised them.
template <typename Fn>
auto at_step(std::uint32_t step, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(e.code(), "selection step " + std::to_string(step) + ": " + e.what());
    }
}

}  // namespace

std::string strategy_name(Strategy s) {
    return s == Strategy::Emb ? "emb" : "csi";
}

Strategy strategy_from_name(std::string_view name) {
    if (name == "emb") return Strategy::Emb;
    if (name == "csi") return Strategy::Csi;
    throw Error(ErrCode::BadArgument, "unknown strategy: " + std::string(name));
}

StepResult emb_step(const EmbeddingVector& v_q, std::span<const EmbeddingVector> selected_vecs,
                    std::span<const EmbeddingVector> candidate_vecs) {
    if (selected_vecs.empty()) {
        throw Error(ErrCode::BadArgument, "emb_step requires a nonempty selected set");
    }
    if (candidate_vecs.empty()) {
        throw Error(ErrCode::BadArgument, "emb_step requires at least one candidate");
    }
    const std::size_t dim = v_q.dim();
    for (const auto& v : selected_vecs) check_dim(v, dim, "selected vector");
    for (const auto& v : candidate_vecs) check_dim(v, dim, "candidate vector");

    std::vector<double> selected_sum(dim, 0.0);
    for (const auto& v : selected_vecs) {
        for (std::size_t i = 0; i < dim; ++i) {
            selected_sum[i] += static_cast<double>(v.values[i]);
        }
    }
    const double denom = static_cast<double>(selected_vecs.size() + 1);

    std::size_t best = 0;
    double best_sq = 0.0;
    for (std::size_t c = 0; c < candidate_vecs.size(); ++c) {
        double sq = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            const double mean =
                (selected_sum[i] + static_cast<double>(candidate_vecs[c].values[i])) / denom;
            const double diff = static_cast<double>(v_q.values[i]) - mean;
            sq += diff * diff;
        }
        if (c == 0 || sq < best_sq) {
            best = c;
            best_sq = sq;
        }
    }
    return {best, std::sqrt(best_sq)};
}

StepResult csi_step(const CsiFn& csi, const std::vector<std::string>& selected_texts,
                    std::span<const Candidate> candidates, std::optional<double> min_filter) {
    if (candidates.empty()) {
        throw Error(ErrCode::BadArgument, "csi_step requires at least one candidate");
    }

    bool found = false;
    std::size_t best = 0;
    double best_score = 0.0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const CsiScore score = csi(candidates[c].text, selected_texts);
        if (min_filter && score.value < *min_filter) continue;
        if (!found || score.value > best_score) {
            found = true;
            best = c;
            best_score = score.value;
        }
    }
    if (!found) {
        throw Error(ErrCode::CsiFilterExhausted, "no candidate passes CSI filter");
    }
    return {best, best_score};
}

EvidenceSet select_evidence(const std::string& query, const std::vector<Candidate>& retrieved,
                            std::span<const double> retrieval_scores,
                            const SelectionConfig& config, const EmbedFn& embed, const CsiFn& csi,
                            std::vector<TraceEntry>* trace) {
    if (retrieved.empty()) {
        throw Error(ErrCode::EmptySelection, "no retrieved contexts to select from");
    }
    if (retrieval_scores.size() != retrieved.size()) {
        throw Error(ErrCode::BadArgument, "retrieval scores misaligned with candidates");
    }
    if (config.k_sel < 1 || config.k_sel > config.n) {
        throw Error(ErrCode::BadConfig, "selection requires 1 <= k_sel <= n");
    }
    if (config.min_csi_filter && config.strategy != Strategy::Csi) {
        throw Error(ErrCode::BadConfig, "min_csi_filter applies only to the csi strategy");
    }

    EvidenceSet result;
    result.strategy = config.strategy;

    const std::size_t total = std::min(config.k_sel, retrieved.size());

    result.selected.push_back(
        {retrieved[0].chunk_ref, 1, retrieval_scores[0], retrieved[0].rank});
    if (trace) trace->push_back({1, retrieved[0].chunk_ref, retrieval_scores[0]});

    std::vector<EmbeddingVector> selected_vecs;
    if (config.strategy == Strategy::Emb) {
        at_step(1, [&] {
            const EmbeddingVector q_vec = embed(query);
            const EmbeddingVector top1_vec = embed(retrieved[0].text);
            result.query_vec = expand_query(q_vec, top1_vec);
            selected_vecs.push_back(top1_vec);
            return 0;
        });
    }

    std::vector<std::string> selected_texts{retrieved[0].text};
    std::vector<std::size_t> remaining;
    for (std::size_t i = 1; i < retrieved.size(); ++i) remaining.push_back(i);

    std::vector<std::optional<EmbeddingVector>> candidate_vecs(retrieved.size());

    for (std::uint32_t step = 2; step <= total; ++step) {
        std::size_t picked_slot = 0;
        double picked_score = 0.0;

        if (config.strategy == Strategy::Emb) {
            std::vector<EmbeddingVector> vecs;
            vecs.reserve(remaining.size());
            at_step(step, [&] {
                for (std::size_t idx : remaining) {
                    if (!candidate_vecs[idx]) candidate_vecs[idx] = embed(retrieved[idx].text);
                    vecs.push_back(*candidate_vecs[idx]);
                }
                return 0;
            });
            const StepResult r = at_step(
                step, [&] { return emb_step(*result.query_vec, selected_vecs, vecs); });
            picked_slot = r.candidate_index;
            picked_score = r.score;
            selected_vecs.push_back(vecs[r.candidate_index]);
        } else {
            std::vector<Candidate> pool;
            pool.reserve(remaining.size());
            for (std::size_t idx : remaining) pool.push_back(retrieved[idx]);

            std::vector<std::string> condition = selected_texts;
            if (config.condition_on_query) condition.insert(condition.begin(), query);

            const StepResult r = at_step(
                step, [&] { return csi_step(csi, condition, pool, config.min_csi_filter); });
            picked_slot = r.candidate_index;
            picked_score = r.score;
        }

        const std::size_t idx = remaining[picked_slot];
        result.selected.push_back(
            {retrieved[idx].chunk_ref, step, picked_score, retrieved[idx].rank});
        selected_texts.push_back(retrieved[idx].text);
        if (trace) trace->push_back({step, retrieved[idx].chunk_ref, picked_score});
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(picked_slot));
    }

    return result;
}

}  // namespace sara
