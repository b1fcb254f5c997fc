#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sara/embed.hpp"
#include "sara/proxylm.hpp"

namespace sara {

enum class Strategy { Emb, Csi };

std::string strategy_name(Strategy s);
Strategy strategy_from_name(std::string_view name);

struct SelectionConfig {
    std::size_t n = 10;      // candidates to retrieve
    std::size_t k_sel = 5;   // total contexts to select
    Strategy strategy = Strategy::Emb;
    // Opt-in extension: candidates scoring below this CSI are excluded
    // before the argmax. Absent by default so the selection loop runs
    // unmodified.
    std::optional<double> min_csi_filter;
    // Prepends the query to the CSI conditioning prefix when set.
    bool condition_on_query = false;
};

// A retrieved context entering selection. Candidate lists are always in
// retrieval-rank order; ties resolve to the lowest rank.
struct Candidate {
    std::string chunk_ref;
    std::uint32_t rank = 0;  // 1-based retrieval rank
    std::string text;
};

struct SelectedEvidence {
    std::string chunk_ref;
    std::uint32_t step = 0;  // 1-based selection step
    double score = 0.0;      // step 1 carries the retrieval score
    std::uint32_t retrieval_rank = 0;
};

struct EvidenceSet {
    std::vector<SelectedEvidence> selected;
    Strategy strategy = Strategy::Emb;
    std::optional<EmbeddingVector> query_vec;  // EMB only
};

struct StepResult {
    std::size_t candidate_index = 0;  // into the candidates span
    double score = 0.0;
};

// One EMB round: the candidate minimizing
//   || v_q - mean(selected_vecs U {candidate_vec}) ||_2
// candidate_vecs align with candidate order; the earliest index wins ties.
StepResult emb_step(const EmbeddingVector& v_q, std::span<const EmbeddingVector> selected_vecs,
                    std::span<const EmbeddingVector> candidate_vecs);

// One CSI round: the candidate maximizing csi(candidate | selected_texts).
// With min_filter set, candidates scoring below it are dropped first; errors
// if none survive.
StepResult csi_step(const CsiFn& csi, const std::vector<std::string>& selected_texts,
                    std::span<const Candidate> candidates, std::optional<double> min_filter);

struct TraceEntry {
    std::uint32_t step = 0;
    std::string chunk_ref;
    double score = 0.0;
};

// The full selection loop: seed with the rank-1 context, expand the query
// representation from it (EMB), then greedily add k_sel - 1 contexts via
// emb_step or csi_step over the remaining candidates. `retrieved` must be
// non-empty and rank-ordered with the retrieval scores attached as
// `retrieval_scores` aligned to it. Backend failures propagate tagged with
// the failing step.
EvidenceSet select_evidence(const std::string& query, const std::vector<Candidate>& retrieved,
                            std::span<const double> retrieval_scores,
                            const SelectionConfig& config, const EmbedFn& embed,
                            const CsiFn& csi, std::vector<TraceEntry>* trace = nullptr);

}  // namespace sara
