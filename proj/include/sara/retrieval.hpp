#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sara/embed.hpp"
#include "sara/textcore.hpp"

namespace sara {

// Okapi BM25 with the nonnegative-IDF variant; the most widely validated
// defaults.
inline constexpr double kBm25K1 = 1.2;
inline constexpr double kBm25B = 0.75;

using ChunkRef = std::uint32_t;

struct Posting {
    ChunkRef chunk = 0;
    std::uint32_t tf = 0;
};

struct ChunkRow {
    std::string id;
    std::string doc_id;
    std::uint32_t seq_no = 0;
    std::uint32_t token_count = 0;
    std::string text;
};

struct RetrievedContext {
    ChunkRef chunk = 0;
    double score = 0.0;
    std::uint32_t rank = 0;  // 1-based
};

// Immutable inverted index over chunks. The retrieval unit is the chunk, so
// doc_count and document frequencies count chunks. Terms are lowercased
// rule-v1 tokens; no stemming or stopword removal. Construction is
// single-writer; a built Index is safely shareable across concurrent queries.
class Index {
public:
    static Index build(const std::vector<Chunk>& chunks, TokenizerProfile profile);

    // Sum over distinct lowercased query terms t of
    //   IDF(t) * tf*(k1+1) / (tf + k1*(1 - b + b*len/avg_chunk_len))
    // with IDF(t) = ln((N - df + 0.5) / (df + 0.5) + 1).
    double bm25_score(std::span<const std::string> query_terms, ChunkRef chunk) const;

    double idf(const std::string& term) const;

    // Top n by BM25, ties by (doc_id, seq_no) ascending. Zero-score chunks
    // fill out the list when n exceeds the number of matching chunks.
    std::vector<RetrievedContext> retrieve_top_n(const std::string& query, std::size_t n) const;

    // Top n by cosine similarity between Enc(query) and Enc(chunk text),
    // same tie policy. Backend failures propagate.
    std::vector<RetrievedContext> retrieve_dense(const std::string& query, std::size_t n,
                                                 const EmbedBackend& backend) const;

    const ChunkRow& chunk(ChunkRef ref) const;  // errors on unknown ref
    std::optional<ChunkRef> find_chunk(std::string_view chunk_id) const;
    std::size_t doc_count() const { return chunks_.size(); }
    double avg_chunk_len() const { return avg_chunk_len_; }
    const TokenizerProfile& tokenizer_profile() const { return profile_; }
    const std::vector<ChunkRow>& chunks() const { return chunks_; }
    std::vector<std::string> chunk_texts() const;

    // Directory layout: manifest.json, postings.bin (length-prefixed term
    // records, little-endian 32-bit counts), chunks.jsonl. format_version 1.
    void persist(const std::filesystem::path& dir) const;
    static Index load(const std::filesystem::path& dir);

private:
    Index() = default;

    TokenizerProfile profile_;
    double avg_chunk_len_ = 0.0;
    std::map<std::string, std::vector<Posting>> postings_;
    std::vector<ChunkRow> chunks_;
};

}  // namespace sara
