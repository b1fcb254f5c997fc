#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sara {

// Identifies a tokenization rule set. Identical (id, version) pairs must
// produce bit-identical token output for identical input text. The built-in
// rule set is "rule-v1"; budgets and index statistics are expressed in its
// tokens. A model-exact tokenizer can be substituted behind this profile.
struct TokenizerProfile {
    std::string id = "rule-v1";
    int version = 1;

    bool operator==(const TokenizerProfile&) const = default;
};

TokenizerProfile rule_v1_profile();

struct Sentence {
    std::string text;
    std::size_t token_count = 0;
};

struct Chunk {
    std::string id;      // stable: "<doc_id>#<seq_no>"
    std::string doc_id;
    std::uint32_t seq_no = 0;
    std::string text;    // sentences joined with a single space
    std::size_t token_count = 0;
    std::vector<Sentence> sentences;
};

struct Document {
    std::string id;
    std::optional<std::string> title;
    std::string text;
    std::vector<Chunk> chunks;
};

// rule-v1 tokenization: maximal runs of ASCII letters/digits/underscore
// (bytes >= 0x80 count as word bytes so UTF-8 sequences stay intact), or
// single non-whitespace punctuation marks. Whitespace never appears in the
// output. Pure and locale-independent.
std::vector<std::string> tokenize(std::string_view text);

// Equals tokenize(text).size() without materializing the tokens.
std::size_t count_tokens(std::string_view text);

// Byte offsets [begin, end) of each token in the input, in order.
std::vector<std::pair<std::size_t, std::size_t>> token_spans(std::string_view text);

// Sentence boundaries sit at '.', '!' or '?' followed by whitespace and an
// uppercase letter, or at end of text, except after entries in the fixed
// abbreviation table (Dr., Mr., Mrs., Ms., Prof., etc., e.g., i.e., vs.,
// Fig., Eq., No., St.). Concatenating the returned sentences reproduces the
// input modulo boundary whitespace.
std::vector<Sentence> split_sentences(std::string_view text);

// Greedy sentence packing: sentences are appended while the chunk stays
// within chunk_size tokens; a sentence that would overflow starts a new
// chunk. A single sentence longer than chunk_size is hard-split at token
// boundaries into pieces of at most chunk_size tokens, each recorded as one
// Sentence. Empty text yields an empty list.
std::vector<Chunk> chunk_document(std::string_view doc_text, std::size_t chunk_size,
                                  std::string_view doc_id = "");

Document make_document(std::string id, std::optional<std::string> title, std::string text,
                       std::size_t chunk_size);

// Corpus ingestion: JSONL, one {"id", "title"?, "text"} object per line.
std::vector<Document> load_corpus_jsonl(const std::filesystem::path& path,
                                        std::size_t chunk_size);

}  // namespace sara
