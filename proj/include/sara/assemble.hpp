#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sara/embed.hpp"
#include "sara/textcore.hpp"

namespace sara {

struct BudgetPolicy {
    enum class Mode { FixedK, BudgetFit };

    std::size_t budget_tokens = 512;
    // Each compression vector occupies a single slot position downstream, so
    // it is charged one token-equivalent by default. Adjustable for
    // tokenizer mismatches.
    std::size_t vector_token_cost = 1;
    Mode mode = Mode::FixedK;
    std::size_t k = 5;  // FixedK only
    // Degenerate-input cap: sentences beyond this merge into the final
    // vector's source text.
    std::size_t max_vectors_per_context = 8;
};

// The versioned prompt layout. Only "sara-inference-v1" ships; its rendered
// text is fixed so requests are reproducible.
struct PromptTemplate {
    std::string id = "sara-inference-v1";
    std::string instruction_prefix =
        "Using the context and additional context, answer the following question:";
};

PromptTemplate inference_template();

// A selected context as assembly sees it: the stored chunk text with its
// sentence structure re-derived from that text, so the in-memory and
// load-from-index paths agree.
struct EvidenceContext {
    std::string ref;
    std::string text;
    std::vector<Sentence> sentences;

    static EvidenceContext from_text(std::string ref, std::string text);
    static EvidenceContext from_chunk(const Chunk& chunk);

    std::size_t vector_count(std::size_t max_vectors) const;
};

struct Partition {
    std::vector<EvidenceContext> natural;     // selection order
    std::vector<EvidenceContext> compressed;  // selection order
    std::size_t k = 0;
};

// FixedK: the first k contexts are natural, the rest compressed. BudgetFit:
// the largest k whose fully rendered text tokens plus
// vector_token_cost * (vector count of the compressed remainder) fit
// budget_tokens. Token accounting covers every TEXT piece the render emits
// (instruction, headers, numbering, question block), so emitted requests
// never exceed the budget. Errors with the shortfall when even k = 0 does
// not fit.
Partition partition_evidence(const std::vector<EvidenceContext>& evidence,
                             const BudgetPolicy& policy, const std::string& question,
                             const PromptTemplate& tpl);

// One vector per sentence of the context, in sentence order, each passed
// through the projection when supplied. Backend failures propagate with the
// sentence index.
std::vector<EmbeddingVector> compress_context(const EvidenceContext& context,
                                              const EmbedFn& embed,
                                              const ProjectionMap* projection,
                                              std::size_t max_vectors = 8);

struct Segment {
    enum class Type { Text, Vectors };

    Type type = Type::Text;
    std::string content;                   // Text
    std::string origin;                    // Vectors: source chunk ref
    std::vector<EmbeddingVector> vectors;  // Vectors
};

struct GenerationRequest {
    int version = 1;
    std::string instruction;
    std::string question;
    std::vector<Segment> segments;
};

using CompressedContext = std::pair<std::string, std::vector<EmbeddingVector>>;

// Lays out the inference template: instruction, numbered natural passages
// under "Context:", one VECTORS segment per compressed context under
// "Additional Context:", then the question block. Empty blocks are omitted.
GenerationRequest render_request(const std::string& question,
                                 const std::vector<EvidenceContext>& natural,
                                 const std::vector<CompressedContext>& compressed,
                                 const PromptTemplate& tpl);

// Declared token accounting over a rendered request.
std::size_t request_text_tokens(const GenerationRequest& request);
std::size_t request_vector_count(const GenerationRequest& request);

// Canonical JSON wire format, version 1. Floats round-trip bit-exactly at
// 32-bit precision. parse(serialize(x)) == x field for field.
std::string serialize_request(const GenerationRequest& request);
GenerationRequest parse_request(const std::string& bytes);

// POST {endpoint}/v1/generate with the request body plus a temperature-0
// hint; returns the server's answer string. No retry.
std::string dispatch_request(const std::string& endpoint, const GenerationRequest& request);

}  // namespace sara
