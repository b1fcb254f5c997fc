#include "sara/assemble.hpp"

#include <algorithm>
#include <span>

#include <json.hpp>

#include "sara/errors.hpp"

namespace sara {

namespace {

// One element of the rendered prompt: either literal text or the slot where
// a compressed context's vectors go. Both the token accounting and the
// emitted request are derived from this single layout so budget math can
// never drift from what is actually rendered.
struct LayoutPiece {
    bool is_vectors = false;
    std::string text;
    std::size_t compressed_index = 0;
};

std::vector<LayoutPiece> layout_pieces(const std::string& question,
                                       std::span<const std::string> natural_texts,
                                       std::size_t compressed_count, const PromptTemplate& tpl) {
    std::vector<LayoutPiece> pieces;
    std::string buf = tpl.instruction_prefix + " " + question + "\n";
    if (!natural_texts.empty()) {
        buf += "Context:\n";
        for (std::size_t i = 0; i < natural_texts.size(); ++i) {
            buf += std::to_string(i + 1) + ". " + natural_texts[i] + "\n";
        }
    }
    if (compressed_count > 0) {
        buf += "Additional Context:\n";
        for (std::size_t j = 0; j < compressed_count; ++j) {
            buf += std::to_string(j + 1) + ". ";
            pieces.push_back({false, std::move(buf), 0});
            buf.clear();
            pieces.push_back({true, "", j});
            buf = ";\n";
        }
    }
    buf += "Question: " + question + "\nYour Answer:";
    pieces.push_back({false, std::move(buf), 0});
    return pieces;
}

void check_policy(const BudgetPolicy& policy) {
    if (policy.budget_tokens == 0) {
        throw Error(ErrCode::BadConfig, "budget_tokens must be >= 1");
    }
    if (policy.vector_token_cost == 0) {
        throw Error(ErrCode::BadConfig, "vector_token_cost must be >= 1");
    }
    if (policy.budget_tokens < policy.vector_token_cost) {
        throw Error(ErrCode::BadConfig, "budget_tokens must cover at least one vector");
    }
    if (policy.max_vectors_per_context == 0) {
        throw Error(ErrCode::BadConfig, "max_vectors_per_context must be >= 1");
    }
}

}  // namespace

PromptTemplate inference_template() { return PromptTemplate{}; }

EvidenceContext EvidenceContext::from_text(std::string ref, std::string text) {
    EvidenceContext ctx;
    ctx.ref = std::move(ref);
    ctx.text = std::move(text);
    ctx.sentences = split_sentences(ctx.text);
    return ctx;
}

EvidenceContext EvidenceContext::from_chunk(const Chunk& chunk) {
    return from_text(chunk.id, chunk.text);
}

std::size_t EvidenceContext::vector_count(std::size_t max_vectors) const {
    return std::min(sentences.size(), max_vectors);
}

Partition partition_evidence(const std::vector<EvidenceContext>& evidence,
                             const BudgetPolicy& policy, const std::string& question,
                             const PromptTemplate& tpl) {
    check_policy(policy);
    if (evidence.empty()) {
        throw Error(ErrCode::BadArgument, "no evidence to partition");
    }

    auto cost_of = [&](std::size_t k) {
        std::vector<std::string> natural_texts;
        natural_texts.reserve(k);
        for (std::size_t i = 0; i < k; ++i) natural_texts.push_back(evidence[i].text);

        std::size_t tokens = 0;
        for (const auto& piece : layout_pieces(question, natural_texts, evidence.size() - k, tpl)) {
            if (!piece.is_vectors) tokens += count_tokens(piece.text);
        }
        std::size_t vectors = 0;
        for (std::size_t i = k; i < evidence.size(); ++i) {
            vectors += evidence[i].vector_count(policy.max_vectors_per_context);
        }
        return tokens + policy.vector_token_cost * vectors;
    };

    std::size_t k = 0;
    if (policy.mode == BudgetPolicy::Mode::FixedK) {
        if (policy.k > evidence.size()) {
            throw Error(ErrCode::BadArgument,
                        "fixed k " + std::to_string(policy.k) + " exceeds selection size " +
                            std::to_string(evidence.size()));
        }
        k = policy.k;
    } else {
        bool fits = false;
        for (std::size_t candidate = evidence.size() + 1; candidate-- > 0;) {
            if (cost_of(candidate) <= policy.budget_tokens) {
                k = candidate;
                fits = true;
                break;
            }
        }
        if (!fits) {
            const std::size_t floor_cost = cost_of(0);
            throw Error(ErrCode::BudgetInfeasible,
                        "budget infeasible: minimum assembly needs " +
                            std::to_string(floor_cost) + " tokens, budget is " +
                            std::to_string(policy.budget_tokens) + " (shortfall " +
                            std::to_string(floor_cost - policy.budget_tokens) + ")");
        }
    }

    Partition partition;
    partition.k = k;
    partition.natural.assign(evidence.begin(), evidence.begin() + static_cast<std::ptrdiff_t>(k));
    partition.compressed.assign(evidence.begin() + static_cast<std::ptrdiff_t>(k),
                                evidence.end());
    return partition;
}

std::vector<EmbeddingVector> compress_context(const EvidenceContext& context,
                                              const EmbedFn& embed,
                                              const ProjectionMap* projection,
                                              std::size_t max_vectors) {
    if (max_vectors == 0) {
        throw Error(ErrCode::BadConfig, "max_vectors must be >= 1");
    }
    if (context.sentences.empty()) {
        throw Error(ErrCode::BadArgument, "context " + context.ref + " has no sentences");
    }

    std::vector<std::string> sources;
    if (context.sentences.size() <= max_vectors) {
        for (const auto& sentence : context.sentences) sources.push_back(sentence.text);
    } else {
        for (std::size_t i = 0; i + 1 < max_vectors; ++i) {
            sources.push_back(context.sentences[i].text);
        }
        std::string merged;
        for (std::size_t i = max_vectors - 1; i < context.sentences.size(); ++i) {
            if (!merged.empty()) merged += ' ';
            merged += context.sentences[i].text;
        }
        sources.push_back(std::move(merged));
    }

    std::vector<EmbeddingVector> vectors;
    vectors.reserve(sources.size());
    for (std::size_t i = 0; i < sources.size(); ++i) {
        try {
            EmbeddingVector vec = embed(sources[i]);
            if (projection) vec = apply_projection(vec, *projection);
            vectors.push_back(std::move(vec));
        } catch (const Error& e) {
            throw Error(e.code(), "context " + context.ref + " sentence " + std::to_string(i + 1) +
                                      ": " + e.what());
        }
    }
    return vectors;
}

GenerationRequest render_request(const std::string& question,
                                 const std::vector<EvidenceContext>& natural,
                                 const std::vector<CompressedContext>& compressed,
                                 const PromptTemplate& tpl) {
    std::size_t dim = 0;
    for (const auto& [origin, vectors] : compressed) {
        if (vectors.empty()) {
            throw Error(ErrCode::BadArgument,
                        "compressed context " + origin + " carries no vectors");
        }
        for (const auto& vec : vectors) {
            if (dim == 0) dim = vec.dim();
            if (vec.dim() != dim) {
                throw Error(ErrCode::DimMismatch,
                            "compressed context " + origin + " mixes vector dims");
            }
        }
    }

    std::vector<std::string> natural_texts;
    natural_texts.reserve(natural.size());
    for (const auto& ctx : natural) natural_texts.push_back(ctx.text);

    GenerationRequest request;
    request.instruction = tpl.instruction_prefix;
    request.question = question;
    for (auto& piece : layout_pieces(question, natural_texts, compressed.size(), tpl)) {
        Segment seg;
        if (piece.is_vectors) {
            seg.type = Segment::Type::Vectors;
            seg.origin = compressed[piece.compressed_index].first;
            seg.vectors = compressed[piece.compressed_index].second;
        } else {
            seg.type = Segment::Type::Text;
            seg.content = std::move(piece.text);
        }
        request.segments.push_back(std::move(seg));
    }
    return request;
}

std::size_t request_text_tokens(const GenerationRequest& request) {
    std::size_t tokens = 0;
    for (const auto& seg : request.segments) {
        if (seg.type == Segment::Type::Text) tokens += count_tokens(seg.content);
    }
    return tokens;
}

std::size_t request_vector_count(const GenerationRequest& request) {
    std::size_t count = 0;
    for (const auto& seg : request.segments) {
        if (seg.type == Segment::Type::Vectors) count += seg.vectors.size();
    }
    return count;
}

std::string serialize_request(const GenerationRequest& request) {
    if (request.version != 1) {
        throw Error(ErrCode::UnknownVersion,
                    "unknown request version " + std::to_string(request.version));
    }
    nlohmann::json doc;
    doc["version"] = request.version;
    doc["instruction"] = request.instruction;
    doc["question"] = request.question;
    doc["segments"] = nlohmann::json::array();
    for (const auto& seg : request.segments) {
        nlohmann::json s;
        if (seg.type == Segment::Type::Text) {
            s["type"] = "text";
            s["content"] = seg.content;
        } else {
            if (seg.vectors.empty()) {
                throw Error(ErrCode::MalformedSegment,
                            "vectors segment " + seg.origin + " carries no vectors");
            }
            s["type"] = "vectors";
            s["origin"] = seg.origin;
            auto rows = nlohmann::json::array();
            for (const auto& vec : seg.vectors) {
                auto row = nlohmann::json::array();
                for (float v : vec.values) row.push_back(static_cast<double>(v));
                rows.push_back(std::move(row));
            }
            s["vectors"] = std::move(rows);
        }
        doc["segments"].push_back(std::move(s));
    }
    return doc.dump();
}

GenerationRequest parse_request(const std::string& bytes) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrCode::MalformedSegment, "request is not valid JSON: " + std::string(e.what()));
    }
    if (!doc.is_object() || !doc.contains("version") || !doc.contains("instruction") ||
        !doc.contains("question") || !doc.contains("segments") || !doc["segments"].is_array()) {
        throw Error(ErrCode::MalformedSegment, "request is missing required fields");
    }
    if (!doc["version"].is_number_integer() || doc["version"].get<int>() != 1) {
        throw Error(ErrCode::UnknownVersion, "unknown request version " + doc["version"].dump());
    }

    GenerationRequest request;
    request.version = 1;
    try {
        request.instruction = doc["instruction"].get<std::string>();
        request.question = doc["question"].get<std::string>();
    } catch (const nlohmann::json::exception&) {
        throw Error(ErrCode::MalformedSegment, "instruction and question must be strings");
    }

    std::size_t dim = 0;
    for (const auto& s : doc["segments"]) {
        if (!s.is_object() || !s.contains("type") || !s["type"].is_string()) {
            throw Error(ErrCode::MalformedSegment, "segment without a type");
        }
        const std::string type = s["type"].get<std::string>();
        Segment seg;
        if (type == "text") {
            if (!s.contains("content") || !s["content"].is_string()) {
                throw Error(ErrCode::MalformedSegment, "text segment without string content");
            }
            seg.type = Segment::Type::Text;
            seg.content = s["content"].get<std::string>();
        } else if (type == "vectors") {
            if (!s.contains("origin") || !s["origin"].is_string() || !s.contains("vectors") ||
                !s["vectors"].is_array() || s["vectors"].empty()) {
                throw Error(ErrCode::MalformedSegment,
                            "vectors segment requires an origin and a nonempty vector list");
            }
            seg.type = Segment::Type::Vectors;
            seg.origin = s["origin"].get<std::string>();
            for (const auto& row : s["vectors"]) {
                if (!row.is_array() || row.empty()) {
                    throw Error(ErrCode::MalformedSegment, "vector row must be a nonempty array");
                }
                EmbeddingVector vec;
                vec.values.reserve(row.size());
                for (const auto& v : row) {
                    if (!v.is_number()) {
                        throw Error(ErrCode::MalformedSegment, "vector entry is not a number");
                    }
                    vec.values.push_back(static_cast<float>(v.get<double>()));
                }
                if (dim == 0) dim = vec.dim();
                if (vec.dim() != dim) {
                    throw Error(ErrCode::RaggedVectors, "vector rows disagree on dimension");
                }
                seg.vectors.push_back(std::move(vec));
            }
        } else {
            throw Error(ErrCode::MalformedSegment, "unknown segment type: " + type);
        }
        request.segments.push_back(std::move(seg));
    }
    return request;
}

}  // namespace sara
