#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sara {

struct EmbeddingVector {
    std::vector<float> values;
    bool normalized = false;

    std::size_t dim() const { return values.size(); }
};

using EmbedFn = std::function<EmbeddingVector(const std::string&)>;

struct EmbedBackendConfig {
    enum class Kind { HashStub, Remote };

    Kind kind = Kind::HashStub;
    std::size_t dim = 64;
    std::string endpoint;  // required for Remote
    bool normalize_output = true;
};

// Deterministic stand-in encoder: tokenize with rule-v1, then for each token
//   slot = FNV-1a-64(token) mod dim
//   sign = +1 if FNV-1a-64(token bytes, each XOR 0x5F) is even, else -1
// accumulate signs into slots in token order, L2-normalize unless the result
// is all-zero. Bit-identical across platforms. Empty text gives the zero
// vector with normalized=false.
EmbeddingVector hash_stub_embed(std::string_view text, std::size_t dim, bool normalize = true);

std::uint64_t fnv1a64(std::string_view bytes);

// Enc(.) — dispatches on the configured backend kind. Remote calls POST
// {endpoint}/v1/embed; see remote protocol notes in the README.
class EmbedBackend {
public:
    explicit EmbedBackend(EmbedBackendConfig config);

    EmbeddingVector embed(const std::string& text) const;
    // One request for the whole batch on the remote backend; results align
    // with the input order.
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) const;

    const EmbedBackendConfig& config() const { return config_; }
    EmbedFn fn() const;

private:
    EmbedBackendConfig config_;
};

// Component-wise arithmetic mean. Errors on an empty list or mixed dims.
EmbeddingVector aggregate_mean(std::span<const EmbeddingVector> vectors);

// v_q: component-wise average of the query embedding and the top-1 retrieval
// embedding.
EmbeddingVector expand_query(const EmbeddingVector& query_vec, const EmbeddingVector& top1_vec);

// Unit Euclidean norm; errors on the zero vector.
EmbeddingVector normalize_vector(const EmbeddingVector& vec);

// Externally trained projection from encoder space to the downstream model's
// slot space. Weights are row-major out_dim x in_dim.
struct ProjectionMap {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    std::vector<float> weights;
    std::vector<float> bias;
    std::string source;
};

// out = weights * vec + bias. Errors on dim mismatch and on non-finite
// results ("projection overflow").
EmbeddingVector apply_projection(const EmbeddingVector& vec, const ProjectionMap& map);

// File format: JSON with base64-encoded little-endian 32-bit-float payloads
// {"in_dim", "out_dim", "weights", "bias", "source"}.
ProjectionMap load_projection_map(const std::filesystem::path& path);
void save_projection_map(const ProjectionMap& map, const std::filesystem::path& path);

}  // namespace sara
