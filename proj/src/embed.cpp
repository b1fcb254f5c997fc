#include "sara/embed.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "remote_internal.hpp"
#include "sara/errors.hpp"
#include "sara/textcore.hpp"

namespace sara {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
constexpr unsigned char kSignSalt = 0x5F;

double l2_norm(const std::vector<float>& values) {
    double sum = 0.0;
    for (float v : values) sum += static_cast<double>(v) * static_cast<double>(v);
    return std::sqrt(sum);
}

void require_same_dim(const EmbeddingVector& a, const EmbeddingVector& b, const char* what) {
    if (a.dim() != b.dim()) {
        throw Error(ErrCode::DimMismatch, std::string(what) + ": dims " +
                                              std::to_string(a.dim()) + " vs " +
                                              std::to_string(b.dim()));
    }
}

// --- base64 (RFC 4648, no line breaks) ---

const char kB64Alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string b64_encode(const unsigned char* data, std::size_t len) {
    std::string out;
    out.reserve((len + 2) / 3 * 4);
    for (std::size_t i = 0; i < len; i += 3) {
        std::uint32_t v = static_cast<std::uint32_t>(data[i]) << 16;
        if (i + 1 < len) v |= static_cast<std::uint32_t>(data[i + 1]) << 8;
        if (i + 2 < len) v |= static_cast<std::uint32_t>(data[i + 2]);
        out += kB64Alphabet[(v >> 18) & 0x3F];
        out += kB64Alphabet[(v >> 12) & 0x3F];
        out += i + 1 < len ? kB64Alphabet[(v >> 6) & 0x3F] : '=';
        out += i + 2 < len ? kB64Alphabet[v & 0x3F] : '=';
    }
    return out;
}

std::vector<unsigned char> b64_decode(std::string_view text) {
    auto value_of = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    std::vector<unsigned char> out;
    std::uint32_t buffer = 0;
    int bits = 0;
    for (char c : text) {
        if (c == '=') break;
        const int v = value_of(c);
        if (v < 0) throw Error(ErrCode::CorruptFile, "invalid base64 character");
        buffer = (buffer << 6) | static_cast<std::uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<unsigned char>((buffer >> bits) & 0xFF));
        }
    }
    return out;
}

std::string floats_to_b64(const std::vector<float>& values) {
    // little-endian 32-bit floats
    std::vector<unsigned char> bytes(values.size() * 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, &values[i], 4);
        bytes[i * 4 + 0] = static_cast<unsigned char>(bits & 0xFF);
        bytes[i * 4 + 1] = static_cast<unsigned char>((bits >> 8) & 0xFF);
        bytes[i * 4 + 2] = static_cast<unsigned char>((bits >> 16) & 0xFF);
        bytes[i * 4 + 3] = static_cast<unsigned char>((bits >> 24) & 0xFF);
    }
    return b64_encode(bytes.data(), bytes.size());
}

std::vector<float> b64_to_floats(std::string_view text, std::size_t expected_count,
                                 const char* what) {
    const auto bytes = b64_decode(text);
    if (bytes.size() != expected_count * 4) {
        throw Error(ErrCode::CorruptFile, std::string(what) + ": expected " +
                                              std::to_string(expected_count * 4) +
                                              " bytes, got " + std::to_string(bytes.size()));
    }
    std::vector<float> values(expected_count);
    for (std::size_t i = 0; i < expected_count; ++i) {
        std::uint32_t bits = static_cast<std::uint32_t>(bytes[i * 4 + 0]) |
                             (static_cast<std::uint32_t>(bytes[i * 4 + 1]) << 8) |
                             (static_cast<std::uint32_t>(bytes[i * 4 + 2]) << 16) |
                             (static_cast<std::uint32_t>(bytes[i * 4 + 3]) << 24);
        std::memcpy(&values[i], &bits, 4);
    }
    return values;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = kFnvOffset;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= kFnvPrime;
    }
    return h;
}

EmbeddingVector hash_stub_embed(std::string_view text, std::size_t dim, bool normalize) {
    if (dim == 0) throw Error(ErrCode::BadArgument, "embedding dim must be >= 1");

    EmbeddingVector vec;
    vec.values.assign(dim, 0.0f);

    for (const auto& token : tokenize(text)) {
        const std::size_t slot = static_cast<std::size_t>(fnv1a64(token) % dim);
        std::string salted = token;
        for (char& c : salted) c = static_cast<char>(static_cast<unsigned char>(c) ^ kSignSalt);
        const float sign = (fnv1a64(salted) % 2 == 0) ? 1.0f : -1.0f;
        vec.values[slot] += sign;
    }

    if (!normalize) return vec;
    const double norm = l2_norm(vec.values);
    if (norm == 0.0) return vec;  // all-zero stays unnormalized
    for (float& v : vec.values) v = static_cast<float>(static_cast<double>(v) / norm);
    vec.normalized = true;
    return vec;
}

EmbedBackend::EmbedBackend(EmbedBackendConfig config) : config_(std::move(config)) {
    if (config_.dim == 0) throw Error(ErrCode::BadConfig, "embedding dim must be >= 1");
    if (config_.kind == EmbedBackendConfig::Kind::Remote && config_.endpoint.empty()) {
        throw Error(ErrCode::BadConfig, "remote embedding backend requires an endpoint");
    }
}

EmbeddingVector EmbedBackend::embed(const std::string& text) const {
    if (config_.kind == EmbedBackendConfig::Kind::HashStub) {
        return hash_stub_embed(text, config_.dim, config_.normalize_output);
    }
    return embed_batch({text}).front();
}

std::vector<EmbeddingVector> EmbedBackend::embed_batch(
    const std::vector<std::string>& texts) const {
    if (config_.kind == EmbedBackendConfig::Kind::HashStub) {
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (const auto& text : texts) {
            out.push_back(hash_stub_embed(text, config_.dim, config_.normalize_output));
        }
        return out;
    }
    return detail::remote_embed_batch(config_, texts);
}

EmbedFn EmbedBackend::fn() const {
    EmbedBackend copy = *this;
    return [copy](const std::string& text) { return copy.embed(text); };
}

EmbeddingVector aggregate_mean(std::span<const EmbeddingVector> vectors) {
    if (vectors.empty()) {
        throw Error(ErrCode::BadArgument, "aggregate_mean over an empty list");
    }
    const std::size_t dim = vectors.front().dim();
    for (const auto& v : vectors) {
        if (v.dim() != dim) {
            throw Error(ErrCode::DimMismatch, "aggregate_mean over mixed dims");
        }
    }
    EmbeddingVector out;
    out.values.resize(dim);
    const double count = static_cast<double>(vectors.size());
    for (std::size_t i = 0; i < dim; ++i) {
        double sum = 0.0;
        for (const auto& v : vectors) sum += static_cast<double>(v.values[i]);
        out.values[i] = static_cast<float>(sum / count);
    }
    return out;
}

EmbeddingVector expand_query(const EmbeddingVector& query_vec, const EmbeddingVector& top1_vec) {
    require_same_dim(query_vec, top1_vec, "expand_query");
    const EmbeddingVector pair[] = {query_vec, top1_vec};
    return aggregate_mean(pair);
}

EmbeddingVector normalize_vector(const EmbeddingVector& vec) {
    const double norm = l2_norm(vec.values);
    if (norm == 0.0) {
        throw Error(ErrCode::ZeroVector, "cannot normalize zero vector");
    }
    EmbeddingVector out;
    out.values.resize(vec.dim());
    for (std::size_t i = 0; i < vec.dim(); ++i) {
        out.values[i] = static_cast<float>(static_cast<double>(vec.values[i]) / norm);
    }
    out.normalized = true;
    return out;
}

EmbeddingVector apply_projection(const EmbeddingVector& vec, const ProjectionMap& map) {
    if (vec.dim() != map.in_dim) {
        throw Error(ErrCode::DimMismatch, "apply_projection: input dim " +
                                              std::to_string(vec.dim()) + " != in_dim " +
                                              std::to_string(map.in_dim));
    }
    EmbeddingVector out;
    out.values.resize(map.out_dim);
    for (std::size_t i = 0; i < map.out_dim; ++i) {
        double acc = static_cast<double>(map.bias[i]);
        const float* row = map.weights.data() + i * map.in_dim;
        for (std::size_t j = 0; j < map.in_dim; ++j) {
            acc += static_cast<double>(row[j]) * static_cast<double>(vec.values[j]);
        }
        const float value = static_cast<float>(acc);
        if (!std::isfinite(value)) {
            throw Error(ErrCode::ProjectionOverflow, "projection overflow");
        }
        out.values[i] = value;
    }
    return out;
}

ProjectionMap load_projection_map(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrCode::MissingFile, "cannot open projection map: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrCode::CorruptFile, "projection map: " + std::string(e.what()));
    }
    if (!doc.is_object() || !doc.contains("in_dim") || !doc.contains("out_dim") ||
        !doc.contains("weights") || !doc.contains("bias")) {
        throw Error(ErrCode::CorruptFile, "projection map: missing fields");
    }
    ProjectionMap map;
    map.in_dim = doc["in_dim"].get<std::size_t>();
    map.out_dim = doc["out_dim"].get<std::size_t>();
    if (map.in_dim == 0 || map.out_dim == 0) {
        throw Error(ErrCode::CorruptFile, "projection map: zero dims");
    }
    map.weights = b64_to_floats(doc["weights"].get<std::string>(), map.out_dim * map.in_dim,
                                "projection weights");
    map.bias = b64_to_floats(doc["bias"].get<std::string>(), map.out_dim, "projection bias");
    if (doc.contains("source") && doc["source"].is_string()) {
        map.source = doc["source"].get<std::string>();
    }
    for (float w : map.weights) {
        if (!std::isfinite(w)) throw Error(ErrCode::CorruptFile, "projection map: non-finite weight");
    }
    for (float b : map.bias) {
        if (!std::isfinite(b)) throw Error(ErrCode::CorruptFile, "projection map: non-finite bias");
    }
    return map;
}

void save_projection_map(const ProjectionMap& map, const std::filesystem::path& path) {
    if (map.weights.size() != map.in_dim * map.out_dim || map.bias.size() != map.out_dim) {
        throw Error(ErrCode::BadArgument, "projection map: inconsistent dims");
    }
    nlohmann::json doc;
    doc["in_dim"] = map.in_dim;
    doc["out_dim"] = map.out_dim;
    doc["weights"] = floats_to_b64(map.weights);
    doc["bias"] = floats_to_b64(map.bias);
    doc["source"] = map.source;
    std::ofstream out(path);
    if (!out) throw Error(ErrCode::Io, "cannot write projection map: " + path.string());
    out << doc.dump(2) << "\n";
}

}  // namespace sara
