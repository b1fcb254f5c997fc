#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "remote_internal.hpp"
#include "sara/assemble.hpp"
#include "sara/embed.hpp"
#include "sara/errors.hpp"
#include "sara/proxylm.hpp"

namespace sara {

namespace {

nlohmann::json post_json(const std::string& endpoint, const std::string& path,
                         const nlohmann::json& body, const char* service) {
    httplib::Client client(endpoint);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(120, 0);

    const auto res = client.Post(path, body.dump(), "application/json");
    if (!res) {
        throw Error(ErrCode::Transport, std::string(service) + " service unreachable at " +
                                            endpoint + ": " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw Error(ErrCode::HttpStatus, std::string(service) + " service returned HTTP " +
                                             std::to_string(res->status));
    }
    try {
        return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrCode::MalformedResponse,
                    std::string(service) + " service returned invalid JSON: " + e.what());
    }
}

}  // namespace

namespace detail {

std::vector<EmbeddingVector> remote_embed_batch(const EmbedBackendConfig& config,
                                                const std::vector<std::string>& texts) {
    nlohmann::json body;
    body["texts"] = texts;
    const auto doc = post_json(config.endpoint, "/v1/embed", body, "embed");

    if (!doc.is_object() || !doc.contains("dim") || !doc.contains("vectors") ||
        !doc["dim"].is_number_integer() || !doc["vectors"].is_array()) {
        throw Error(ErrCode::MalformedResponse, "embed service response is missing dim/vectors");
    }
    const std::size_t dim = doc["dim"].get<std::size_t>();
    if (dim != config.dim) {
        throw Error(ErrCode::RemoteDimMismatch,
                    "embed service dim " + std::to_string(dim) + " does not match configured " +
                        std::to_string(config.dim));
    }
    if (doc["vectors"].size() != texts.size()) {
        throw Error(ErrCode::MalformedResponse,
                    "embed service returned " + std::to_string(doc["vectors"].size()) +
                        " vectors for " + std::to_string(texts.size()) + " texts");
    }

    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& row : doc["vectors"]) {
        if (!row.is_array() || row.size() != dim) {
            throw Error(ErrCode::MalformedResponse, "embed service vector has wrong length");
        }
        EmbeddingVector vec;
        vec.values.reserve(dim);
        for (const auto& v : row) {
            if (!v.is_number()) {
                throw Error(ErrCode::MalformedResponse, "embed service vector entry not a number");
            }
            vec.values.push_back(static_cast<float>(v.get<double>()));
        }
        if (config.normalize_output) {
            double sum = 0.0;
            for (float v : vec.values) sum += static_cast<double>(v) * static_cast<double>(v);
            if (sum > 0.0) vec = normalize_vector(vec);
        }
        out.push_back(std::move(vec));
    }
    return out;
}

}  // namespace detail

std::vector<TokenLogprob> remote_logprobs(const std::string& endpoint, const std::string& prefix,
                                          const std::string& continuation) {
    nlohmann::json body;
    body["prefix"] = prefix;
    body["continuation"] = continuation;
    const auto doc = post_json(endpoint, "/v1/logprobs", body, "logprob");

    if (!doc.is_object() || !doc.contains("tokens") || !doc.contains("logprobs") ||
        !doc["tokens"].is_array() || !doc["logprobs"].is_array()) {
        throw Error(ErrCode::MalformedResponse,
                    "logprob service response is missing tokens/logprobs");
    }
    if (doc["tokens"].size() != doc["logprobs"].size()) {
        throw Error(ErrCode::MalformedResponse, "logprob service arrays are misaligned");
    }
    if (doc["tokens"].empty()) {
        throw Error(ErrCode::EmptyTokenList, "logprob service returned no tokens");
    }

    std::vector<TokenLogprob> out;
    out.reserve(doc["tokens"].size());
    for (std::size_t i = 0; i < doc["tokens"].size(); ++i) {
        const auto& token = doc["tokens"][i];
        const auto& logprob = doc["logprobs"][i];
        if (!token.is_string() || !logprob.is_number()) {
            throw Error(ErrCode::MalformedResponse, "logprob service entry has wrong types");
        }
        out.push_back({token.get<std::string>(), logprob.get<double>()});
    }
    return out;
}

std::string dispatch_request(const std::string& endpoint, const GenerationRequest& request) {
    auto body = nlohmann::json::parse(serialize_request(request));
    body["temperature"] = 0.0;
    const auto doc = post_json(endpoint, "/v1/generate", body, "generate");

    if (!doc.is_object() || !doc.contains("answer") || !doc["answer"].is_string()) {
        throw Error(ErrCode::MalformedResponse, "generate service response is missing answer");
    }
    return doc["answer"].get<std::string>();
}

}  // namespace sara
