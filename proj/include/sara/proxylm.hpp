#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace sara {

// Average per-token surprisal of a candidate, in nats per token.
struct CsiScore {
    double value = 0.0;
    std::size_t token_count = 0;
};

// Additive-smoothed n-gram model over rule-v1 tokens. Each training text is
// padded with (order-1) begin-of-sequence symbols; unseen tokens map to a
// single UNK type so every candidate scores finite. Immutable once trained.
class ProxyLMModel {
public:
    static ProxyLMModel train(const std::vector<std::string>& corpus_texts, int order,
                              double alpha);

    // ln( (count(context, token) + alpha) / (count(context) + alpha*|vocab|) )
    // with context = the last (order-1) prefix tokens, BOS-padded on the
    // left. Always finite and < 0.
    double token_logprob(std::span<const std::string> prefix_tokens,
                         const std::string& token) const;

    // Eq-style conditional self-information: the conditioning prefix is the
    // selected texts space-joined in selection order; candidate tokens are
    // scored left to right, each conditioned on prefix + preceding candidate
    // tokens. Errors on a candidate with no tokens.
    CsiScore csi_score(const std::string& candidate_text,
                       const std::vector<std::string>& selected_texts) const;

    int order() const { return order_; }
    double alpha() const { return alpha_; }
    std::size_t vocab_size() const { return vocab_size_; }  // observed + UNK
    bool contains(const std::string& token) const;

private:
    ProxyLMModel() = default;

    std::uint32_t intern_or_unk(const std::string& token) const;
    double logprob_ids(std::span<const std::uint32_t> context, std::uint32_t token) const;

    int order_ = 1;
    double alpha_ = 0.1;
    std::size_t vocab_size_ = 0;
    std::unordered_map<std::string, std::uint32_t> vocab_;  // token -> id (>= 2)
    std::unordered_map<std::string, std::uint64_t> context_counts_;  // packed id key
    std::unordered_map<std::string, std::uint64_t> ngram_counts_;
};

struct TokenLogprob {
    std::string token;
    double logprob;  // natural log
};

// POST {endpoint}/v1/logprobs with {"prefix", "continuation"}; the response
// carries the server's tokenization of the continuation with aligned
// natural-log probabilities.
std::vector<TokenLogprob> remote_logprobs(const std::string& endpoint, const std::string& prefix,
                                          const std::string& continuation);

using CsiFn = std::function<CsiScore(const std::string& candidate,
                                     const std::vector<std::string>& selected)>;

CsiFn make_ngram_csi(ProxyLMModel model);
// One csi call maps to exactly one remote call; CSI is the mean of the
// returned negative log-probabilities.
CsiFn make_remote_csi(std::string endpoint);

inline constexpr int kDefaultProxyOrder = 3;
inline constexpr double kDefaultProxyAlpha = 0.1;

}  // namespace sara
