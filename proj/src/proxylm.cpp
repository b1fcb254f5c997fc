#include "sara/proxylm.hpp"

#include <cmath>

#include "sara/errors.hpp"
#include "sara/textcore.hpp"

namespace sara {

namespace {

constexpr std::uint32_t kBosId = 0;
constexpr std::uint32_t kUnkId = 1;
constexpr std::uint32_t kFirstTokenId = 2;

void append_id(std::string& key, std::uint32_t id) {
    key += static_cast<char>(id & 0xFF);
    key += static_cast<char>((id >> 8) & 0xFF);
    key += static_cast<char>((id >> 16) & 0xFF);
    key += static_cast<char>((id >> 24) & 0xFF);
}

std::string pack_ids(std::span<const std::uint32_t> ids) {
    std::string key;
    key.reserve(ids.size() * 4);
    for (std::uint32_t id : ids) append_id(key, id);
    return key;
}

std::string join_texts(const std::vector<std::string>& texts) {
    std::string joined;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (i > 0) joined += ' ';
        joined += texts[i];
    }
    return joined;
}

}  // namespace

ProxyLMModel ProxyLMModel::train(const std::vector<std::string>& corpus_texts, int order,
                                 double alpha) {
    if (order < 1) throw Error(ErrCode::BadConfig, "n-gram order must be >= 1");
    if (!(alpha > 0.0)) throw Error(ErrCode::BadConfig, "smoothing alpha must be > 0");

    ProxyLMModel model;
    model.order_ = order;
    model.alpha_ = alpha;

    std::uint32_t next_id = kFirstTokenId;
    std::uint64_t total_tokens = 0;

    for (const auto& text : corpus_texts) {
        const auto tokens = tokenize(text);
        if (tokens.empty()) continue;
        total_tokens += tokens.size();

        std::vector<std::uint32_t> ids(static_cast<std::size_t>(order - 1), kBosId);
        ids.reserve(ids.size() + tokens.size());
        for (const auto& token : tokens) {
            auto [it, inserted] = model.vocab_.try_emplace(token, next_id);
            if (inserted) ++next_id;
            ids.push_back(it->second);
        }

        const std::size_t ctx_len = static_cast<std::size_t>(order - 1);
        for (std::size_t pos = ctx_len; pos < ids.size(); ++pos) {
            std::string context_key =
                pack_ids(std::span(ids).subspan(pos - ctx_len, ctx_len));
            ++model.context_counts_[context_key];
            append_id(context_key, ids[pos]);
            ++model.ngram_counts_[context_key];
        }
    }

    if (total_tokens == 0) {
        throw Error(ErrCode::EmptyTrainingCorpus, "empty training corpus");
    }
    model.vocab_size_ = model.vocab_.size() + 1;  // observed types plus UNK
    return model;
}

std::uint32_t ProxyLMModel::intern_or_unk(const std::string& token) const {
    const auto it = vocab_.find(token);
    return it == vocab_.end() ? kUnkId : it->second;
}

bool ProxyLMModel::contains(const std::string& token) const {
    return vocab_.find(token) != vocab_.end();
}

double ProxyLMModel::logprob_ids(std::span<const std::uint32_t> context,
                                 std::uint32_t token) const {
    std::string context_key = pack_ids(context);
    const auto ctx_it = context_counts_.find(context_key);
    const double ctx_count =
        ctx_it == context_counts_.end() ? 0.0 : static_cast<double>(ctx_it->second);

    append_id(context_key, token);
    const auto ngram_it = ngram_counts_.find(context_key);
    const double ngram_count =
        ngram_it == ngram_counts_.end() ? 0.0 : static_cast<double>(ngram_it->second);

    const double vocab = static_cast<double>(vocab_size_);
    return std::log((ngram_count + alpha_) / (ctx_count + alpha_ * vocab));
}

double ProxyLMModel::token_logprob(std::span<const std::string> prefix_tokens,
                                   const std::string& token) const {
    const std::size_t ctx_len = static_cast<std::size_t>(order_ - 1);
    std::vector<std::uint32_t> context(ctx_len, kBosId);
    const std::size_t available = std::min(ctx_len, prefix_tokens.size());
    for (std::size_t i = 0; i < available; ++i) {
        context[ctx_len - available + i] =
            intern_or_unk(prefix_tokens[prefix_tokens.size() - available + i]);
    }
    return logprob_ids(context, intern_or_unk(token));
}

CsiScore ProxyLMModel::csi_score(const std::string& candidate_text,
                                 const std::vector<std::string>& selected_texts) const {
    const auto candidate_tokens = tokenize(candidate_text);
    if (candidate_tokens.empty()) {
        throw Error(ErrCode::EmptyCandidate, "empty candidate");
    }

    const std::size_t ctx_len = static_cast<std::size_t>(order_ - 1);
    std::vector<std::uint32_t> ids(ctx_len, kBosId);
    for (const auto& token : tokenize(join_texts(selected_texts))) {
        ids.push_back(intern_or_unk(token));
    }

    double total = 0.0;
    for (const auto& token : candidate_tokens) {
        const std::uint32_t id = intern_or_unk(token);
        total -= logprob_ids(std::span(ids).last(ctx_len), id);
        ids.push_back(id);
    }

    CsiScore score;
    score.token_count = candidate_tokens.size();
    score.value = total / static_cast<double>(candidate_tokens.size());
    return score;
}

CsiFn make_ngram_csi(ProxyLMModel model) {
    return [model = std::move(model)](const std::string& candidate,
                                      const std::vector<std::string>& selected) {
        return model.csi_score(candidate, selected);
    };
}

CsiFn make_remote_csi(std::string endpoint) {
    return [endpoint = std::move(endpoint)](const std::string& candidate,
                                            const std::vector<std::string>& selected) {
        const auto scored = remote_logprobs(endpoint, join_texts(selected), candidate);
        if (scored.empty()) {
            throw Error(ErrCode::EmptyTokenList, "logprob service returned no tokens");
        }
        double total = 0.0;
        for (const auto& entry : scored) total -= entry.logprob;
        CsiScore score;
        score.token_count = scored.size();
        score.value = total / static_cast<double>(scored.size());
        return score;
    };
}

}  // namespace sara
