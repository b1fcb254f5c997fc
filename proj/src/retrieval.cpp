#include "sara/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include <json.hpp>

#include "sara/errors.hpp"

namespace sara {

namespace {

constexpr std::uint32_t kFormatVersion = 1;

std::string lowercase_ascii(std::string_view term) {
    std::string out(term);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

std::vector<std::string> query_terms_of(const std::string& query) {
    std::vector<std::string> terms;
    for (auto& tok : tokenize(query)) terms.push_back(lowercase_ascii(tok));
    return terms;
}

std::uint32_t tf_in_chunk(const std::vector<Posting>& postings, ChunkRef chunk) {
    const auto it = std::lower_bound(
        postings.begin(), postings.end(), chunk,
        [](const Posting& p, ChunkRef ref) { return p.chunk < ref; });
    if (it == postings.end() || it->chunk != chunk) return 0;
    return it->tf;
}

// Stable ranking: score descending, then (doc_id, seq_no) ascending.
std::vector<RetrievedContext> rank_chunks(const std::vector<ChunkRow>& chunks,
                                          const std::vector<double>& scores, std::size_t n) {
    std::vector<ChunkRef> order(chunks.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<ChunkRef>(i);
    std::sort(order.begin(), order.end(), [&](ChunkRef a, ChunkRef b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        const ChunkRow& ra = chunks[a];
        const ChunkRow& rb = chunks[b];
        if (ra.doc_id != rb.doc_id) return ra.doc_id < rb.doc_id;
        return ra.seq_no < rb.seq_no;
    });

    const std::size_t take = std::min(n, order.size());
    std::vector<RetrievedContext> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        out.push_back({order[i], scores[order[i]], static_cast<std::uint32_t>(i + 1)});
    }
    return out;
}

// --- little-endian binary helpers for postings.bin ---

void write_u32(std::ostream& out, std::uint32_t value) {
    unsigned char bytes[4] = {
        static_cast<unsigned char>(value & 0xFF),
        static_cast<unsigned char>((value >> 8) & 0xFF),
        static_cast<unsigned char>((value >> 16) & 0xFF),
        static_cast<unsigned char>((value >> 24) & 0xFF),
    };
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (!in) throw Error(ErrCode::CorruptFile, "postings.bin: truncated record");
    return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
           (static_cast<std::uint32_t>(bytes[2]) << 16) |
           (static_cast<std::uint32_t>(bytes[3]) << 24);
}

}  // namespace

Index Index::build(const std::vector<Chunk>& chunks, TokenizerProfile profile) {
    if (chunks.empty()) throw Error(ErrCode::EmptyCorpus, "empty corpus");

    Index index;
    index.profile_ = std::move(profile);
    index.chunks_.reserve(chunks.size());

    std::uint64_t total_tokens = 0;
    for (const Chunk& chunk : chunks) {
        const ChunkRef ref = static_cast<ChunkRef>(index.chunks_.size());
        const auto tokens = tokenize(chunk.text);
        total_tokens += tokens.size();

        std::map<std::string, std::uint32_t> tf;
        for (const auto& token : tokens) ++tf[lowercase_ascii(token)];
        for (const auto& [term, count] : tf) {
            index.postings_[term].push_back({ref, count});
        }

        index.chunks_.push_back({chunk.id, chunk.doc_id, chunk.seq_no,
                                 static_cast<std::uint32_t>(tokens.size()), chunk.text});
    }
    index.avg_chunk_len_ = static_cast<double>(total_tokens) / static_cast<double>(chunks.size());
    return index;
}

double Index::idf(const std::string& term) const {
    const auto it = postings_.find(lowercase_ascii(term));
    const double df = it == postings_.end() ? 0.0 : static_cast<double>(it->second.size());
    const double n = static_cast<double>(chunks_.size());
    return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

double Index::bm25_score(std::span<const std::string> query_terms, ChunkRef chunk) const {
    if (chunk >= chunks_.size()) {
        throw Error(ErrCode::UnknownChunk, "unknown chunk ref " + std::to_string(chunk));
    }
    std::set<std::string> distinct;
    for (const auto& term : query_terms) distinct.insert(lowercase_ascii(term));

    const double len = static_cast<double>(chunks_[chunk].token_count);
    const double norm = kBm25K1 * (1.0 - kBm25B + kBm25B * len / avg_chunk_len_);

    double score = 0.0;
    for (const auto& term : distinct) {
        const auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const double tf = static_cast<double>(tf_in_chunk(it->second, chunk));
        if (tf == 0.0) continue;
        score += idf(term) * tf * (kBm25K1 + 1.0) / (tf + norm);
    }
    return score;
}

std::vector<RetrievedContext> Index::retrieve_top_n(const std::string& query,
                                                    std::size_t n) const {
    if (n == 0) throw Error(ErrCode::BadArgument, "n must be >= 1");
    const auto terms = query_terms_of(query);

    std::vector<double> scores(chunks_.size(), 0.0);
    for (std::size_t i = 0; i < chunks_.size(); ++i) {
        scores[i] = bm25_score(terms, static_cast<ChunkRef>(i));
    }
    return rank_chunks(chunks_, scores, n);
}

std::vector<RetrievedContext> Index::retrieve_dense(const std::string& query, std::size_t n,
                                                    const EmbedBackend& backend) const {
    if (n == 0) throw Error(ErrCode::BadArgument, "n must be >= 1");

    const EmbeddingVector query_vec = backend.embed(query);
    const auto chunk_vecs = backend.embed_batch(chunk_texts());

    auto norm_of = [](const EmbeddingVector& v) {
        double sum = 0.0;
        for (float x : v.values) sum += static_cast<double>(x) * static_cast<double>(x);
        return std::sqrt(sum);
    };
    const double query_norm = norm_of(query_vec);

    std::vector<double> scores(chunks_.size(), 0.0);
    for (std::size_t i = 0; i < chunk_vecs.size(); ++i) {
        const EmbeddingVector& cv = chunk_vecs[i];
        if (cv.dim() != query_vec.dim()) {
            throw Error(ErrCode::DimMismatch, "dense retrieval: embedding dims differ");
        }
        const double chunk_norm = norm_of(cv);
        if (query_norm == 0.0 || chunk_norm == 0.0) continue;
        double dot = 0.0;
        for (std::size_t j = 0; j < cv.dim(); ++j) {
            dot += static_cast<double>(query_vec.values[j]) * static_cast<double>(cv.values[j]);
        }
        scores[i] = dot / (query_norm * chunk_norm);
    }
    return rank_chunks(chunks_, scores, n);
}

const ChunkRow& Index::chunk(ChunkRef ref) const {
    if (ref >= chunks_.size()) {
        throw Error(ErrCode::UnknownChunk, "unknown chunk ref " + std::to_string(ref));
    }
    return chunks_[ref];
}

std::optional<ChunkRef> Index::find_chunk(std::string_view chunk_id) const {
    for (std::size_t i = 0; i < chunks_.size(); ++i) {
        if (chunks_[i].id == chunk_id) return static_cast<ChunkRef>(i);
    }
    return std::nullopt;
}

std::vector<std::string> Index::chunk_texts() const {
    std::vector<std::string> texts;
    texts.reserve(chunks_.size());
    for (const auto& row : chunks_) texts.push_back(row.text);
    return texts;
}

void Index::persist(const std::filesystem::path& dir) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrCode::Io, "cannot create index directory: " + dir.string());

    {
        nlohmann::json manifest;
        manifest["format_version"] = kFormatVersion;
        manifest["tokenizer_profile"] = {{"id", profile_.id}, {"version", profile_.version}};
        manifest["doc_count"] = chunks_.size();
        manifest["avg_chunk_len"] = avg_chunk_len_;
        std::ofstream out(dir / "manifest.json");
        if (!out) throw Error(ErrCode::Io, "cannot write manifest.json");
        out << manifest.dump(2) << "\n";
    }

    {
        std::ofstream out(dir / "postings.bin", std::ios::binary);
        if (!out) throw Error(ErrCode::Io, "cannot write postings.bin");
        write_u32(out, static_cast<std::uint32_t>(postings_.size()));
        for (const auto& [term, list] : postings_) {
            write_u32(out, static_cast<std::uint32_t>(term.size()));
            out.write(term.data(), static_cast<std::streamsize>(term.size()));
            write_u32(out, static_cast<std::uint32_t>(list.size()));
            for (const Posting& p : list) {
                write_u32(out, p.chunk);
                write_u32(out, p.tf);
            }
        }
        if (!out) throw Error(ErrCode::Io, "short write to postings.bin");
    }

    {
        std::ofstream out(dir / "chunks.jsonl");
        if (!out) throw Error(ErrCode::Io, "cannot write chunks.jsonl");
        for (const auto& row : chunks_) {
            nlohmann::json line;
            line["id"] = row.id;
            line["doc_id"] = row.doc_id;
            line["seq_no"] = row.seq_no;
            line["token_count"] = row.token_count;
            line["text"] = row.text;
            out << line.dump() << "\n";
        }
        if (!out) throw Error(ErrCode::Io, "short write to chunks.jsonl");
    }
}

Index Index::load(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    std::ifstream manifest_in(manifest_path);
    if (!manifest_in) {
        throw Error(ErrCode::MissingManifest, "missing manifest: " + manifest_path.string());
    }
    nlohmann::json manifest;
    try {
        manifest_in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrCode::CorruptManifest, "corrupt manifest: " + std::string(e.what()));
    }
    if (!manifest.is_object() || !manifest.contains("format_version") ||
        !manifest.contains("tokenizer_profile") || !manifest.contains("doc_count") ||
        !manifest.contains("avg_chunk_len")) {
        throw Error(ErrCode::CorruptManifest, "corrupt manifest: missing fields");
    }
    if (manifest["format_version"].get<std::uint32_t>() != kFormatVersion) {
        throw Error(ErrCode::VersionMismatch,
                    "unsupported index format_version " + manifest["format_version"].dump());
    }

    Index index;
    try {
        index.profile_.id = manifest["tokenizer_profile"]["id"].get<std::string>();
        index.profile_.version = manifest["tokenizer_profile"]["version"].get<std::uint32_t>();
        index.avg_chunk_len_ = manifest["avg_chunk_len"].get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrCode::CorruptManifest, "corrupt manifest: " + std::string(e.what()));
    }
    const auto declared_count = manifest["doc_count"].get<std::size_t>();

    {
        const auto chunks_path = dir / "chunks.jsonl";
        std::ifstream in(chunks_path);
        if (!in) throw Error(ErrCode::MissingFile, "missing file: " + chunks_path.string());
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(line);
                index.chunks_.push_back({doc.at("id").get<std::string>(),
                                         doc.at("doc_id").get<std::string>(),
                                         doc.at("seq_no").get<std::uint32_t>(),
                                         doc.at("token_count").get<std::uint32_t>(),
                                         doc.at("text").get<std::string>()});
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrCode::CorruptFile, "chunks.jsonl line " + std::to_string(line_no) +
                                                      ": " + e.what());
            }
        }
        if (index.chunks_.size() != declared_count) {
            throw Error(ErrCode::CorruptFile,
                        "chunks.jsonl row count does not match manifest doc_count");
        }
        if (index.chunks_.empty()) throw Error(ErrCode::EmptyCorpus, "empty corpus");
    }

    {
        const auto postings_path = dir / "postings.bin";
        std::ifstream in(postings_path, std::ios::binary);
        if (!in) throw Error(ErrCode::MissingFile, "missing file: " + postings_path.string());
        const std::uint32_t term_count = read_u32(in);
        for (std::uint32_t t = 0; t < term_count; ++t) {
            const std::uint32_t term_len = read_u32(in);
            std::string term(term_len, '\0');
            in.read(term.data(), term_len);
            if (!in) throw Error(ErrCode::CorruptFile, "postings.bin: truncated term");
            const std::uint32_t posting_count = read_u32(in);
            auto& list = index.postings_[term];
            list.reserve(posting_count);
            for (std::uint32_t p = 0; p < posting_count; ++p) {
                const ChunkRef chunk = read_u32(in);
                const std::uint32_t tf = read_u32(in);
                if (chunk >= index.chunks_.size()) {
                    throw Error(ErrCode::CorruptFile,
                                "postings.bin: chunk ref out of range for term " + term);
                }
                list.push_back({chunk, tf});
            }
        }
        char extra;
        if (in.read(&extra, 1)) {
            throw Error(ErrCode::CorruptFile, "postings.bin: trailing bytes");
        }
    }

    return index;
}

}  // namespace sara
