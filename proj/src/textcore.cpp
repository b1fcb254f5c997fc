#include "sara/textcore.hpp"

#include <array>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "sara/errors.hpp"

namespace sara {

namespace {

// Locale-independent character classes. Bytes >= 0x80 count as word bytes so
// UTF-8 sequences never split.
bool is_space_byte(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_word_byte(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           c == '_' || c >= 0x80;
}

bool is_upper_ascii(unsigned char c) { return c >= 'A' && c <= 'Z'; }

bool is_terminal(unsigned char c) { return c == '.' || c == '!' || c == '?'; }

const std::unordered_set<std::string>& abbreviation_table() {
    static const std::unordered_set<std::string> table = {
        "Dr.", "Mr.", "Mrs.", "Ms.", "Prof.", "etc.", "e.g.", "i.e.",
        "vs.", "Fig.", "Eq.", "No.", "St.",
    };
    return table;
}

// Whitespace-delimited token ending at dot_pos, with leading non-word bytes
// stripped so "(Dr." matches "Dr.".
std::string abbreviation_candidate(std::string_view text, std::size_t dot_pos) {
    std::size_t begin = dot_pos;
    while (begin > 0 && !is_space_byte(static_cast<unsigned char>(text[begin - 1]))) {
        --begin;
    }
    while (begin < dot_pos && !is_word_byte(static_cast<unsigned char>(text[begin]))) {
        ++begin;
    }
    return std::string(text.substr(begin, dot_pos - begin + 1));
}

std::string_view trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space_byte(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_space_byte(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

Sentence make_sentence(std::string_view text) {
    Sentence s;
    s.text = std::string(text);
    s.token_count = count_tokens(text);
    return s;
}

}  // namespace

TokenizerProfile rule_v1_profile() { return TokenizerProfile{"rule-v1", 1}; }

std::vector<std::pair<std::size_t, std::size_t>> token_spans(std::string_view text) {
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (is_space_byte(c)) {
            ++i;
        } else if (is_word_byte(c)) {
            std::size_t begin = i;
            while (i < n && is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
            spans.emplace_back(begin, i);
        } else {
            spans.emplace_back(i, i + 1);
            ++i;
        }
    }
    return spans;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    for (const auto& [begin, end] : token_spans(text)) {
        tokens.emplace_back(text.substr(begin, end - begin));
    }
    return tokens;
}

std::size_t count_tokens(std::string_view text) {
    std::size_t count = 0;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (is_space_byte(c)) {
            ++i;
        } else if (is_word_byte(c)) {
            while (i < n && is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
            ++count;
        } else {
            ++i;
            ++count;
        }
    }
    return count;
}

std::vector<Sentence> split_sentences(std::string_view text) {
    std::vector<Sentence> sentences;
    const std::size_t n = text.size();

    std::size_t start = 0;
    while (start < n && is_space_byte(static_cast<unsigned char>(text[start]))) ++start;

    for (std::size_t i = start; i < n; ++i) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (!is_terminal(c)) continue;

        // Boundary: whitespace then an uppercase letter (end-of-text is
        // handled by the final flush).
        std::size_t j = i + 1;
        while (j < n && is_space_byte(static_cast<unsigned char>(text[j]))) ++j;
        const bool ws_then_upper =
            j > i + 1 && j < n && is_upper_ascii(static_cast<unsigned char>(text[j]));
        if (!ws_then_upper) continue;
        if (c == '.' && abbreviation_table().count(abbreviation_candidate(text, i)) > 0) {
            continue;
        }

        sentences.push_back(make_sentence(text.substr(start, i + 1 - start)));
        start = j;
        i = j - 1;
    }

    if (start < n) {
        const auto tail = trim(text.substr(start));
        if (!tail.empty()) sentences.push_back(make_sentence(tail));
    }
    return sentences;
}

namespace {

// Oversize sentences are hard-split at token boundaries; transcripts and
// other run-on corpora produce them.
std::vector<Sentence> hard_split(const Sentence& sentence, std::size_t chunk_size) {
    std::vector<Sentence> pieces;
    const auto spans = token_spans(sentence.text);
    for (std::size_t a = 0; a < spans.size(); a += chunk_size) {
        const std::size_t b = std::min(a + chunk_size, spans.size());
        const std::size_t begin = spans[a].first;
        const std::size_t end = spans[b - 1].second;
        Sentence piece;
        piece.text = sentence.text.substr(begin, end - begin);
        piece.token_count = b - a;
        pieces.push_back(std::move(piece));
    }
    return pieces;
}

}  // namespace

std::vector<Chunk> chunk_document(std::string_view doc_text, std::size_t chunk_size,
                                  std::string_view doc_id) {
    if (chunk_size == 0) {
        throw Error(ErrCode::BadArgument, "chunk_size must be >= 1");
    }

    std::vector<Sentence> pieces;
    for (auto& sentence : split_sentences(doc_text)) {
        if (sentence.token_count <= chunk_size) {
            pieces.push_back(std::move(sentence));
        } else {
            for (auto& piece : hard_split(sentence, chunk_size)) {
                pieces.push_back(std::move(piece));
            }
        }
    }

    std::vector<Chunk> chunks;
    std::vector<Sentence> current;
    std::size_t current_tokens = 0;

    auto flush = [&]() {
        if (current.empty()) return;
        Chunk chunk;
        chunk.doc_id = std::string(doc_id);
        chunk.seq_no = static_cast<std::uint32_t>(chunks.size());
        chunk.id = chunk.doc_id + "#" + std::to_string(chunk.seq_no);
        std::string text;
        for (std::size_t i = 0; i < current.size(); ++i) {
            if (i > 0) text += ' ';
            text += current[i].text;
        }
        chunk.text = std::move(text);
        chunk.token_count = current_tokens;
        chunk.sentences = std::move(current);
        current.clear();
        current_tokens = 0;
        chunks.push_back(std::move(chunk));
    };

    for (auto& piece : pieces) {
        if (!current.empty() && current_tokens + piece.token_count > chunk_size) {
            flush();
        }
        current_tokens += piece.token_count;
        current.push_back(std::move(piece));
    }
    flush();
    return chunks;
}

Document make_document(std::string id, std::optional<std::string> title, std::string text,
                       std::size_t chunk_size) {
    Document doc;
    doc.chunks = chunk_document(text, chunk_size, id);
    doc.id = std::move(id);
    doc.title = std::move(title);
    doc.text = std::move(text);
    return doc;
}

std::vector<Document> load_corpus_jsonl(const std::filesystem::path& path,
                                        std::size_t chunk_size) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrCode::MissingFile, "cannot open corpus file: " + path.string());
    }

    std::vector<Document> docs;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json row;
        try {
            row = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrCode::CorruptFile,
                        path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!row.is_object() || !row.contains("id") || !row["id"].is_string() ||
            !row.contains("text") || !row["text"].is_string()) {
            throw Error(ErrCode::CorruptFile, path.string() + ":" + std::to_string(line_no) +
                                                  ": expected {\"id\", \"title\"?, \"text\"}");
        }
        std::string id = row["id"].get<std::string>();
        if (!seen_ids.insert(id).second) {
            throw Error(ErrCode::DuplicateId, "duplicate document id: " + id);
        }
        std::optional<std::string> title;
        if (row.contains("title") && row["title"].is_string()) {
            title = row["title"].get<std::string>();
        }
        docs.push_back(
            make_document(std::move(id), std::move(title), row["text"].get<std::string>(),
                          chunk_size));
    }
    return docs;
}

}  // namespace sara
