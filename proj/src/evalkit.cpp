#include "sara/evalkit.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sara/errors.hpp"

namespace sara {

namespace {

const std::set<std::string>& articles() {
    static const std::set<std::string> kArticles{"a", "an", "the"};
    return kArticles;
}

// Lowercased, punctuation-stripped tokens. Article removal is the string
// normalization convention only; the metric definitions count every token,
// so "the cat sat" scores as three tokens.
std::vector<std::string> normalized_tokens(std::string_view text, bool drop_articles) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty() && !(drop_articles && articles().count(current))) {
            tokens.push_back(current);
        }
        current.clear();
    };
    for (char raw : text) {
        const unsigned char c = static_cast<unsigned char>(raw);
        if (c >= 'A' && c <= 'Z') {
            current += static_cast<char>(c - 'A' + 'a');
        } else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c >= 0x80) {
            current += raw;  // non-ASCII bytes pass through; only ASCII punctuation is stripped
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

// Maps both token lists onto shared integer ids so the LCS core compares
// ints, not strings.
std::pair<std::vector<int>, std::vector<int>> to_ids(const std::vector<std::string>& a,
                                                     const std::vector<std::string>& b) {
    std::map<std::string, int> ids;
    auto intern = [&](const std::vector<std::string>& tokens) {
        std::vector<int> out;
        out.reserve(tokens.size());
        for (const auto& t : tokens) {
            const auto [it, _] = ids.try_emplace(t, static_cast<int>(ids.size()));
            out.push_back(it->second);
        }
        return out;
    };
    return {intern(a), intern(b)};
}

double f_measure(double overlap, double pred_len, double ref_len) {
    if (overlap == 0.0) return 0.0;
    const double precision = overlap / pred_len;
    const double recall = overlap / ref_len;
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

std::string normalize_answer(std::string_view text) {
    const auto tokens = normalized_tokens(text, true);
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) out += ' ';
        out += tokens[i];
    }
    return out;
}

double token_f1(std::string_view prediction, std::string_view reference) {
    const auto pred = normalized_tokens(prediction, false);
    const auto ref = normalized_tokens(reference, false);
    if (pred.empty() && ref.empty()) return 1.0;
    if (pred.empty() || ref.empty()) return 0.0;

    std::map<std::string, std::size_t> ref_counts;
    for (const auto& t : ref) ++ref_counts[t];
    std::size_t overlap = 0;
    for (const auto& t : pred) {
        auto it = ref_counts.find(t);
        if (it != ref_counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    return f_measure(static_cast<double>(overlap), static_cast<double>(pred.size()),
                     static_cast<double>(ref.size()));
}

namespace detail {

namespace {

// Bit-parallel LCS (Hyyro): one machine word holds the whole DP row, so each
// column costs a handful of word operations instead of |a| cell updates.
// Requires |a| <= 63 so the carry in V + U cannot leave the word.
std::size_t lcs_bitparallel(std::span<const int> a, std::span<const int> b) {
    int symbols[63];
    std::uint64_t match[63];
    std::size_t distinct = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        std::size_t s = 0;
        while (s < distinct && symbols[s] != a[i]) ++s;
        if (s == distinct) {
            symbols[distinct] = a[i];
            match[distinct] = 0;
            ++distinct;
        }
        match[s] |= std::uint64_t{1} << i;
    }
    std::uint64_t v = ~std::uint64_t{0};
    for (std::size_t j = 0; j < b.size(); ++j) {
        std::uint64_t m = 0;
        for (std::size_t s = 0; s < distinct; ++s) {
            if (symbols[s] == b[j]) {
                m = match[s];
                break;
            }
        }
        const std::uint64_t u = v & m;
        v = (v + u) | (v - u);
    }
    const std::uint64_t low = (std::uint64_t{1} << a.size()) - 1;
    return static_cast<std::size_t>(std::popcount(~v & low));
}

std::size_t lcs_dp(std::span<const int> a, std::span<const int> b) {
    std::vector<std::size_t> row(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diagonal = 0;  // row[j-1] from the previous iteration of i
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t above = row[j];
            row[j] = a[i - 1] == b[j - 1] ? diagonal + 1 : std::max(above, row[j - 1]);
            diagonal = above;
        }
    }
    return row[b.size()];
}

}  // namespace

std::size_t lcs_length(std::span<const int> a, std::span<const int> b) {
    if (a.empty() || b.empty()) return 0;
    constexpr std::size_t kWordLimit = 63;
    if (a.size() <= kWordLimit) return lcs_bitparallel(a, b);
    if (b.size() <= kWordLimit) return lcs_bitparallel(b, a);
    return lcs_dp(a, b);
}

}  // namespace detail

double rouge_l(std::string_view prediction, std::string_view reference) {
    const auto pred = normalized_tokens(prediction, false);
    const auto ref = normalized_tokens(reference, false);
    if (pred.empty() && ref.empty()) return 1.0;
    if (pred.empty() || ref.empty()) return 0.0;

    const auto [pred_ids, ref_ids] = to_ids(pred, ref);
    const std::size_t lcs = detail::lcs_length(pred_ids, ref_ids);
    return f_measure(static_cast<double>(lcs), static_cast<double>(pred.size()),
                     static_cast<double>(ref.size()));
}

MetricReport evaluate_run(const std::vector<EvalRecord>& records) {
    if (records.empty()) {
        throw Error(ErrCode::BadArgument, "no records to evaluate");
    }

    MetricReport report;
    report.count = records.size();
    std::set<std::string> seen;
    double f1_sum = 0.0;
    double rouge_sum = 0.0;

    for (const auto& record : records) {
        if (!seen.insert(record.id).second) {
            throw Error(ErrCode::DuplicateId, "duplicate record id: " + record.id);
        }
        if (record.references.empty()) {
            throw Error(ErrCode::BadArgument, "record " + record.id + " has no references");
        }
        RecordScore score;
        score.id = record.id;
        for (const auto& reference : record.references) {
            score.f1 = std::max(score.f1, token_f1(record.prediction, reference));
            score.rouge_l = std::max(score.rouge_l, rouge_l(record.prediction, reference));
        }
        f1_sum += score.f1;
        rouge_sum += score.rouge_l;
        report.per_record.push_back(std::move(score));
    }

    report.mean_f1 = f1_sum / static_cast<double>(records.size());
    report.mean_rouge_l = rouge_sum / static_cast<double>(records.size());
    return report;
}

std::vector<EvalRecord> load_eval_records(const std::filesystem::path& predictions_path,
                                          const std::filesystem::path& gold_path) {
    auto read_lines = [](const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw Error(ErrCode::MissingFile, "cannot open " + path.string());
        std::vector<nlohmann::json> docs;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            try {
                docs.push_back(nlohmann::json::parse(line));
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrCode::CorruptFile,
                            path.string() + " line " + std::to_string(line_no) + ": " + e.what());
            }
        }
        return docs;
    };

    std::map<std::string, std::vector<std::string>> gold;
    for (const auto& doc : read_lines(gold_path)) {
        if (!doc.is_object() || !doc.contains("id") || !doc.contains("answers") ||
            !doc["answers"].is_array() || doc["answers"].empty()) {
            throw Error(ErrCode::CorruptFile,
                        gold_path.string() + ": rows need an id and nonempty answers");
        }
        std::vector<std::string> answers;
        for (const auto& a : doc["answers"]) {
            if (!a.is_string()) {
                throw Error(ErrCode::CorruptFile, gold_path.string() + ": answers must be strings");
            }
            answers.push_back(a.get<std::string>());
        }
        const std::string id = doc["id"].get<std::string>();
        if (!gold.emplace(id, std::move(answers)).second) {
            throw Error(ErrCode::DuplicateId, "duplicate gold id: " + id);
        }
    }

    std::vector<EvalRecord> records;
    for (const auto& doc : read_lines(predictions_path)) {
        if (!doc.is_object() || !doc.contains("id") || !doc.contains("prediction") ||
            !doc["prediction"].is_string()) {
            throw Error(ErrCode::CorruptFile,
                        predictions_path.string() + ": rows need an id and a prediction");
        }
        EvalRecord record;
        record.id = doc["id"].get<std::string>();
        record.prediction = doc["prediction"].get<std::string>();
        const auto it = gold.find(record.id);
        if (it == gold.end()) {
            throw Error(ErrCode::CorruptFile, "prediction id has no gold row: " + record.id);
        }
        record.references = it->second;
        records.push_back(std::move(record));
    }
    return records;
}

std::string report_to_json(const MetricReport& report) {
    nlohmann::json doc;
    doc["count"] = report.count;
    doc["mean_f1"] = report.mean_f1;
    doc["mean_rouge_l"] = report.mean_rouge_l;
    doc["per_record"] = nlohmann::json::array();
    for (const auto& score : report.per_record) {
        doc["per_record"].push_back(
            {{"id", score.id}, {"f1", score.f1}, {"rouge_l", score.rouge_l}});
    }
    return doc.dump(2);
}

void write_report_csv(const MetricReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrCode::Io, "cannot write " + path.string());
    out << "id,f1,rouge_l\n";
    std::ostringstream line;
    for (const auto& score : report.per_record) {
        line.str("");
        line.precision(17);
        line << score.id << ',' << score.f1 << ',' << score.rouge_l << '\n';
        out << line.str();
    }
    if (!out) throw Error(ErrCode::Io, "short write to " + path.string());
}

}  // namespace sara
