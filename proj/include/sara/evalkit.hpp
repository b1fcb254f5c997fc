#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sara {

// SQuAD-style normalization: lowercase, strip punctuation, drop the articles
// "a"/"an"/"the", collapse whitespace. Applied to both metrics.
std::string normalize_answer(std::string_view text);

// Multiset-overlap F1 over normalized tokens. Both sides empty -> 1.0,
// exactly one empty -> 0.0.
double token_f1(std::string_view prediction, std::string_view reference);

// LCS-based F-measure (beta = 1) over normalized token sequences, same empty
// rules as token_f1.
double rouge_l(std::string_view prediction, std::string_view reference);

namespace detail {
// LCS length over id sequences; the core rouge_l reduction.
std::size_t lcs_length(std::span<const int> a, std::span<const int> b);
}  // namespace detail

struct EvalRecord {
    std::string id;
    std::string prediction;
    std::vector<std::string> references;  // non-empty
};

struct RecordScore {
    std::string id;
    double f1 = 0.0;
    double rouge_l = 0.0;
};

struct MetricReport {
    std::size_t count = 0;
    double mean_f1 = 0.0;
    double mean_rouge_l = 0.0;
    std::vector<RecordScore> per_record;
};

// Per record, each metric is the max over references; means are arithmetic.
// Errors on duplicate ids or an empty record list.
MetricReport evaluate_run(const std::vector<EvalRecord>& records);

// Predictions: JSONL {"id", "prediction"}. Gold: JSONL {"id", "answers"}.
// Every prediction id must have a gold row; unmatched gold rows are ignored.
std::vector<EvalRecord> load_eval_records(const std::filesystem::path& predictions_path,
                                          const std::filesystem::path& gold_path);

std::string report_to_json(const MetricReport& report);
void write_report_csv(const MetricReport& report, const std::filesystem::path& path);

}  // namespace sara
