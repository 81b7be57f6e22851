#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sentipipe/train.hpp"

namespace sentipipe {

struct PseudoLabelRecord {
    int64_t doc_id = 0;  // input-order index, stable across runs
    std::string text;
    SentimentLabel label;    // argmax of the teacher's probability row
    double confidence = 0.0;  // max of the same row

    bool operator==(const PseudoLabelRecord&) const = default;
};

enum class StudentMode { TeacherFineTuned, IndependentNoisyStudent };

std::optional<StudentMode> student_mode_from_string(std::string_view s);
const char* to_string(StudentMode m);

// Eval-mode batched teacher inference over an in-memory corpus. Records whose
// confidence falls below the threshold are dropped; output order follows input
// order.
std::vector<PseudoLabelRecord> pseudolabel_corpus(const Model& teacher,
                                                  const std::vector<std::string>& texts,
                                                  int batch_size,
                                                  std::optional<double> threshold = std::nullopt);

// Streaming variant: reads {"text": ...} JSONL, writes pseudolabel JSONL with
// fields id/text/label/confidence, keeping only batch_size documents in
// memory. Returns the number of records written.
int64_t pseudolabel_stream(const Model& teacher, const std::string& in_jsonl,
                           const std::string& out_jsonl, int batch_size,
                           std::optional<double> threshold = std::nullopt);

std::vector<PseudoLabelRecord> load_pseudolabels(const std::string& path);
void write_pseudolabels(const std::string& path, const std::vector<PseudoLabelRecord>& records);

// TeacherFineTuned trains on the pseudolabels alone; IndependentNoisyStudent
// trains on pseudolabels plus the teacher's own labeled data, seeded-shuffled.
std::vector<LabeledExample> assemble_student_dataset(StudentMode mode,
                                                     const std::vector<PseudoLabelRecord>& pseudo,
                                                     const std::vector<LabeledExample>& teacher_train,
                                                     Rng& rng);

struct StudentResult {
    Model model;
    TrainTrace trace;
};

// TeacherFineTuned starts from the teacher's weights and keeps its vocabulary;
// IndependentNoisyStudent starts from a fresh random initialization with a
// vocabulary built over its own training corpus. Both run the chain-thaw
// schedule with training-mode dropout active.
StudentResult train_student(StudentMode mode, const std::vector<PseudoLabelRecord>& pseudo,
                            const std::vector<LabeledExample>& teacher_train, const Model& teacher,
                            const TrainConfig& tc, double val_fraction, Rng& rng,
                            int vocab_min_freq = 2, int vocab_max_size = 50000);

struct ComparisonRow {
    std::string dataset;
    std::optional<double> teacher;
    std::optional<double> teacher_finetuned;
    std::optional<double> independent_noisy_student;
};

struct NamedDataset {
    std::string name;
    std::vector<LabeledExample> examples;
};

// Accuracy of each provided model on each dataset; rows follow dataset order.
// Null model pointers leave their column empty.
std::vector<ComparisonRow> compare_models(const Model* teacher, const Model* teacher_finetuned,
                                          const Model* independent_noisy_student,
                                          const std::vector<NamedDataset>& datasets);

// Table with columns Dataset Name | Teacher | Teacher Finetuning |
// Independent Noisy Student, accuracies as percentages with two decimals.
std::string render_comparison_markdown(const std::vector<ComparisonRow>& rows);
std::string comparison_to_json(const std::vector<ComparisonRow>& rows);

}  // namespace sentipipe
