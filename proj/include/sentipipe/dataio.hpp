#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sentipipe/textpipe.hpp"

namespace sentipipe {

// Labeled JSONL: one {"text": ..., "label": "negative|neutral|positive"} per line.
std::vector<LabeledExample> load_jsonl_labeled(const std::string& path);

// Unlabeled JSONL: one {"text": ...} per line. The streaming form keeps one
// line in memory at a time so corpus size is unbounded.
void for_each_jsonl_text(const std::string& path,
                         const std::function<void(size_t index, std::string text)>& fn);
std::vector<std::string> load_jsonl_unlabeled(const std::string& path);

// Sentiment-140 export: 6 quoted comma-separated fields per row; field 0 is
// the polarity (0 negative, 2 neutral, 4 positive), field 5 the text.
std::vector<LabeledExample> load_sentiment140_csv(const std::string& path);

enum class DatasetFormat { Jsonl, Sentiment140 };
DatasetFormat dataset_format_from_string(const std::string& s);
std::vector<LabeledExample> load_labeled(const std::string& path, DatasetFormat format);

void write_jsonl_labeled(const std::string& path, const std::vector<LabeledExample>& examples);
void write_jsonl_unlabeled(const std::string& path, const std::vector<std::string>& texts);

}  // namespace sentipipe
