#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sentipipe/mat.hpp"

namespace sentipipe {

enum class SentimentLabel : int { Negative = 0, Neutral = 1, Positive = 2 };

inline const char* to_string(SentimentLabel l) {
    switch (l) {
        case SentimentLabel::Negative: return "negative";
        case SentimentLabel::Neutral: return "neutral";
        case SentimentLabel::Positive: return "positive";
    }
    return "?";
}

std::optional<SentimentLabel> label_from_string(std::string_view s);

struct LabeledExample {
    std::string text;
    SentimentLabel label;

    bool operator==(const LabeledExample&) const = default;
};

// Lowercases ASCII letters, splits ASCII punctuation into single-character
// tokens, collapses whitespace. Non-ASCII UTF-8 sequences are kept verbatim
// as word characters.
std::vector<std::string> tokenize(std::string_view text);

// Token ids are dense; 0 and 1 are reserved for padding and unknowns.
// Immutable once built.
struct Vocabulary {
    static constexpr int32_t kPad = 0;
    static constexpr int32_t kUnk = 1;

    std::vector<std::string> tokens;  // id order, tokens[0] = "<pad>", tokens[1] = "<unk>"
    std::unordered_map<std::string, int32_t> index;

    int32_t size() const { return static_cast<int32_t>(tokens.size()); }

    int32_t id_of(std::string_view tok) const {
        auto it = index.find(std::string(tok));
        return it == index.end() ? kUnk : it->second;
    }

    const std::string& token_of(int32_t id) const {
        check(id >= 0 && id < size(), "Vocabulary: id out of range");
        return tokens[static_cast<size_t>(id)];
    }
};

// Keeps tokens with frequency >= min_freq, most frequent first, ties broken
// lexicographically, truncated so the vocabulary (with pad/unk) has at most
// max_size entries.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus, int min_freq,
                       int max_size);

struct EncodedExample {
    std::vector<int32_t> ids;   // length max_len
    std::vector<uint8_t> mask;  // 1 for real tokens, then 0 padding
    std::optional<SentimentLabel> label;
};

// Out-of-vocabulary tokens map to unk; sequences are truncated to max_len or
// right-padded. Empty input encodes as a single unk so downstream always sees
// at least one real position.
EncodedExample encode(std::span<const std::string> tokens, const Vocabulary& vocab, int max_len);

inline EncodedExample encode_text(std::string_view text, const Vocabulary& vocab, int max_len,
                                  std::optional<SentimentLabel> label = std::nullopt) {
    auto enc = encode(tokenize(text), vocab, max_len);
    enc.label = label;
    return enc;
}

// Seeded shuffle, then split; the validation side gets round(val_fraction * n)
// examples, at least 1 and at most n - 1.
std::pair<std::vector<LabeledExample>, std::vector<LabeledExample>> split(
    const std::vector<LabeledExample>& data, double val_fraction, Rng& rng);

}  // namespace sentipipe
