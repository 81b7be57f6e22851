#include "sentipipe/textpipe.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

namespace sentipipe {

std::optional<SentimentLabel> label_from_string(std::string_view s) {
    if (s == "negative") return SentimentLabel::Negative;
    if (s == "neutral") return SentimentLabel::Neutral;
    if (s == "positive") return SentimentLabel::Positive;
    return std::nullopt;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string word;
    auto flush = [&] {
        if (!word.empty()) {
            out.push_back(word);
            word.clear();
        }
    };
    for (unsigned char c : text) {
        if (c < 0x80) {
            if (std::isspace(c)) {
                flush();
            } else if (std::isalnum(c)) {
                word.push_back(static_cast<char>(std::tolower(c)));
            } else {
                // ASCII punctuation becomes its own single-character token
                flush();
                out.emplace_back(1, static_cast<char>(c));
            }
        } else {
            word.push_back(static_cast<char>(c));  // UTF-8 continuation/lead bytes stay in-word
        }
    }
    flush();
    return out;
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus, int min_freq,
                       int max_size) {
    check(min_freq >= 1, "build_vocab: min_freq must be >= 1");
    check(max_size >= 2, "build_vocab: max_size must be >= 2");
    std::map<std::string, int64_t> freq;
    for (const auto& doc : corpus)
        for (const auto& tok : doc) ++freq[tok];

    std::vector<std::pair<std::string, int64_t>> kept;
    kept.reserve(freq.size());
    for (auto& [tok, n] : freq)
        if (n >= min_freq) kept.emplace_back(tok, n);
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (static_cast<int>(kept.size()) > max_size - 2) kept.resize(static_cast<size_t>(max_size - 2));

    Vocabulary v;
    v.tokens.reserve(kept.size() + 2);
    v.tokens.emplace_back("<pad>");
    v.tokens.emplace_back("<unk>");
    for (auto& [tok, n] : kept) v.tokens.push_back(tok);
    for (int32_t id = 0; id < static_cast<int32_t>(v.tokens.size()); ++id)
        v.index.emplace(v.tokens[static_cast<size_t>(id)], id);
    return v;
}

EncodedExample encode(std::span<const std::string> tokens, const Vocabulary& vocab, int max_len) {
    check(max_len >= 1, "encode: max_len must be >= 1");
    EncodedExample e;
    e.ids.assign(static_cast<size_t>(max_len), Vocabulary::kPad);
    e.mask.assign(static_cast<size_t>(max_len), 0);
    if (tokens.empty()) {
        e.ids[0] = Vocabulary::kUnk;
        e.mask[0] = 1;
        return e;
    }
    const size_t n = std::min(tokens.size(), static_cast<size_t>(max_len));
    for (size_t i = 0; i < n; ++i) {
        e.ids[i] = vocab.id_of(tokens[i]);
        e.mask[i] = 1;
    }
    return e;
}

std::pair<std::vector<LabeledExample>, std::vector<LabeledExample>> split(
    const std::vector<LabeledExample>& data, double val_fraction, Rng& rng) {
    check(val_fraction > 0.0 && val_fraction < 1.0, "split: val_fraction must be in (0, 1)");
    check(data.size() >= 2, "split: need at least 2 examples");
    std::vector<size_t> order(data.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order.begin(), order.end());

    size_t n_val = static_cast<size_t>(std::llround(val_fraction * static_cast<double>(data.size())));
    n_val = std::clamp<size_t>(n_val, 1, data.size() - 1);

    std::vector<LabeledExample> val, train;
    val.reserve(n_val);
    train.reserve(data.size() - n_val);
    for (size_t i = 0; i < n_val; ++i) val.push_back(data[order[i]]);
    for (size_t i = n_val; i < order.size(); ++i) train.push_back(data[order[i]]);
    return {std::move(train), std::move(val)};
}

}  // namespace sentipipe
