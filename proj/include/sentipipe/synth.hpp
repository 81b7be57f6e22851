#pragma once

#include <string>
#include <vector>

#include "sentipipe/textpipe.hpp"

namespace sentipipe {

// Desk-scale multi-domain sentiment corpus. All domains share one polarity
// lexicon; every non-teacher domain additionally owns synonym words that never
// occur in the teacher domain, and each polarity token is swapped for its
// domain synonym with probability synonym_rate. A model trained only on the
// teacher domain therefore never sees the domain words, while the mixed
// unlabeled corpus contains shared and domain words side by side.
struct SynthSpec {
    int domains = 3;
    int teacher_domain = 0;
    int teacher_labeled = 2000;   // labeled docs in the teacher domain
    int unlabeled_total = 20000;  // mixed unlabeled docs, domains round-robin
    int test_per_domain = 1000;
    int polarity_words_per_class = 12;
    int filler_words = 30;
    double synonym_rate = 0.5;  // rho
    int min_doc_len = 4;
    int max_doc_len = 10;
    double label_noise = 0.0;      // applied to the labeled teacher set only
    double polarity_rate = 0.35;   // P(token comes from the label's lexicon)
    double cross_rate = 0.10;      // P(token comes from another class's lexicon)
    uint64_t seed = 1;
};

struct SynthFiles {
    std::string teacher_train;            // labeled JSONL, teacher domain
    std::string unlabeled;                // unlabeled JSONL, all domains mixed
    std::vector<std::string> test_files;  // labeled JSONL per domain, index = domain
    std::string manifest;
};

// Writes the file set into out_dir; byte-identical for identical specs.
SynthFiles synth_gen(const SynthSpec& spec, const std::string& out_dir);

}  // namespace sentipipe
