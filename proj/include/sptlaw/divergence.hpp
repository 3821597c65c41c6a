#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sptlaw/errors.hpp"

namespace sptlaw {

/// Sparse hashed n-gram counts for one corpus.
struct NGramProfile {
  int n = 1;
  std::uint64_t bins = 1ULL << 20;
  std::uint64_t hash_seed = 0;
  std::map<std::uint64_t, std::uint64_t> counts;  // bin -> count
  std::uint64_t total = 0;

  /// Bin-wise addition; profiles built over shards merge exactly.
  void merge(const NGramProfile& other);
};

/// Hashes every n-gram of the token-id sequence (seeded 64-bit
/// multiply-xorshift over the tuple) into [0, bins). Empty input or fewer
/// than n tokens yields an empty profile.
NGramProfile profile(std::span<const std::uint64_t> tokens, int n,
                     std::uint64_t bins = 1ULL << 20,
                     std::uint64_t hash_seed = 0);

/// Jensen-Shannon divergence in bits over the normalized counts, with the
/// 0*log0 = 0 convention. Bounded by [0, 1]; throws MismatchedProfiles on
/// differing n/bins/seed and EmptyProfile on a zero total.
double jsd_bits(const NGramProfile& p, const NGramProfile& q);

struct EmbeddingSet {
  std::vector<std::vector<double>> vectors;
};

/// Classifier two-sample test: stratified k-fold logistic regression
/// (full-batch gradient descent, 500 iterations, step 0.1, L2 1e-4) and
/// the ROC AUC of pooled out-of-fold margins, ties counted 1/2
/// (Mann-Whitney). 0.5 means indistinguishable, 1.0 perfectly separable.
/// Fold assignment is per-class under the seed, so swapping the two sets
/// maps AUC to exactly 1 - AUC.
double c2st_auc(const EmbeddingSet& a, const EmbeddingSet& b, int folds = 5,
                std::uint64_t seed = 0);

/// Token ids from whitespace-separated integers.
std::vector<std::uint64_t> tokens_from_id_text(const std::string& text);

/// Byte-level fallback tokenizer (version bytes-v1): each input byte is
/// its own token id in [0, 255].
std::vector<std::uint64_t> tokens_from_bytes(const std::string& bytes);

/// CSV rows `label,x1,x2,...` with label A or B; an optional header row
/// starting with `label` is skipped. Returns the two sets in label order.
std::pair<EmbeddingSet, EmbeddingSet> read_labeled_embeddings(
    const std::string& bytes);

}  // namespace sptlaw
