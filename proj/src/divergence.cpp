#include "sptlaw/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sptlaw {

namespace {

using u64 = std::uint64_t;

u64 mix64(u64 h, u64 v) {
  h ^= v;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  h *= 0xc4ceb9fe1a85ec53ULL;
  h ^= h >> 29;
  return h;
}

u64 splitmix64(u64& state) {
  state += 0x9e3779b97f4a7c15ULL;
  u64 z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

void NGramProfile::merge(const NGramProfile& other) {
  if (n != other.n || bins != other.bins || hash_seed != other.hash_seed) {
    throw MismatchedProfiles("cannot merge profiles with different n/bins/seed");
  }
  for (const auto& [bin, count] : other.counts) counts[bin] += count;
  total += other.total;
}

NGramProfile profile(std::span<const u64> tokens, int n, u64 bins,
                     u64 hash_seed) {
  if (n < 1 || n > 3) throw DomainError("n-gram order must be 1, 2, or 3");
  if (bins == 0) throw DomainError("bin count must be positive");
  NGramProfile p;
  p.n = n;
  p.bins = bins;
  p.hash_seed = hash_seed;
  if (tokens.size() < static_cast<std::size_t>(n)) return p;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    u64 h = mix64(0x5bd1e995UL, hash_seed);
    for (int j = 0; j < n; ++j) h = mix64(h, tokens[i + j]);
    ++p.counts[h % bins];
    ++p.total;
  }
  return p;
}

double jsd_bits(const NGramProfile& p, const NGramProfile& q) {
  if (p.n != q.n || p.bins != q.bins || p.hash_seed != q.hash_seed) {
    throw MismatchedProfiles("profiles differ in n, bins, or hash seed");
  }
  if (p.total == 0 || q.total == 0) {
    throw EmptyProfile("cannot compare an empty profile");
  }
  const double pt = static_cast<double>(p.total);
  const double qt = static_cast<double>(q.total);

  double sum = 0.0;
  auto it_p = p.counts.begin();
  auto it_q = q.counts.begin();
  while (it_p != p.counts.end() || it_q != q.counts.end()) {
    double pi = 0.0, qi = 0.0;
    if (it_q == q.counts.end() ||
        (it_p != p.counts.end() && it_p->first < it_q->first)) {
      pi = static_cast<double>(it_p->second) / pt;
      ++it_p;
    } else if (it_p == p.counts.end() || it_q->first < it_p->first) {
      qi = static_cast<double>(it_q->second) / qt;
      ++it_q;
    } else {
      pi = static_cast<double>(it_p->second) / pt;
      qi = static_cast<double>(it_q->second) / qt;
      ++it_p;
      ++it_q;
    }
    const double mi = 0.5 * (pi + qi);
    if (pi > 0.0) sum += 0.5 * pi * std::log2(pi / mi);
    if (qi > 0.0) sum += 0.5 * qi * std::log2(qi / mi);
  }
  return sum;
}

double c2st_auc(const EmbeddingSet& a, const EmbeddingSet& b, int folds,
                std::uint64_t seed) {
  if (folds < 2) throw DomainError("c2st needs at least 2 folds");
  if (a.vectors.empty() || b.vectors.empty()) {
    throw TooFewSamples("both embedding sets must be nonempty");
  }
  const std::size_t dim = a.vectors.front().size();
  if (dim == 0) throw DimensionMismatch("embeddings must be nonempty vectors");
  for (const auto* set : {&a, &b}) {
    for (const auto& v : set->vectors) {
      if (v.size() != dim) {
        throw DimensionMismatch("all embedding vectors must share one dimension");
      }
    }
  }
  const std::size_t na = a.vectors.size();
  const std::size_t nb = b.vectors.size();
  if (na < static_cast<std::size_t>(folds) || nb < static_cast<std::size_t>(folds)) {
    throw TooFewSamples("every fold needs at least one sample of each class");
  }

  // Per-class permutations driven by the same seed: the fold of a vector
  // depends only on its class size and position, so swapping the sets
  // swaps scores symmetrically.
  auto fold_of = [&](std::size_t count) {
    std::vector<std::size_t> perm(count);
    for (std::size_t i = 0; i < count; ++i) perm[i] = i;
    u64 state = seed;
    for (std::size_t i = count; i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(splitmix64(state) % i);
      std::swap(perm[i - 1], perm[j]);
    }
    std::vector<int> fold(count);
    for (std::size_t k = 0; k < count; ++k) {
      fold[perm[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));
    }
    return fold;
  };
  const std::vector<int> fold_a = fold_of(na);
  const std::vector<int> fold_b = fold_of(nb);

  struct Scored {
    double score;
    int label;  // 0 = a, 1 = b
  };
  std::vector<Scored> pooled;
  pooled.reserve(na + nb);

  constexpr int kIters = 500;
  constexpr double kStep = 0.1;
  constexpr double kL2 = 1e-4;

  for (int f = 0; f < folds; ++f) {
    std::vector<const std::vector<double>*> train_x;
    std::vector<int> train_y;
    for (std::size_t i = 0; i < na; ++i) {
      if (fold_a[i] != f) {
        train_x.push_back(&a.vectors[i]);
        train_y.push_back(0);
      }
    }
    for (std::size_t i = 0; i < nb; ++i) {
      if (fold_b[i] != f) {
        train_x.push_back(&b.vectors[i]);
        train_y.push_back(1);
      }
    }
    const std::size_t m = train_x.size();

    // Standardize on the training portion.
    std::vector<double> mean(dim, 0.0), inv_std(dim, 1.0);
    for (const auto* x : train_x) {
      for (std::size_t d = 0; d < dim; ++d) mean[d] += (*x)[d];
    }
    for (std::size_t d = 0; d < dim; ++d) mean[d] /= static_cast<double>(m);
    std::vector<double> var(dim, 0.0);
    for (const auto* x : train_x) {
      for (std::size_t d = 0; d < dim; ++d) {
        const double c = (*x)[d] - mean[d];
        var[d] += c * c;
      }
    }
    for (std::size_t d = 0; d < dim; ++d) {
      const double s = std::sqrt(var[d] / static_cast<double>(m));
      inv_std[d] = s > 1e-12 ? 1.0 / s : 1.0;
    }

    std::vector<double> w(dim, 0.0);
    double bias = 0.0;
    std::vector<double> grad(dim);
    for (int it = 0; it < kIters; ++it) {
      std::fill(grad.begin(), grad.end(), 0.0);
      double grad_b = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const auto& x = *train_x[i];
        double z = bias;
        for (std::size_t d = 0; d < dim; ++d) {
          z += w[d] * (x[d] - mean[d]) * inv_std[d];
        }
        const double err = sigmoid(z) - static_cast<double>(train_y[i]);
        for (std::size_t d = 0; d < dim; ++d) {
          grad[d] += err * (x[d] - mean[d]) * inv_std[d];
        }
        grad_b += err;
      }
      const double inv_m = 1.0 / static_cast<double>(m);
      for (std::size_t d = 0; d < dim; ++d) {
        w[d] -= kStep * (grad[d] * inv_m + kL2 * w[d]);
      }
      bias -= kStep * grad_b * inv_m;
    }

    auto margin = [&](const std::vector<double>& x) {
      double z = bias;
      for (std::size_t d = 0; d < dim; ++d) {
        z += w[d] * (x[d] - mean[d]) * inv_std[d];
      }
      return z;
    };
    for (std::size_t i = 0; i < na; ++i) {
      if (fold_a[i] == f) pooled.push_back({margin(a.vectors[i]), 0});
    }
    for (std::size_t i = 0; i < nb; ++i) {
      if (fold_b[i] == f) pooled.push_back({margin(b.vectors[i]), 1});
    }
  }

  // Mann-Whitney AUC with average ranks over tie groups.
  std::sort(pooled.begin(), pooled.end(),
            [](const Scored& x, const Scored& y) { return x.score < y.score; });
  double rank_sum_b = 0.0;
  std::size_t i = 0;
  while (i < pooled.size()) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j].score == pooled[i].score) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k) {
      if (pooled[k].label == 1) rank_sum_b += avg_rank;
    }
    i = j;
  }
  const double nbd = static_cast<double>(nb);
  const double nad = static_cast<double>(na);
  return (rank_sum_b - nbd * (nbd + 1.0) / 2.0) / (nad * nbd);
}

std::vector<u64> tokens_from_id_text(const std::string& text) {
  std::istringstream in(text);
  std::vector<u64> out;
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t pos = 0;
      const u64 v = std::stoull(tok, &pos);
      if (pos != tok.size()) throw FormatError("bad token id: " + tok);
      out.push_back(v);
    } catch (const std::invalid_argument&) {
      throw FormatError("bad token id: " + tok);
    } catch (const std::out_of_range&) {
      throw FormatError("token id out of range: " + tok);
    }
  }
  return out;
}

std::vector<u64> tokens_from_bytes(const std::string& bytes) {
  std::vector<u64> out;
  out.reserve(bytes.size());
  for (unsigned char c : bytes) out.push_back(static_cast<u64>(c));
  return out;
}

std::pair<EmbeddingSet, EmbeddingSet> read_labeled_embeddings(
    const std::string& bytes) {
  std::istringstream in(bytes);
  std::string line;
  EmbeddingSet a, b;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string label;
    if (!std::getline(row, label, ',')) continue;
    while (!label.empty() && std::isspace(static_cast<unsigned char>(label.back()))) label.pop_back();
    while (!label.empty() && std::isspace(static_cast<unsigned char>(label.front()))) label.erase(label.begin());
    if (line_no == 1 && (label == "label" || label == "Label")) continue;
    if (label != "A" && label != "B" && label != "a" && label != "b") {
      throw FormatError("embedding label must be A or B on line " +
                        std::to_string(line_no));
    }
    std::vector<double> vec;
    std::string field;
    while (std::getline(row, field, ',')) {
      try {
        std::size_t pos = 0;
        vec.push_back(std::stod(field, &pos));
      } catch (const std::exception&) {
        throw FormatError("bad embedding value on line " + std::to_string(line_no));
      }
    }
    if (vec.empty()) {
      throw FormatError("embedding row has no values on line " +
                        std::to_string(line_no));
    }
    if (dim == 0) dim = vec.size();
    if (vec.size() != dim) {
      throw DimensionMismatch("embedding dimension changed on line " +
                              std::to_string(line_no));
    }
    if (label == "A" || label == "a") {
      a.vectors.push_back(std::move(vec));
    } else {
      b.vectors.push_back(std::move(vec));
    }
  }
  return {std::move(a), std::move(b)};
}

}  // namespace sptlaw
