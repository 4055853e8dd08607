#include "usd3/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

namespace usd3 {

namespace {

// Empirical distribution over length-n windows; every sequence must be long
// enough to contribute at least one window.
std::map<Sequence, double> ngram_hist(const std::vector<Sequence>& seqs, int n) {
  if (seqs.empty()) throw std::invalid_argument("ngram metrics: empty input set");
  std::map<Sequence, double> hist;
  double total = 0.0;
  for (const Sequence& s : seqs) {
    if (static_cast<int>(s.size()) < n) throw std::invalid_argument("ngram metrics: n exceeds D");
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= s.size(); ++i) {
      Sequence gram(s.begin() + static_cast<std::ptrdiff_t>(i),
                    s.begin() + static_cast<std::ptrdiff_t>(i + static_cast<std::size_t>(n)));
      hist[gram] += 1.0;
      total += 1.0;
    }
  }
  for (auto& [gram, v] : hist) v /= total;
  return hist;
}

}  // namespace

double ngram_hellinger(const std::vector<Sequence>& generated,
                       const std::vector<Sequence>& reference, int n) {
  if (n < 1) throw std::invalid_argument("ngram_hellinger: n >= 1");
  const auto p = ngram_hist(generated, n);
  const auto q = ngram_hist(reference, n);
  std::set<Sequence> support;
  for (const auto& [gram, v] : p) support.insert(gram);
  for (const auto& [gram, v] : q) support.insert(gram);
  double acc = 0.0;
  for (const Sequence& gram : support) {
    const auto ip = p.find(gram);
    const auto iq = q.find(gram);
    const double sp = std::sqrt(ip == p.end() ? 0.0 : ip->second);
    const double sq = std::sqrt(iq == q.end() ? 0.0 : iq->second);
    acc += (sp - sq) * (sp - sq);
  }
  return std::sqrt(acc) / std::sqrt(2.0);
}

double ngram_outliers(const std::vector<Sequence>& generated,
                      const std::vector<Sequence>& train, int n) {
  if (n < 1) throw std::invalid_argument("ngram_outliers: n >= 1");
  const auto seen = ngram_hist(train, n);
  if (generated.empty()) throw std::invalid_argument("ngram_outliers: empty generated set");
  double total = 0.0;
  double novel = 0.0;
  for (const Sequence& s : generated) {
    if (static_cast<int>(s.size()) < n) throw std::invalid_argument("ngram_outliers: n exceeds D");
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= s.size(); ++i) {
      Sequence gram(s.begin() + static_cast<std::ptrdiff_t>(i),
                    s.begin() + static_cast<std::ptrdiff_t>(i + static_cast<std::size_t>(n)));
      total += 1.0;
      if (seen.find(gram) == seen.end()) novel += 1.0;
    }
  }
  return novel / total;
}

int levenshtein(const Sequence& a, const Sequence& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<int> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

EditDistStats diverse_edit_distance(const std::vector<Sequence>& samples) {
  if (samples.size() < 2) throw std::invalid_argument("diverse_edit_distance: need >= 2 samples");
  const std::size_t D = samples[0].size();
  for (const Sequence& s : samples)
    if (s.size() != D) throw std::invalid_argument("diverse_edit_distance: unequal lengths");
  double sum = 0.0, sum2 = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      const double d = static_cast<double>(levenshtein(samples[i], samples[j])) /
                       static_cast<double>(D);
      sum += d;
      sum2 += d * d;
      ++pairs;
    }
  }
  EditDistStats out;
  out.mean = sum / static_cast<double>(pairs);
  const double var = std::max(0.0, sum2 / static_cast<double>(pairs) - out.mean * out.mean);
  out.stddev = std::sqrt(var);
  return out;
}

double mean_min_edit_distance(const std::vector<Sequence>& generated,
                              const std::vector<Sequence>& reference) {
  if (generated.empty() || reference.empty())
    throw std::invalid_argument("mean_min_edit_distance: empty input set");
  double acc = 0.0;
  for (const Sequence& g : generated) {
    double best = std::numeric_limits<double>::infinity();
    for (const Sequence& r : reference) {
      const double d = static_cast<double>(levenshtein(g, r)) / static_cast<double>(g.size());
      best = std::min(best, d);
      if (best == 0.0) break;
    }
    acc += best;
  }
  return acc / static_cast<double>(generated.size());
}

double parroting_ratio(double dist_tr, double dist_ts) {
  if (dist_tr < 0.0 || dist_ts < 0.0) throw std::invalid_argument("parroting_ratio: negative distance");
  if (dist_ts == 0.0) return std::numeric_limits<double>::infinity();
  return (1.0 / (dist_tr + dist_ts)) * (dist_tr / dist_ts);
}

}  // namespace usd3
