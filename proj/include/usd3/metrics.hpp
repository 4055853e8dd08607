#pragma once

// Sample-quality metrics: n-gram Hellinger distance, n-gram outlier fraction,
// pairwise diverse edit distance, and the parroting ratio.

#include <vector>

#include "usd3/core.hpp"

namespace usd3 {

// Hellinger distance (1/sqrt(2))*||sqrt(p)-sqrt(q)||_2 between the empirical
// distributions of length-n contiguous windows, over their union support.
double ngram_hellinger(const std::vector<Sequence>& generated,
                       const std::vector<Sequence>& reference, int n);

// Fraction of generated n-gram occurrences whose tuple never appears in the
// training set.
double ngram_outliers(const std::vector<Sequence>& generated,
                      const std::vector<Sequence>& train, int n);

struct EditDistStats {
  double mean = 0.0;
  double stddev = 0.0;  // population std over the pair list
};

// Mean/std of Levenshtein distance / D over all unordered sample pairs.
EditDistStats diverse_edit_distance(const std::vector<Sequence>& samples);

int levenshtein(const Sequence& a, const Sequence& b);

// Mean over generated samples of the minimum normalized edit distance to any
// reference sequence; 0 iff every sample parrots some reference verbatim.
double mean_min_edit_distance(const std::vector<Sequence>& generated,
                              const std::vector<Sequence>& reference);

// (1/(dist_tr+dist_ts)) * (dist_tr/dist_ts); higher = less parroting.
// dist_ts = 0 returns +infinity.
double parroting_ratio(double dist_tr, double dist_ts);

}  // namespace usd3
