#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <span>

#include <boost/math/distributions/students_t.hpp>

#include "hos/core.hpp"

namespace hos {

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw invalid_input("mean of an empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Unbiased sample variance (n - 1 denominator).
inline double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw invalid_input("variance needs at least two observations");
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

inline double standard_error(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  return std::sqrt(sample_variance(xs) / static_cast<double>(xs.size()));
}

struct WelchResult {
  double t{0.0};
  double df{0.0};
  double p{1.0};          // two-sided
  double p_greater{0.5};  // one-sided, alternative mean(a) > mean(b)
};

// Welch's unequal-variance two-sample t-test. When both samples have zero variance the
// test degenerates: equal means give t = 0, p = 1; different means give t = +-inf, p = 0.
inline WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw invalid_input("welch_t_test needs at least two observations per sample");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = mean(a), mb = mean(b);
  const double va = sample_variance(a) / na, vb = sample_variance(b) / nb;
  const double se2 = va + vb;

  WelchResult r;
  r.df = na + nb - 2.0;
  if (se2 == 0.0) {
    if (ma == mb) return r;
    const bool a_higher = ma > mb;
    r.t = a_higher ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    r.p = 0.0;
    r.p_greater = a_higher ? 0.0 : 1.0;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(se2);
  r.df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  const boost::math::students_t dist(r.df);
  r.p_greater = boost::math::cdf(boost::math::complement(dist, r.t));
  r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  if (r.p > 1.0) r.p = 1.0;
  return r;
}

}  // namespace hos
