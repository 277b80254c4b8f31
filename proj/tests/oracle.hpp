#pragma once

// Independent reference computations used to check the library. Everything
// here is written directly from the defining formulas, without calling into
// active_eval, so a shared bug cannot make both sides agree.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

namespace oracle {

inline double neg_log(double p, double floor = 1e-12) { return -std::log(p < floor ? floor : p); }

inline double cross_entropy(const std::vector<double>& pi, const std::vector<double>& f,
                            double floor = 1e-12) {
  double s = 0.0;
  for (std::size_t c = 0; c < pi.size(); ++c) s += pi[c] * neg_log(f[c], floor);
  return s;
}

inline double entropy(const std::vector<double>& p) {
  double s = 0.0;
  for (double x : p) {
    if (x > 0.0) s -= x * std::log(x);
  }
  return s;
}

inline double mean(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// Water-filling form of the floored proposal: find the set of floored entries
// by scanning scores in ascending order, then scale the rest.
inline std::vector<double> clipped_proposal(const std::vector<double>& scores, double alpha) {
  const std::size_t R = scores.size();
  const double floor = alpha / static_cast<double>(R);
  const double total = std::accumulate(scores.begin(), scores.end(), 0.0);
  if (total == 0.0 || alpha >= 1.0) return std::vector<double>(R, 1.0 / static_cast<double>(R));
  std::vector<std::size_t> order(R);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  // k = number of floored entries; pick the smallest k that is self-consistent.
  double rest = total;
  for (std::size_t k = 0; k <= R; ++k) {
    const double scale = (1.0 - floor * static_cast<double>(k)) / rest;
    const bool next_ok = k == R || scores[order[k]] * scale >= floor;
    if (next_ok) {
      std::vector<double> q(R, floor);
      for (std::size_t j = k; j < R; ++j) q[order[j]] = scores[order[j]] * scale;
      return q;
    }
    rest -= scores[order[k]];
  }
  return std::vector<double>(R, 1.0 / static_cast<double>(R));
}

inline double lure_weight(double m, double N, double M, double q) {
  if (N == M) return 1.0;
  return 1.0 + (N - M) / (N - m) * (1.0 / ((N - m + 1.0) * q) - 1.0);
}

// Exact expectation of the LURE estimate: enumerate every ordered sequence of
// M distinct indices with its probability under `proposal`, which maps the
// scores of the remaining indices to their probabilities.
inline double lure_expectation(
    const std::vector<double>& scores, const std::vector<double>& losses, std::size_t M,
    const std::function<std::vector<double>(const std::vector<double>&)>& proposal) {
  const std::size_t N = scores.size();
  double expectation = 0.0;
  std::vector<std::size_t> remaining(N);
  std::iota(remaining.begin(), remaining.end(), 0);
  std::function<void(std::vector<std::size_t>&, double, double, std::size_t)> walk =
      [&](std::vector<std::size_t>& rem, double prob, double sum, std::size_t m) {
        if (m > M) {
          expectation += prob * sum / static_cast<double>(M);
          return;
        }
        std::vector<double> s;
        for (auto i : rem) s.push_back(scores[i]);
        const auto q = proposal(s);
        for (std::size_t j = 0; j < rem.size(); ++j) {
          const std::size_t i = rem[j];
          const double v = lure_weight(static_cast<double>(m), static_cast<double>(N),
                                       static_cast<double>(M), q[j]);
          std::vector<std::size_t> next = rem;
          next.erase(next.begin() + static_cast<std::ptrdiff_t>(j));
          walk(next, prob * q[j], sum + v * losses[i], m + 1);
        }
      };
  walk(remaining, 1.0, 0.0, 1);
  return expectation;
}

inline double median(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace oracle
