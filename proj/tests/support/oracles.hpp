#pragma once

// Independent reimplementations used as test oracles. They share no code with
// the library beyond the public data types.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "qexplore/efg.hpp"
#include "qexplore/features.hpp"
#include "qexplore/nn.hpp"

namespace oracle {

inline std::filesystem::path data_dir() { return QEXPLORE_TEST_DATA_DIR; }

// Straight-line forward pass. Parameter blocks are read in checkpoint order:
// per width (conv weights [f][row][tap], conv bias), fcr w/b, fcd w/b,
// trunk w1/b1, w2/b2, w3/b3; dense weights are [out][in].
inline double reference_q(const qexplore::Architecture& a, std::span<const double> p,
                          const qexplore::FeatureBundle& b) {
  std::size_t at = 0;
  auto next = [&]() { return p[at++]; };
  const int L = a.embedding_dim, N = a.max_words, F = a.filters;

  std::vector<double> concat;
  for (int w : a.widths) {
    std::vector<double> kernel(static_cast<std::size_t>(F * L * w));
    for (double& k : kernel) k = next();
    std::vector<double> bias(static_cast<std::size_t>(F));
    for (double& x : bias) x = next();
    for (int f = 0; f < F; ++f) {
      double best = -INFINITY;
      for (int pos = 0; pos + w <= N; ++pos) {
        double z = bias[static_cast<std::size_t>(f)];
        for (int r = 0; r < L; ++r) {
          for (int j = 0; j < w; ++j) {
            z += kernel[static_cast<std::size_t>((f * L + r) * w + j)] *
                 b.txc[static_cast<std::size_t>(r * N + pos + j)];
          }
        }
        best = std::max(best, z);
      }
      concat.push_back(std::max(best, 0.0));
    }
  }

  const double fcr_in = std::log(1.0 + static_cast<double>(b.fcr));
  std::vector<double> fw(static_cast<std::size_t>(a.fcr_hidden));
  for (double& x : fw) x = next();
  for (int j = 0; j < a.fcr_hidden; ++j) {
    concat.push_back(std::max(0.0, next() + fw[static_cast<std::size_t>(j)] * fcr_in));
  }

  auto dense_wb = [&](const std::vector<double>& in, int out, bool rectify) {
    const std::size_t nw = in.size() * static_cast<std::size_t>(out);
    std::vector<double> w(p.begin() + static_cast<std::ptrdiff_t>(at),
                          p.begin() + static_cast<std::ptrdiff_t>(at + nw));
    at += nw;
    std::vector<double> result;
    for (int j = 0; j < out; ++j) {
      double z = p[at + static_cast<std::size_t>(j)];
      for (std::size_t i = 0; i < in.size(); ++i) z += w[static_cast<std::size_t>(j) * in.size() + i] * in[i];
      result.push_back(rectify ? std::max(0.0, z) : z);
    }
    at += static_cast<std::size_t>(out);
    return result;
  };

  std::vector<double> fcd_in;
  for (std::uint32_t c : b.fcd) fcd_in.push_back(std::log(1.0 + static_cast<double>(c)));
  for (double v : dense_wb(fcd_in, a.fcd_hidden, true)) concat.push_back(v);

  auto h1 = dense_wb(concat, a.hidden1, true);
  auto h2 = dense_wb(h1, a.hidden2, true);
  return dense_wb(h2, 1, false)[0];
}

// Histogram of counts with every count >= V-1 in the last bucket.
inline std::vector<std::uint32_t> clamped_histogram(const std::vector<std::uint64_t>& counts,
                                                    int V) {
  std::vector<std::uint32_t> h(static_cast<std::size_t>(V), 0);
  for (std::uint64_t c : counts) {
    std::size_t bucket = static_cast<std::size_t>(V - 1);
    if (c < static_cast<std::uint64_t>(V - 1)) bucket = static_cast<std::size_t>(c);
    ++h[bucket];
  }
  return h;
}

// Brute-force generation sets over an explicit class-level edge list. A
// class's children are all classes of pages produced by any of its members.
struct ClassGraph {
  std::map<int, std::set<int>> children;

  std::vector<std::set<int>> generations(int source, int K) const {
    std::vector<std::set<int>> out;
    std::set<int> seen{source};
    std::set<int> frontier{source};
    for (int m = 1; m <= K; ++m) {
      std::set<int> next;
      for (int c : frontier) {
        auto it = children.find(c);
        if (it == children.end()) continue;
        for (int child : it->second) {
          if (!seen.count(child)) next.insert(child);
        }
      }
      seen.insert(next.begin(), next.end());
      out.push_back(next);
      frontier = next;
    }
    return out;
  }
};

// Scalar Adam on one parameter, written out from the textbook update.
struct ScalarAdam {
  double lr = 1e-4, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double m = 0.0, v = 0.0;
  int t = 0;

  double step(double x, double g) {
    ++t;
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    const double mhat = m / (1.0 - std::pow(b1, t));
    const double vhat = v / (1.0 - std::pow(b2, t));
    return x - lr * mhat / (std::sqrt(vhat) + eps);
  }
};

// Regularized upper incomplete gamma Q(s, x) for the chi-square survival
// function, by series / continued fraction.
inline double gamma_q(double s, double x) {
  if (x <= 0.0) return 1.0;
  const double lg = std::lgamma(s);
  if (x < s + 1.0) {
    double sum = 1.0 / s, term = sum;
    for (int n = 1; n < 500; ++n) {
      term *= x / (s + n);
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * 1e-15) break;
    }
    return 1.0 - sum * std::exp(-x + s * std::log(x) - lg);
  }
  double b = x + 1.0 - s, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::fabs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + s * std::log(x) - lg) * h;
}

inline double chi_square_p(const std::vector<std::size_t>& observed) {
  double total = 0.0;
  for (std::size_t o : observed) total += static_cast<double>(o);
  const double expected = total / static_cast<double>(observed.size());
  double stat = 0.0;
  for (std::size_t o : observed) {
    const double d = static_cast<double>(o) - expected;
    stat += d * d / expected;
  }
  return gamma_q(0.5 * static_cast<double>(observed.size() - 1), 0.5 * stat);
}

// Two-sample Kolmogorov-Smirnov test; asymptotic p-value.
inline double ks_p_value(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double en = std::sqrt(na * nb / (na + nb));
  const double lambda = (en + 0.12 + 0.11 / en) * d;
  if (lambda < 0.2) return 1.0;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  }
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace oracle
