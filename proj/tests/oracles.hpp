// Independent reference implementations used by the tests. They share no code
// with the library beyond plain data types: naive loops, std::vector, <cmath>.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "fsb/embedding_store.hpp"

namespace oracle {

using Row = std::vector<double>;

inline double dist_sq(const Row& a, const Row& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

inline Row unit(Row v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
  return v;
}

// mode: 0 = raw, 1 = unit length, 2 = centered on the support mean then unit length.
inline Row apply(const Row& v, int mode, const Row& center) {
  if (mode == 0) return v;
  Row out = v;
  if (mode == 2)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= center[i];
  return unit(out);
}

/// Nearest-centroid labels for each query; support[k] holds class k's rows and
/// ids[k] its label. Ties go to the smaller id.
inline std::vector<std::uint32_t> nearest_centroid(const std::vector<std::vector<Row>>& support,
                                                   const std::vector<std::uint32_t>& ids,
                                                   const std::vector<Row>& queries, int mode) {
  const std::size_t dim = support[0][0].size();
  Row center(dim, 0.0);
  std::size_t total = 0;
  for (const auto& cls : support)
    for (const auto& r : cls) {
      for (std::size_t i = 0; i < dim; ++i) center[i] += r[i];
      ++total;
    }
  for (double& c : center) c /= static_cast<double>(total);

  std::vector<Row> protos;
  for (const auto& cls : support) {
    Row p(dim, 0.0);
    for (const auto& r : cls) {
      const Row t = apply(r, mode, center);
      for (std::size_t i = 0; i < dim; ++i) p[i] += t[i];
    }
    for (double& x : p) x /= static_cast<double>(cls.size());
    protos.push_back(p);
  }
  std::vector<std::uint32_t> out;
  for (const auto& q : queries) {
    const Row t = apply(q, mode, center);
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t best_id = 0;
    for (std::size_t k = 0; k < protos.size(); ++k) {
      const double d = dist_sq(t, protos[k]);
      if (d < best || (d == best && ids[k] < best_id)) {
        best = d;
        best_id = ids[k];
      }
    }
    out.push_back(best_id);
  }
  return out;
}

/// Student-t density.
inline double t_pdf(double x, double df) {
  const double logc = std::lgamma((df + 1) / 2) - std::lgamma(df / 2) -
                      0.5 * std::log(df * std::numbers::pi);
  return std::exp(logc - (df + 1) / 2 * std::log1p(x * x / df));
}

/// Adaptive Simpson integration of f over [a, b].
inline double simpson(const std::function<double(double)>& f, double a, double b, double eps,
                      int depth = 50) {
  std::function<double(double, double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double flo, double fmid, double fhi, double whole, int d) {
        const double mid = (lo + hi) / 2;
        const double lm = (lo + mid) / 2, rm = (mid + hi) / 2;
        const double flm = f(lm), frm = f(rm);
        const double left = (mid - lo) / 6 * (flo + 4 * flm + fmid);
        const double right = (hi - mid) / 6 * (fmid + 4 * frm + fhi);
        if (d <= 0 || std::fabs(left + right - whole) <= 15 * eps)
          return left + right + (left + right - whole) / 15;
        return rec(lo, mid, flo, flm, fmid, left, d - 1) +
               rec(mid, hi, fmid, frm, fhi, right, d - 1);
      };
  const double fa = f(a), fb = f(b), fm = f((a + b) / 2);
  return rec(a, b, fa, fm, fb, (b - a) / 6 * (fa + 4 * fm + fb), depth);
}

/// Quantile by integrating the density from 0 and solving with bisection.
inline double t_quantile(double df, double p) {
  auto cdf = [df](double x) {
    return 0.5 + simpson([df](double t) { return t_pdf(t, df); }, 0.0, x, 1e-14);
  };
  double lo = 0.0, hi = 50.0;
  for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
    const double mid = (lo + hi) / 2;
    (cdf(mid) < p ? lo : hi) = mid;
  }
  return (lo + hi) / 2;
}

/// Sample mean and n-1 standard deviation by the two-pass textbook formula.
inline std::pair<double, double> mean_sd(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

/// Small labelled dataset with `counts[c]` random rows for class c.
inline fsb::EmbeddingDataset random_dataset(const std::vector<int>& counts, int dim,
                                            std::uint64_t seed,
                                            const std::string& name = "toy") {
  std::mt19937_64 gen(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  fsb::EmbeddingDataset ds;
  ds.dataset_name = name;
  ds.backbone_name = "test";
  ds.preprocess = "none";
  int total = 0;
  for (int c : counts) total += c;
  ds.vectors.resize(total, dim);
  int row = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    ds.class_names.push_back("class" + std::to_string(c));
    for (int i = 0; i < counts[c]; ++i, ++row) {
      ds.labels.push_back(static_cast<std::uint32_t>(c));
      for (int d = 0; d < dim; ++d) ds.vectors(row, d) = normal(gen) + static_cast<float>(c);
    }
  }
  return ds;
}

}  // namespace oracle
