#include "hlx/verify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hlx/rng.hpp"

namespace hlx {

std::vector<Matrix> cumulative_products(const ModelParameters& m) {
  std::vector<Matrix> c;
  c.reserve(m.weights.size());
  c.push_back(m.weights[0]);
  for (std::size_t i = 1; i < m.weights.size(); ++i)
    c.push_back(matmul(m.weights[i], c.back()));
  return c;
}

ModelParameters theoretical_extraction(const ModelParameters& victim,
                                       int anchor) {
  const int k = victim.arch.hidden_layers();
  const auto c = cumulative_products(victim);

  // Per-neuron divisors |C^{(i)}_{j,anchor}|.
  std::vector<Vec> div(k + 1);
  for (int i = 0; i <= k; ++i) {
    div[i].resize(c[i].rows);
    for (std::size_t j = 0; j < c[i].rows; ++j) {
      const double v = std::abs(c[i].at(j, anchor));
      if (v <= kZeroThreshold)
        throw std::runtime_error(
            "theoretical_extraction: anchor column degenerate");
      div[i][j] = v;
    }
  }

  ModelParameters out;
  out.arch = victim.arch;
  out.weights.resize(k + 1);
  out.biases.resize(k + 1);
  for (int i = 0; i <= k; ++i) {
    const Matrix& w = victim.weights[i];
    Matrix scaled(w.rows, w.cols);
    for (std::size_t j = 0; j < w.rows; ++j)
      for (std::size_t v = 0; v < w.cols; ++v) {
        const double up = i == 0 ? 1.0 : div[i - 1][v];
        scaled.at(j, v) = w.at(j, v) * up / div[i][j];
      }
    out.weights[i] = std::move(scaled);
    out.biases[i].resize(victim.biases[i].size());
    for (std::size_t j = 0; j < victim.biases[i].size(); ++j)
      out.biases[i][j] = victim.biases[i][j] / div[i][j];
  }
  return out;
}

double closed_form_scale(const ModelParameters& victim, int anchor) {
  const auto c = cumulative_products(victim);
  const double v = std::abs(c.back().at(0, anchor));
  if (v <= kZeroThreshold)
    throw std::runtime_error("closed_form_scale: degenerate anchor column");
  return 1.0 / v;
}

namespace {

double abs_cosine(std::span<const double> a, std::span<const double> b) {
  const double na = two_norm(a), nb = two_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::abs(dot(a, b)) / (na * nb);
}

}  // namespace

Alignment align(const ModelParameters& victim,
                const ModelParameters& extracted, int anchor) {
  if (!(victim.arch == extracted.arch))
    throw std::invalid_argument("align: architecture mismatch");
  const int k = victim.arch.hidden_layers();

  Alignment out;
  out.perm.resize(k);

  const auto cv = cumulative_products(victim);
  const auto ce = cumulative_products(extracted);

  for (int i = 0; i < k; ++i) {
    const std::size_t d = cv[i].rows;
    std::vector<char> used(d, 0);
    out.perm[i].assign(d, -1);
    for (std::size_t e = 0; e < d; ++e) {
      double best = -1.0, second = -1.0;
      int pick = -1;
      for (std::size_t v = 0; v < d; ++v) {
        if (used[v]) continue;
        const double s = abs_cosine(ce[i].row(e), cv[i].row(v));
        if (s > best) {
          second = best;
          best = s;
          pick = static_cast<int>(v);
        } else if (s > second) {
          second = s;
        }
      }
      if (second >= 0.0 && best - second < 1e-6) out.ambiguous = true;
      used[pick] = 1;
      out.perm[i][e] = pick;
    }
  }

  // Permute the victim so neuron order matches the extracted model.
  ModelParameters pv;
  pv.arch = victim.arch;
  pv.weights.resize(k + 1);
  pv.biases.resize(k + 1);
  for (int i = 0; i <= k; ++i) {
    const Matrix& w = victim.weights[i];
    Matrix m(w.rows, w.cols);
    for (std::size_t j = 0; j < w.rows; ++j) {
      const std::size_t src_row = i < k ? out.perm[i][j] : j;
      for (std::size_t u = 0; u < w.cols; ++u) {
        const std::size_t src_col = i > 0 ? out.perm[i - 1][u] : u;
        m.at(j, u) = w.at(src_row, src_col);
      }
    }
    pv.weights[i] = std::move(m);
    pv.biases[i].resize(victim.biases[i].size());
    for (std::size_t j = 0; j < victim.biases[i].size(); ++j)
      pv.biases[i][j] = victim.biases[i][i < k ? out.perm[i][j] : j];
  }
  out.theoretical = theoretical_extraction(pv, anchor);
  out.permuted_victim = std::move(pv);
  return out;
}

double max_param_error(const ModelParameters& a, const ModelParameters& b) {
  if (!(a.arch == b.arch))
    throw std::invalid_argument("max_param_error: architecture mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.weights.size(); ++i) {
    for (std::size_t t = 0; t < a.weights[i].data.size(); ++t)
      m = std::max(m, std::abs(a.weights[i].data[t] - b.weights[i].data[t]));
    for (std::size_t t = 0; t < a.biases[i].size(); ++t)
      m = std::max(m, std::abs(a.biases[i][t] - b.biases[i][t]));
  }
  return m;
}

double error_bound(const ModelParameters& theoretical,
                   const ModelParameters& extracted, double domain_radius) {
  if (!(theoretical.arch == extracted.arch))
    throw std::invalid_argument("error_bound: architecture mismatch");
  const int k = theoretical.arch.hidden_layers();

  Vec mag(theoretical.arch.input_dim(), domain_radius);  // |input| bound
  Vec err(theoretical.arch.input_dim(), 0.0);
  for (int i = 0; i <= k; ++i) {
    const Matrix& wt = theoretical.weights[i];
    const Matrix& we = extracted.weights[i];
    Vec nmag(wt.rows, 0.0), nerr(wt.rows, 0.0);
    for (std::size_t j = 0; j < wt.rows; ++j) {
      double m = std::abs(theoretical.biases[i][j]);
      double e =
          std::abs(theoretical.biases[i][j] - extracted.biases[i][j]);
      for (std::size_t u = 0; u < wt.cols; ++u) {
        const double a = std::abs(wt.at(j, u));
        const double da = std::abs(wt.at(j, u) - we.at(j, u));
        m += a * mag[u];
        e += a * err[u] + da * (mag[u] + err[u]);
      }
      nmag[j] = m;  // ReLU keeps |h| <= |pre|
      nerr[j] = e;  // and is 1-Lipschitz
    }
    mag = std::move(nmag);
    err = std::move(nerr);
  }
  return err[0];
}

std::optional<ScaleEstimate> estimate_scale(const ModelParameters& victim,
                                            const ModelParameters& extracted,
                                            int samples, std::uint64_t seed,
                                            double domain_radius,
                                            double cutoff) {
  if (victim.arch.input_dim() != extracted.arch.input_dim())
    throw std::invalid_argument("estimate_scale: input dimension mismatch");
  Rng rng(seed);
  const std::size_t d = victim.arch.input_dim();
  std::vector<double> ratios;
  ratios.reserve(samples);
  for (int s = 0; s < samples; ++s) {
    const Vec x = rng.uniform_vec(d, -domain_radius, domain_radius);
    const double fv = forward_value(victim, x);
    if (std::abs(fv) <= cutoff) continue;
    ratios.push_back(forward_value(extracted, x) / fv);
  }
  if (ratios.empty()) return std::nullopt;

  std::sort(ratios.begin(), ratios.end());
  const std::size_t m = ratios.size();
  const double median = ratios[m / 2];
  if (median == 0.0) return std::nullopt;
  const double q1 = ratios[m / 4];
  const double q3 = ratios[(3 * m) / 4];
  ScaleEstimate est;
  est.c = median;
  est.spread_iqr = (q3 - q1) / std::abs(median);
  est.spread_range = (ratios.back() - ratios.front()) / std::abs(median);
  est.used = static_cast<int>(m);
  return est;
}

}  // namespace hlx
