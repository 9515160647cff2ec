#include "hlx/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "hlx/rng.hpp"

namespace hlx {

void Architecture::validate() const {
  if (dims.size() < 2)
    throw std::invalid_argument("architecture needs at least [d0, d_out]");
  for (int d : dims)
    if (d <= 0) throw std::invalid_argument("layer widths must be positive");
  if (dims.back() != 1)
    throw std::invalid_argument("unsupported architecture: output must be scalar");
}

std::string Architecture::to_string() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) os << '-';
    os << dims[i];
  }
  return os.str();
}

Architecture Architecture::parse(const std::string& s) {
  Architecture a;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, '-')) {
    if (part.empty()) throw std::invalid_argument("malformed arch spec: " + s);
    std::size_t pos = 0;
    int v = std::stoi(part, &pos);
    if (pos != part.size())
      throw std::invalid_argument("malformed arch spec: " + s);
    a.dims.push_back(v);
  }
  a.validate();
  return a;
}

std::string ActivationPattern::key() const {
  std::string k;
  for (const auto& layer : layers) {
    for (auto b : layer) k.push_back(b ? '1' : '0');
    k.push_back('|');
  }
  return k;
}

bool ActivationPattern::all_active() const {
  for (const auto& layer : layers)
    for (auto b : layer)
      if (!b) return false;
  return true;
}

int ModelParameters::parameter_count() const {
  int c = 0;
  for (const auto& w : weights) c += static_cast<int>(w.data.size());
  for (const auto& b : biases) c += static_cast<int>(b.size());
  return c;
}

void ModelParameters::validate() const {
  arch.validate();
  const std::size_t layers = arch.dims.size() - 1;
  if (weights.size() != layers || biases.size() != layers)
    throw std::invalid_argument("layer count does not match architecture");
  for (std::size_t i = 0; i < layers; ++i) {
    if (weights[i].rows != static_cast<std::size_t>(arch.dims[i + 1]) ||
        weights[i].cols != static_cast<std::size_t>(arch.dims[i]))
      throw std::invalid_argument("weight shape mismatch");
    if (biases[i].size() != static_cast<std::size_t>(arch.dims[i + 1]))
      throw std::invalid_argument("bias shape mismatch");
    for (double v : weights[i].data)
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite weight");
    for (double v : biases[i])
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite bias");
  }
}

ForwardResult forward(const ModelParameters& m, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(m.arch.input_dim()))
    throw std::invalid_argument("forward: input dimension mismatch");
  const int k = m.arch.hidden_layers();
  ForwardResult out;
  out.pattern.layers.resize(k);

  Vec h(x.begin(), x.end());
  for (int i = 0; i < k; ++i) {
    Vec pre = matvec(m.weights[i], h);
    auto& bits = out.pattern.layers[i];
    bits.resize(pre.size());
    for (std::size_t j = 0; j < pre.size(); ++j) {
      pre[j] += m.biases[i][j];
      const bool active = pre[j] > 0.0;
      bits[j] = active ? 1 : 0;
      if (!active) pre[j] = 0.0;
    }
    h = std::move(pre);
  }
  out.value = dot(m.weights[k].row(0), h) + m.biases[k][0];
  return out;
}

double forward_value(const ModelParameters& m, std::span<const double> x) {
  const int k = m.arch.hidden_layers();
  Vec h(x.begin(), x.end());
  for (int i = 0; i < k; ++i) {
    Vec pre = matvec(m.weights[i], h);
    for (std::size_t j = 0; j < pre.size(); ++j) {
      pre[j] += m.biases[i][j];
      if (pre[j] < 0.0) pre[j] = 0.0;
    }
    h = std::move(pre);
  }
  return dot(m.weights[k].row(0), h) + m.biases[k][0];
}

AffineTuple affine_for_pattern(const ModelParameters& m,
                               const ActivationPattern& pattern) {
  const int k = m.arch.hidden_layers();
  if (static_cast<int>(pattern.layers.size()) != k)
    throw std::invalid_argument("pattern layer count mismatch");

  // Propagate the affine map (M, c): layer input = M x + c.
  Matrix mat = Matrix::identity(m.arch.input_dim());
  Vec c(m.arch.input_dim(), 0.0);
  for (int i = 0; i < k; ++i) {
    if (pattern.layers[i].size() != static_cast<std::size_t>(m.arch.dims[i + 1]))
      throw std::invalid_argument("pattern width mismatch");
    Matrix next = matmul(m.weights[i], mat);
    Vec nextc = matvec(m.weights[i], c);
    for (std::size_t j = 0; j < nextc.size(); ++j) {
      nextc[j] += m.biases[i][j];
      if (!pattern.layers[i][j]) {
        nextc[j] = 0.0;
        for (std::size_t u = 0; u < next.cols; ++u) next.at(j, u) = 0.0;
      }
    }
    mat = std::move(next);
    c = std::move(nextc);
  }
  AffineTuple t;
  t.gamma = vecmat(m.weights[k].row(0), mat);
  t.beta = dot(m.weights[k].row(0), c) + m.biases[k][0];
  return t;
}

int first_significant(std::span<const double> gamma, double z) {
  for (std::size_t j = 0; j < gamma.size(); ++j)
    if (std::abs(gamma[j]) > z) return static_cast<int>(j);
  return -1;
}

AffineTuple normalize_tuple(AffineTuple t, double z) {
  const int a = first_significant(t.gamma, z);
  if (a < 0) return t;  // all-zero gamma kept unscaled
  const double s = std::abs(t.gamma[a]);
  for (double& g : t.gamma) g /= s;
  t.beta /= s;
  return t;
}

std::vector<AffineTuple> model_signature(
    const ModelParameters& m, std::span<const ActivationPattern> patterns,
    double z) {
  std::vector<AffineTuple> sig;
  sig.reserve(patterns.size());
  for (const auto& p : patterns)
    sig.push_back(normalize_tuple(affine_for_pattern(m, p), z));
  return sig;
}

ModelParameters generate_model(const Architecture& arch, std::uint64_t seed,
                               double lo, double hi) {
  arch.validate();
  Rng rng(seed);
  ModelParameters m;
  m.arch = arch;
  for (std::size_t i = 0; i + 1 < arch.dims.size(); ++i) {
    Matrix w(arch.dims[i + 1], arch.dims[i]);
    for (double& v : w.data) v = rng.uniform(lo, hi);
    m.weights.push_back(std::move(w));
    m.biases.push_back(rng.uniform_vec(arch.dims[i + 1], lo, hi));
  }
  return m;
}

}  // namespace hlx
