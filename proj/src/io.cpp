#include "hlx/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace hlx {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

void write_vec(std::ostream& os, const Vec& v) {
  os << '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ',';
    os << format_double(v[i]);
  }
  os << ']';
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return is;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  return os;
}

}  // namespace

void write_model(const std::string& path, const ModelParameters& m) {
  m.validate();
  auto os = open_out(path);
  os << "{\n  \"dims\": [";
  for (std::size_t i = 0; i < m.arch.dims.size(); ++i) {
    if (i) os << ',';
    os << m.arch.dims[i];
  }
  os << "],\n  \"layers\": [\n";
  for (std::size_t i = 0; i < m.weights.size(); ++i) {
    os << "    {\"weights\": [";
    for (std::size_t r = 0; r < m.weights[i].rows; ++r) {
      if (r) os << ',';
      Vec row(m.weights[i].row(r).begin(), m.weights[i].row(r).end());
      write_vec(os, row);
    }
    os << "], \"bias\": ";
    write_vec(os, m.biases[i]);
    os << '}' << (i + 1 < m.weights.size() ? "," : "") << '\n';
  }
  os << "  ]\n}\n";
}

ModelParameters read_model(const std::string& path) {
  auto is = open_in(path);
  nlohmann::json j;
  is >> j;

  ModelParameters m;
  m.arch.dims = j.at("dims").get<std::vector<int>>();
  m.arch.validate();
  const auto& layers = j.at("layers");
  if (layers.size() != m.arch.dims.size() - 1)
    throw std::runtime_error("model file: layer count mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto rows = layers[i].at("weights").get<std::vector<Vec>>();
    Matrix w(m.arch.dims[i + 1], m.arch.dims[i]);
    if (rows.size() != w.rows)
      throw std::runtime_error("model file: weight rows mismatch");
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != w.cols)
        throw std::runtime_error("model file: weight cols mismatch");
      for (std::size_t c = 0; c < w.cols; ++c) w.at(r, c) = rows[r][c];
    }
    m.weights.push_back(std::move(w));
    m.biases.push_back(layers[i].at("bias").get<Vec>());
  }
  m.validate();
  return m;
}

void write_transcript(const std::string& path,
                      const std::vector<RecoveredTuple>& tuples) {
  auto os = open_out(path);
  for (const auto& t : tuples) {
    os << "{\"point\": ";
    write_vec(os, t.point);
    os << ", \"gamma\": ";
    write_vec(os, t.gamma);
    os << ", \"beta\": " << format_double(t.beta)
       << ", \"anchor\": " << t.anchor_index << ", \"valid\": \"";
    for (auto v : t.valid) os << (v ? '1' : '0');
    os << "\", \"occurrence\": " << t.occurrence << ", \"sources\": [";
    for (std::size_t i = 0; i < t.source_points.size(); ++i) {
      if (i) os << ',';
      os << t.source_points[i];
    }
    os << "]}\n";
  }
}

std::vector<RecoveredTuple> read_transcript(const std::string& path) {
  auto is = open_in(path);
  std::vector<RecoveredTuple> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    RecoveredTuple t;
    t.point = j.at("point").get<Vec>();
    t.gamma = j.at("gamma").get<Vec>();
    t.beta = j.at("beta").get<double>();
    t.anchor_index = j.at("anchor").get<int>();
    const std::string mask = j.at("valid").get<std::string>();
    t.valid.reserve(mask.size());
    for (char c : mask) t.valid.push_back(c == '1');
    t.partial = mask.find('0') != std::string::npos;
    t.occurrence = j.at("occurrence").get<int>();
    t.source_points = j.at("sources").get<std::vector<int>>();
    if (t.gamma.size() != t.valid.size())
      throw std::runtime_error("transcript: mask length mismatch");
    out.push_back(std::move(t));
  }
  return out;
}

void write_report(const std::string& path, const AttackReport& r) {
  auto os = open_out(path);
  nlohmann::json j;
  j["arch"] = r.arch;
  j["status"] = r.status;
  j["message"] = r.message;
  j["epsilon"] = r.epsilon;
  j["domain_radius"] = r.domain_radius;
  j["probe_stride"] = r.probe_stride;
  j["phi"] = r.phi;
  j["d_phi"] = r.d_phi;
  j["points_multiplier"] = r.points_multiplier;
  j["seed"] = r.seed;
  j["query_count"] = r.query_count;
  j["points_requested"] = r.points_requested;
  j["points_found"] = r.points_found;
  j["points_failed"] = r.points_failed;
  j["tuples_recovered"] = r.tuples_recovered;
  j["tuples_after_dedup"] = r.tuples_after_dedup;
  j["n_valid"] = r.n_valid;
  j["anchor"] = r.anchor;
  j["candidates_enumerated"] = r.candidates_enumerated;
  j["rejected_anchor"] = r.rejected_anchor;
  j["rejected_degenerate"] = r.rejected_degenerate;
  j["rejected_singular"] = r.rejected_singular;
  j["signature_passed"] = r.signature_passed;
  j["sign_passed"] = r.sign_passed;
  j["survivors"] = r.survivors;
  j["best_pmr"] = r.best_pmr;
  j["best_candidate_index"] = r.best_candidate_index;
  j["wall_seconds"] = r.wall_seconds;
  os << j.dump(2) << '\n';
}

void write_manifest(const std::string& path, const RunManifest& m) {
  auto os = open_out(path);
  nlohmann::json j;
  j["seed"] = m.seed;
  j["victim_path"] = m.victim_path;
  j["victim_hash"] = m.victim_hash;
  j["output_model"] = m.output_model;
  j["transcript"] = m.transcript;
  j["report"] = m.report;
  if (!m.config_json.empty())
    j["config"] = nlohmann::json::parse(m.config_json);
  os << j.dump(2) << '\n';
}

std::string file_fnv1a64(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::uint64_t h = 14695981039346656037ull;
  char c;
  while (is.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace hlx
