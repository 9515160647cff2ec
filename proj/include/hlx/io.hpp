#pragma once

#include <string>
#include <vector>

#include "hlx/affine.hpp"
#include "hlx/extraction.hpp"
#include "hlx/model.hpp"

namespace hlx {

/// Model files are JSON with "dims" and "layers" ({"weights", "bias"}).
/// Numbers are written with 17 significant digits so parsing them back is
/// bit-exact for doubles.
void write_model(const std::string& path, const ModelParameters& m);
ModelParameters read_model(const std::string& path);

/// One JSON record per recovered tuple, line-delimited, for resumable runs.
void write_transcript(const std::string& path,
                      const std::vector<RecoveredTuple>& tuples);
std::vector<RecoveredTuple> read_transcript(const std::string& path);

void write_report(const std::string& path, const AttackReport& report);

struct RunManifest {
  std::uint64_t seed = 0;
  std::string victim_path;
  std::string victim_hash;  // fnv1a-64 of the file bytes
  std::string output_model;
  std::string transcript;
  std::string report;
  std::string config_json;
};

void write_manifest(const std::string& path, const RunManifest& manifest);

std::string file_fnv1a64(const std::string& path);

/// 17-significant-digit decimal, round-trip exact.
std::string format_double(double v);

}  // namespace hlx
