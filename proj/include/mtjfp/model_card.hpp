#pragma once

// Parameter deck for circuit-level transient models.
//
//   # mtjfp model card
//   # dataset_hash: 9f0c...
//   msat_a_per_m = 1200000
//   ...
//   cf_wer_0.5 = 0.87...
//
// One `name = value` per line in a fixed key order, values with 17
// significant digits.  `# key: value` comment lines carry provenance and
// are read back; any other comment is ignored.

#include "mtjfp/device.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mtjfp {

struct ModelCard {
  DeviceInputs device;  // delta always set
  /// (WER target, c_f) in emission order.
  std::vector<std::pair<double, double>> cf;
  /// Provenance entries, e.g. dataset_hash, solver, tool_version,
  /// calibration_current_a.
  std::map<std::string, std::string> provenance;

  std::optional<double> cf_for(double target) const;
  bool operator==(const ModelCard& other) const;
};

inline constexpr const char* kToolVersion = "mtjfp 0.3.0";

/// Shortest decimal that round-trips `target` ("0.5", "1e-06").
std::string format_target(double target);
/// Key of the c_f entry for a target: "cf_wer_" + format_target.
std::string cf_key(double target);

/// Builds the card; throws IncompleteCalibration listing every requested
/// target without a c_f entry.
ModelCard emit_model_card(const DeviceParams& params,
                          const std::vector<std::pair<double, double>>& cf_map,
                          const std::vector<double>& requested_targets,
                          std::map<std::string, std::string> provenance);

std::string serialize_deck(const ModelCard& card);
/// Throws Config with the line number on malformed input.
ModelCard parse_deck(const std::string& text);

ModelCard read_deck(const std::string& path);
void write_deck(const std::string& path, const ModelCard& card);

/// FNV-1a 64-bit hash as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace mtjfp
