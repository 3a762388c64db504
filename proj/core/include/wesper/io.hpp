#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "wesper/distributions.hpp"
#include "wesper/estimator.hpp"
#include "wesper/grid.hpp"
#include "wesper/simulator.hpp"
#include "wesper/support.hpp"

namespace wesper {

using Json = nlohmann::json;

/// Distribution schema:
///   {"kind": "dirac"|"ewma"|"uniform", "atoms": [..], "weights": [..], "alpha": x}
Json weight_to_json(const WeightDistribution& d);
WeightDistribution weight_from_json(const Json& j);

Json spectral_to_json(const SpectralDistribution& h);
SpectralDistribution spectral_from_json(const Json& j);

Json support_to_json(const SupportIntervals& s);
Json grid_to_json(const Grid& g);
Json density_to_json(const DensityCurve& curve);
Json estimation_to_json(const EstimationResult& r);

/// Every output embeds or accompanies its manifest: subcommand, full config,
/// seed, library version, rng identifier and input file hashes.
struct RunManifest {
  std::string subcommand;
  Json config;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> input_hashes;

  Json to_json() const;
  std::string comment_lines() const;  // '#'-prefixed block for CSV headers
};

/// 17-significant-digit decimal so values survive a text round trip exactly.
std::string format_full(double v);

/// One numeric value per line; '#' lines and blanks skipped.
std::vector<double> read_value_column(const std::string& path);

std::string file_hash_hex(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
void write_eigenvalue_csv(const std::string& path, const RunManifest& manifest,
                          const std::vector<double>& values);
void write_density_csv(const std::string& path, const RunManifest& manifest,
                       const DensityCurve& curve, double zero_mass);

}  // namespace wesper
