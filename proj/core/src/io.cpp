#include "wesper/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "wesper/detail/hash.hpp"
#include "wesper/version.hpp"

namespace wesper {

Json weight_to_json(const WeightDistribution& d) {
  Json j;
  switch (d.kind()) {
    case WeightKind::DiracMixture:
      j["kind"] = "dirac";
      j["atoms"] = d.atoms();
      j["weights"] = d.weights();
      break;
    case WeightKind::Ewma:
      j["kind"] = "ewma";
      j["alpha"] = d.alpha();
      break;
    case WeightKind::Uniform:
      j["kind"] = "uniform";
      j["alpha"] = d.alpha();
      break;
  }
  return j;
}

WeightDistribution weight_from_json(const Json& j) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "dirac") {
    return WeightDistribution::dirac_mixture(j.at("atoms").get<std::vector<double>>(),
                                             j.at("weights").get<std::vector<double>>());
  }
  if (kind == "ewma") return WeightDistribution::ewma(j.at("alpha").get<double>());
  if (kind == "uniform") return WeightDistribution::uniform(j.at("alpha").get<double>());
  throw std::invalid_argument("unknown weight distribution kind: " + kind);
}

Json spectral_to_json(const SpectralDistribution& h) {
  Json j;
  j["kind"] = "dirac";
  j["atoms"] = h.atoms();
  j["weights"] = h.weights();
  return j;
}

SpectralDistribution spectral_from_json(const Json& j) {
  if (j.contains("kind") && j.at("kind").get<std::string>() != "dirac") {
    throw std::invalid_argument("population spectrum must be a dirac mixture");
  }
  std::vector<double> atoms = j.at("atoms").get<std::vector<double>>();
  std::vector<double> weights;
  if (j.contains("weights")) {
    weights = j.at("weights").get<std::vector<double>>();
  } else {
    weights.assign(atoms.size(), 1.0 / atoms.size());
  }
  return {std::move(atoms), std::move(weights)};
}

Json support_to_json(const SupportIntervals& s) {
  Json intervals = Json::array();
  for (const auto& iv : s.intervals) intervals.push_back({iv.lo, iv.hi});
  Json boundaries = Json::array();
  for (const auto& b : s.boundaries) {
    boundaries.push_back({{"x", b.x}, {"X", b.x_star}, {"branch", b.branch}});
  }
  return Json{{"intervals", intervals}, {"zero_mass", s.zero_mass}, {"boundaries", boundaries}};
}

Json grid_to_json(const Grid& g) {
  const char* strat = g.strategy == GridStrategy::Uniform      ? "uniform"
                      : g.strategy == GridStrategy::Frequentist ? "frequentist"
                                                                : "mixed";
  return Json{{"points", g.points},
              {"omegas", g.omegas},
              {"strategy", strat},
              {"mu", g.mu},
              {"omega_total", g.omega_total}};
}

Json density_to_json(const DensityCurve& curve) {
  Json xck = Json::array();
  for (const auto& x : curve.x_check) xck.push_back({x.real(), x.imag()});
  return Json{{"xi", curve.xi}, {"density", curve.density}, {"x_check", xck}};
}

Json estimation_to_json(const EstimationResult& r) {
  Json j;
  j["tau_hat"] = r.tau_hat;
  j["h_hat"] = Json{{"kind", "dirac"}, {"atoms", r.h_hat_atoms}, {"weights", r.h_hat_weights}};
  j["loss_trace"] = r.loss_trace;
  j["warnings"] = r.warnings;
  j["support_ok"] = r.support_ok;
  if (r.support_ok) {
    j["support"] = support_to_json(r.support);
    j["grid"] = grid_to_json(r.grid);
    j["density"] = density_to_json(r.density);
  }
  return j;
}

Json RunManifest::to_json() const {
  return Json{{"subcommand", subcommand},
              {"version", kVersion},
              {"rng", kRngAlgorithm},
              {"seed", seed},
              {"config", config},
              {"inputs", input_hashes}};
}

std::string RunManifest::comment_lines() const {
  std::ostringstream out;
  out << "# wesper " << kVersion << " " << subcommand << "\n";
  out << "# manifest " << to_json().dump() << "\n";
  return out.str();
}

std::string format_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<double> read_value_column(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    std::size_t at = line.find_first_not_of(" \t\r");
    if (at == std::string::npos || line[at] == '#') continue;
    try {
      out.push_back(std::stod(line.substr(at)));
    } catch (const std::exception&) {
      throw std::runtime_error("malformed numeric line in " + path + ": " + line);
    }
  }
  if (out.empty()) throw std::runtime_error("no values found in " + path);
  return out;
}

std::string file_hash_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv64:%016llx",
                static_cast<unsigned long long>(detail::fnv1a64(ss.str())));
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_eigenvalue_csv(const std::string& path, const RunManifest& manifest,
                          const std::vector<double>& values) {
  std::ostringstream out;
  out << manifest.comment_lines();
  out << "eigenvalue\n";
  for (double v : values) out << format_full(v) << "\n";
  write_text_file(path, out.str());
}

void write_density_csv(const std::string& path, const RunManifest& manifest,
                       const DensityCurve& curve, double zero_mass) {
  std::ostringstream out;
  out << manifest.comment_lines();
  out << "# zero_mass," << format_full(zero_mass) << "\n";
  out << "xi,density\n";
  for (std::size_t i = 0; i < curve.xi.size(); ++i) {
    out << format_full(curve.xi[i]) << "," << format_full(curve.density[i]) << "\n";
  }
  write_text_file(path, out.str());
}

}  // namespace wesper
