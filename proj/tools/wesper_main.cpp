// wesper: asymptotic spectra of weighted sample covariance matrices.
//
// Subcommands: sample (draw eigenvalues), support (spectral support),
// density (limiting density on a grid), estimate (population spectrum
// recovery from observed eigenvalues).

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "wesper/errors.hpp"
#include "wesper/estimator.hpp"
#include "wesper/grid.hpp"
#include "wesper/io.hpp"
#include "wesper/resolvent.hpp"
#include "wesper/simulator.hpp"
#include "wesper/support.hpp"
#include "wesper/version.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitConvergence = 3;
constexpr int kExitIo = 4;

struct DistOptions {
  std::string h_file;
  std::string d_file;
  std::string d_kind;
  double alpha = 1.0;
  std::string weights_file;
};

wesper::SpectralDistribution load_h(const DistOptions& o,
                                    std::map<std::string, std::string>& hashes) {
  if (o.h_file.empty()) throw CLI::ValidationError("--h-file is required");
  std::ifstream in(o.h_file);
  if (!in) throw std::runtime_error("cannot open file: " + o.h_file);
  wesper::Json j = wesper::Json::parse(in);
  hashes[o.h_file] = wesper::file_hash_hex(o.h_file);
  return wesper::spectral_from_json(j);
}

// Raw per-observation weights are rescaled to mean 1 before discretization,
// matching the asymptotic normalization of the built-in weight laws.
std::vector<double> scaled_to_mean_one(std::vector<double> w) {
  double mean = 0.0;
  for (double v : w) mean += v;
  mean /= static_cast<double>(w.size());
  if (!(mean > 0.0)) throw std::runtime_error("weights must have positive mean");
  for (double& v : w) v /= mean;
  return w;
}

wesper::WeightDistribution load_d(const DistOptions& o,
                                  std::map<std::string, std::string>& hashes) {
  int sources = int(!o.d_file.empty()) + int(!o.d_kind.empty()) + int(!o.weights_file.empty());
  if (sources != 1) {
    throw CLI::ValidationError("specify exactly one of --d-file, --d-kind, --weights");
  }
  if (!o.d_file.empty()) {
    std::ifstream in(o.d_file);
    if (!in) throw std::runtime_error("cannot open file: " + o.d_file);
    wesper::Json j = wesper::Json::parse(in);
    hashes[o.d_file] = wesper::file_hash_hex(o.d_file);
    return wesper::weight_from_json(j);
  }
  if (!o.weights_file.empty()) {
    auto raw = scaled_to_mean_one(wesper::read_value_column(o.weights_file));
    hashes[o.weights_file] = wesper::file_hash_hex(o.weights_file);
    return wesper::discretize_weights(raw);
  }
  if (o.d_kind == "ewma") return wesper::WeightDistribution::ewma(o.alpha);
  if (o.d_kind == "uniform") return wesper::WeightDistribution::uniform(o.alpha);
  if (o.d_kind == "identity" || o.d_kind == "dirac") return wesper::WeightDistribution::dirac(1.0);
  throw CLI::ValidationError("--d-kind must be one of ewma, uniform, identity");
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> cli_seed) {
  if (cli_seed) return *cli_seed;
  if (const char* env = std::getenv("WESPER_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 0;
}

wesper::GridStrategy parse_strategy(const std::string& s) {
  if (s == "uniform") return wesper::GridStrategy::Uniform;
  if (s == "frequentist") return wesper::GridStrategy::Frequentist;
  if (s == "mixed") return wesper::GridStrategy::Mixed;
  throw CLI::ValidationError("--strategy must be uniform, frequentist or mixed");
}

void fail_json(const std::string& message, int code) {
  wesper::Json err{{"error", message}, {"code", code}};
  std::cerr << err.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"asymptotic spectra of weighted sample covariance matrices"};
  app.set_version_flag("--version", wesper::kVersion);
  app.require_subcommand(1);

  int threads = 1;
  app.add_option("--threads", threads, "worker thread cap")->capture_default_str();

  DistOptions dist;
  double conc = 0.25;
  std::optional<std::uint64_t> seed_opt;
  std::string out_path = "-";

  auto add_common = [&](CLI::App* sub, bool needs_h) {
    if (needs_h) sub->add_option("--h-file", dist.h_file, "population spectrum JSON");
    sub->add_option("--d-file", dist.d_file, "weight distribution JSON");
    sub->add_option("--d-kind", dist.d_kind, "ewma | uniform | identity");
    sub->add_option("--alpha", dist.alpha, "decay/width parameter for --d-kind");
    sub->add_option("--weights", dist.weights_file, "raw weights CSV (one per line)");
    sub->add_option("-c,--concentration", conc, "dimension/samples ratio")->required();
    sub->add_option("--out", out_path, "output path ('-' for stdout)");
  };

  // --- sample ---
  auto* cmd_sample = app.add_subcommand("sample", "draw weighted sample covariance eigenvalues");
  int n_dim = 500;
  std::string noise = "gaussian";
  double nu = 20.0;
  add_common(cmd_sample, true);
  cmd_sample->add_option("-n,--dimension", n_dim, "matrix dimension")->required();
  cmd_sample->add_option("--noise", noise, "gaussian | student");
  cmd_sample->add_option("--nu", nu, "Student degrees of freedom");
  cmd_sample->add_option("--seed", seed_opt, "rng seed (env WESPER_SEED fallback)");

  // --- support ---
  auto* cmd_support = app.add_subcommand("support", "compute the support of F");
  std::vector<int> branches;
  add_common(cmd_support, true);
  cmd_support->add_option("--branches", branches, "restrict to these m_LD branches");

  // --- density ---
  auto* cmd_density = app.add_subcommand("density", "limiting spectral density on a grid");
  int omega = 1000;
  std::string strategy = "mixed";
  double mu = 0.1;
  std::string eigs_file;
  add_common(cmd_density, true);
  cmd_density->add_option("--omega", omega, "grid budget Omega")->capture_default_str();
  cmd_density->add_option("--strategy", strategy, "uniform | frequentist | mixed")
      ->capture_default_str();
  cmd_density->add_option("--mu", mu, "mixing parameter for mixed strategy")
      ->capture_default_str();
  cmd_density->add_option("--eigs", eigs_file, "sample eigenvalues CSV (frequentist/mixed)");

  // --- estimate ---
  auto* cmd_estimate = app.add_subcommand("estimate", "recover the population spectrum");
  std::string obs_file;
  int iters = 500, replicas = 4, grid_budget = 1000;
  double lr = 0.05, clip_quantile = 0.0;
  bool use_fd = false;
  add_common(cmd_estimate, false);
  cmd_estimate->add_option("--eigs", obs_file, "observed eigenvalues CSV")->required();
  cmd_estimate->add_option("--iters", iters, "optimizer iterations")->capture_default_str();
  cmd_estimate->add_option("--replicas", replicas, "spectra per gradient step")
      ->capture_default_str();
  cmd_estimate->add_option("--lr", lr, "initial step size")->capture_default_str();
  cmd_estimate->add_option("--seed", seed_opt, "rng seed (env WESPER_SEED fallback)");
  cmd_estimate->add_option("--grid-size", grid_budget, "density grid budget")
      ->capture_default_str();
  cmd_estimate->add_option("--clip-quantile", clip_quantile,
                           "winsorize the top quantile of observations");
  cmd_estimate->add_flag("--fd", use_fd, "finite-difference gradients");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return kExitUsage;
  }

  try {
    std::map<std::string, std::string> hashes;
    std::uint64_t seed = resolve_seed(seed_opt);

    if (*cmd_sample) {
      wesper::SimulationConfig config{.dimension = n_dim,
                                      .concentration = conc,
                                      .noise = noise == "student" ? wesper::NoiseKind::Student
                                                                  : wesper::NoiseKind::Gaussian,
                                      .nu = nu,
                                      .seed = seed,
                                      .h = load_h(dist, hashes),
                                      .d = load_d(dist, hashes)};
      if (noise != "gaussian" && noise != "student") {
        throw CLI::ValidationError("--noise must be gaussian or student");
      }
      if (config.noise == wesper::NoiseKind::Student && config.nu < wesper::kHeavyTailNu) {
        std::cerr << "warning: Student nu=" << config.nu
                  << " is below the nu>12 regime the asymptotic theory assumes; expect "
                     "outlier eigenvalues\n";
      }
      wesper::EmpiricalSpectrum spec = wesper::sample_spectrum(config);
      wesper::RunManifest man{"sample",
                              wesper::Json{{"n", n_dim},
                                           {"c", conc},
                                           {"noise", noise},
                                           {"nu", nu},
                                           {"d", wesper::weight_to_json(config.d)},
                                           {"h", wesper::spectral_to_json(config.h)}},
                              seed, hashes};
      if (out_path == "-") {
        std::cout << man.comment_lines() << "eigenvalue\n";
        for (double v : spec.eigenvalues) std::cout << wesper::format_full(v) << "\n";
      } else {
        wesper::write_eigenvalue_csv(out_path, man, spec.eigenvalues);
      }
      return 0;
    }

    if (*cmd_support) {
      auto h = load_h(dist, hashes);
      auto d = load_d(dist, hashes);
      wesper::SupportIntervals s;
      if (!branches.empty()) {
        s = wesper::find_support_mixture(h, d, conc, branches);
      } else {
        s = wesper::find_support(h, d, conc);
      }
      wesper::RunManifest man{"support",
                              wesper::Json{{"c", conc},
                                           {"branches", branches},
                                           {"d", wesper::weight_to_json(d)},
                                           {"h", wesper::spectral_to_json(h)}},
                              seed, hashes};
      wesper::Json out = wesper::support_to_json(s);
      out["manifest"] = man.to_json();
      if (out_path == "-") {
        std::cout << out.dump(2) << "\n";
      } else {
        wesper::write_text_file(out_path, out.dump(2) + "\n");
      }
      return 0;
    }

    if (*cmd_density) {
      if (omega <= 0) throw CLI::ValidationError("--omega must be positive");
      auto h = load_h(dist, hashes);
      auto d = load_d(dist, hashes);
      wesper::GridStrategy strat = parse_strategy(strategy);
      std::vector<double> eigs;
      const std::vector<double>* eigs_ptr = nullptr;
      if (strat != wesper::GridStrategy::Uniform) {
        if (eigs_file.empty()) {
          throw CLI::ValidationError("--strategy " + strategy + " requires --eigs");
        }
        eigs = wesper::read_value_column(eigs_file);
        std::sort(eigs.begin(), eigs.end());
        hashes[eigs_file] = wesper::file_hash_hex(eigs_file);
        eigs_ptr = &eigs;
      }
      wesper::SupportIntervals s = wesper::find_support(h, d, conc);
      wesper::Grid grid = wesper::build_grid(s, omega, strat, mu, eigs_ptr);
      wesper::DensityCurve curve = wesper::density_curve(h, d, conc, grid.points);
      wesper::RunManifest man{"density",
                              wesper::Json{{"c", conc},
                                           {"omega", omega},
                                           {"strategy", strategy},
                                           {"mu", mu},
                                           {"d", wesper::weight_to_json(d)},
                                           {"h", wesper::spectral_to_json(h)}},
                              seed, hashes};
      if (out_path == "-") {
        std::cout << man.comment_lines();
        std::cout << "# zero_mass," << wesper::format_full(s.zero_mass) << "\n";
        std::cout << "xi,density\n";
        for (std::size_t i = 0; i < curve.xi.size(); ++i) {
          std::cout << wesper::format_full(curve.xi[i]) << ","
                    << wesper::format_full(curve.density[i]) << "\n";
        }
      } else {
        wesper::write_density_csv(out_path, man, curve, s.zero_mass);
      }
      return 0;
    }

    if (*cmd_estimate) {
      std::vector<double> obs = wesper::read_value_column(obs_file);
      hashes[obs_file] = wesper::file_hash_hex(obs_file);
      std::sort(obs.begin(), obs.end());
      const int n = static_cast<int>(obs.size());
      const int n_samples = static_cast<int>(std::llround(n / conc));

      wesper::WeightDistribution d = load_d(dist, hashes);
      std::vector<double> realized;
      if (!dist.weights_file.empty()) {
        realized = scaled_to_mean_one(wesper::read_value_column(dist.weights_file));
        if (static_cast<int>(realized.size()) != n_samples) {
          throw CLI::ValidationError("--weights must contain round(n/c) values");
        }
        std::sort(realized.rbegin(), realized.rend());
      } else {
        realized = wesper::realize_weights(d, n_samples);
      }

      wesper::EstimationConfig config;
      config.iterations = iters;
      config.replicas = replicas;
      config.learning_rate = lr;
      config.seed = seed;
      config.threads = threads;
      config.clip_quantile = clip_quantile;
      config.grid_budget = grid_budget;
      config.gradient_mode =
          use_fd ? wesper::GradientMode::FiniteDifference : wesper::GradientMode::Perturbation;

      wesper::EstimationResult result = wesper::estimate(obs, realized, d, conc, config);
      for (const auto& warning : result.warnings) std::cerr << "warning: " << warning << "\n";

      wesper::RunManifest man{"estimate",
                              wesper::Json{{"c", conc},
                                           {"iters", iters},
                                           {"replicas", replicas},
                                           {"lr", lr},
                                           {"grid_size", grid_budget},
                                           {"clip_quantile", clip_quantile},
                                           {"gradient", use_fd ? "fd" : "perturbation"},
                                           {"d", wesper::weight_to_json(d)}},
                              seed, hashes};
      wesper::Json out = wesper::estimation_to_json(result);
      out["manifest"] = man.to_json();
      if (out_path == "-") {
        std::cout << out.dump(2) << "\n";
      } else {
        wesper::write_text_file(out_path, out.dump(2) + "\n");
      }
      return 0;
    }
  } catch (const CLI::ValidationError& e) {
    fail_json(e.what(), kExitUsage);
    return kExitUsage;
  } catch (const wesper::ConvergenceError& e) {
    fail_json(e.what(), kExitConvergence);
    return kExitConvergence;
  } catch (const std::invalid_argument& e) {
    fail_json(e.what(), kExitUsage);
    return kExitUsage;
  } catch (const std::exception& e) {
    fail_json(e.what(), kExitIo);
    return kExitIo;
  }
  return 0;
}
