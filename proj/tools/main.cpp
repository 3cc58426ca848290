#include <cstdio>
#include <optional>
#include <iostream>

#include "CLI11.hpp"
#include "pipeline.hpp"
#include "vesselmark/parallel.hpp"

namespace fs = std::filesystem;
using namespace vm;
using namespace vm::cli;

int main(int argc, char** argv) {
  CLI::App app{"vesselmark: bifurcation landmark refinement, phantoms and DIR evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool include_flagged = false;
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--seed", seed, "master RNG seed (overrides the config)");
  app.add_option("--threads", threads, "worker threads, 0 = all cores");
  app.add_flag("--include-flagged", include_flagged, "keep flagged pairs in TRE statistics");

  std::string out_dir;
  auto add_out = [&](CLI::App* sub) { sub->add_option("--out,-o", out_dir, "output directory"); };

  std::string case_dir, seeds_file, image, landmarks_file, dvf_file, output, dataset_dir;
  std::vector<std::string> mask_args;
  int count = 0;

  auto* refine = app.add_subcommand("refine", "sphere-grow every seed pair of a case");
  refine->add_option("case_dir", case_dir)->required();
  refine->add_option("seeds", seeds_file, "landmark table with seed points")->required();
  add_out(refine);

  auto* phantom = app.add_subcommand("phantom", "emit a suite of synthetic phantom pairs");
  phantom->add_option("image", image)->required();
  phantom->add_option("landmarks", landmarks_file)->required();
  phantom->add_option("-n,--count", count, "number of phantom pairs (config default otherwise)");
  add_out(phantom);

  auto* evaluate = app.add_subcommand("evaluate", "TRE of a DVF on a case's landmarks");
  evaluate->add_option("case_dir", case_dir)->required();
  evaluate->add_option("dvf", dvf_file, "NIfTI or raw vector volume, mm displacements")->required();
  evaluate->add_flag("--include-flagged", include_flagged, "keep flagged pairs in TRE statistics");
  add_out(evaluate);

  auto* overwrite = app.add_subcommand("overwrite", "fill organ masks with configured intensities");
  overwrite->add_option("image", image)->required();
  overwrite->add_option("output", output)->required();
  overwrite->add_option("--mask", mask_args, "organ=path, applied in the given order");

  auto* census = app.add_subcommand("census", "count landmark pairs against the published table");
  census->add_option("dataset_dir", dataset_dir)->required();
  add_out(census);

  auto* config = app.add_subcommand("config", "print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kBadConfig;
  }

  std::string log;
  int rc = kOk;
  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    cfg.validate();
    set_thread_count(static_cast<unsigned>(cfg.threads));
    const fs::path out = out_dir.empty() ? cfg.output_dir : fs::path(out_dir);

    if (*refine) {
      rc = cmd_refine(cfg, case_dir, seeds_file, out, log);
    } else if (*phantom) {
      rc = cmd_phantom(cfg, image, landmarks_file, count > 0 ? count : cfg.phantom_count, out, log);
    } else if (*evaluate) {
      rc = cmd_evaluate(cfg, case_dir, dvf_file, include_flagged, out, log);
    } else if (*overwrite) {
      std::vector<std::pair<std::string, fs::path>> masks;
      for (const auto& m : mask_args) {
        const auto eq = m.find('=');
        if (eq == std::string::npos || eq == 0) throw Error(ErrorCode::BadConfig, "--mask expects organ=path, got " + m);
        masks.emplace_back(m.substr(0, eq), m.substr(eq + 1));
      }
      rc = cmd_overwrite(cfg, image, masks, output, log);
    } else if (*census) {
      rc = cmd_census(cfg, dataset_dir, out, log);
    } else if (*config) {
      log = format_config(cfg);
    }
  } catch (const Error& e) {
    std::cout << log;
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cout << log;
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  (rc == kOk ? std::cout : std::cerr) << log;
  return rc;
}
