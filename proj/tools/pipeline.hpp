#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "vesselmark/config.hpp"

namespace vm::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kBadConfig = 2,
  kMissingInput = 3,
  kOutsideDvf = 4,
  kGeometryMismatch = 5,
};

int exit_code_for(ErrorCode code);

// Refines both points of every pair in `seeds_file` (a landmark table) on
// the case images. Writes refined.csv, refine_report.csv and per-point
// traces under out_dir. Individual failures are recorded, not fatal.
int cmd_refine(const RunConfig& cfg, const fs::path& case_dir, const fs::path& seeds_file, const fs::path& out_dir,
               std::string& log);

// n phantom pairs from landmarks in `landmarks_file` (image-1 points).
int cmd_phantom(const RunConfig& cfg, const fs::path& image, const fs::path& landmarks_file, int n,
                const fs::path& out_dir, std::string& log);

int cmd_evaluate(const RunConfig& cfg, const fs::path& case_dir, const fs::path& dvf_file, bool include_flagged,
                 const fs::path& out_dir, std::string& log);

// masks: (organ name, mask path) in application order.
int cmd_overwrite(const RunConfig& cfg, const fs::path& image, const std::vector<std::pair<std::string, fs::path>>& masks,
                  const fs::path& output, std::string& log);

int cmd_census(const RunConfig& cfg, const fs::path& dataset_dir, const fs::path& out_dir, std::string& log);

}  // namespace vm::cli
