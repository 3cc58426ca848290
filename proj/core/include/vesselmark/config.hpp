#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "vesselmark/filters.hpp"
#include "vesselmark/phantom.hpp"
#include "vesselmark/sphere_growing.hpp"

namespace vm {

struct OrganFill {
  std::string name;
  double fill_hu = 0.0;
};

struct RunConfig {
  GrowConfig grow;
  VesselnessParams vesselness;
  RegionGrowParams region_grow;
  std::uint64_t seed = 20250101;
  int phantom_count = 50;
  PhantomOptions phantom;
  std::vector<OrganFill> organs{{"stomach", 0.0}, {"small_intestine", 20.0}, {"duodenum", 40.0}, {"colon", 60.0}};
  std::filesystem::path output_dir = "out";
  int threads = 0;  // 0: hardware concurrency

  void validate() const;
  double organ_fill(const std::string& name) const;
};

// Flat "key = value" text, '#' starts a comment. Unknown keys and bad values
// raise BadConfig naming the line.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
// Every key with its current value; parse_config(format_config(c)) == c.
std::string format_config(const RunConfig& cfg);

}  // namespace vm
