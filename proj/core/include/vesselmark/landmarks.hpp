#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vesselmark/sphere_growing.hpp"
#include "vesselmark/volume.hpp"

namespace vm {

enum class PairStatus { normal, flagged };
enum class Provenance { sphere_grown_original, sphere_grown_auto_mask, sphere_grown_manual_mask, manual };

std::string_view to_string(PairStatus s);
std::string_view to_string(Provenance p);
PairType parse_pair_type(std::string_view s);
PairStatus parse_status(std::string_view s);
Provenance parse_provenance(std::string_view s);
Provenance provenance_of(SourceImage source);

struct LandmarkPair {
  int id = 0;
  PointMm p1;
  PointMm p2;
  PairType pair_type = PairType::type1;
  PairStatus status = PairStatus::normal;
  Provenance provenance = Provenance::manual;
};

// CSV with header
//   id,x1_mm,y1_mm,z1_mm,x2_mm,y2_mm,z2_mm,type,status,provenance
// Coordinates are written at round-trip precision.
inline constexpr std::string_view kLandmarkHeader = "id,x1_mm,y1_mm,z1_mm,x2_mm,y2_mm,z2_mm,type,status,provenance";

std::string format_landmarks(const std::vector<LandmarkPair>& pairs);
// `source` names the input in error messages. Errors: MalformedRow (with the
// line number), UnitMismatch when a coordinate column is not in mm.
std::vector<LandmarkPair> parse_landmarks(const std::string& text, const std::string& source = "landmarks");
std::vector<LandmarkPair> read_landmarks(const std::filesystem::path& path);
void write_landmarks(const std::filesystem::path& path, const std::vector<LandmarkPair>& pairs);

// Case directory layout:
//   case.json        optional manifest: case_index, image1, image2,
//                    landmarks, scan_interval_days, units ("mm")
//   image1.nii.gz    default image file names when the manifest omits them
//   image2.nii.gz
//   landmarks.csv
struct CaseRecord {
  int case_index = 0;
  std::filesystem::path image1_path;
  std::filesystem::path image2_path;
  std::optional<ScalarVolume> image1;
  std::optional<ScalarVolume> image2;
  std::vector<LandmarkPair> landmarks;
  int scan_interval_days = 0;
};

// Reads the manifest and landmark table; volumes are loaded only when
// `load_images` is set. Errors: MissingFile, MalformedRow, UnitMismatch.
CaseRecord load_case(const std::filesystem::path& dir, bool load_images = true);
// Writes case.json, the landmark table and any loaded volumes.
void save_case(const std::filesystem::path& dir, const CaseRecord& record);

}  // namespace vm
