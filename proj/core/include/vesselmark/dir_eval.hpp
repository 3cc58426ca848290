#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "vesselmark/landmarks.hpp"
#include "vesselmark/stats.hpp"
#include "vesselmark/volume.hpp"

namespace vm {

// p + dvf(p) for every point. Throws OutOfBounds naming the first point
// (by index) outside the field's domain.
std::vector<PointMm> warp_points_with_dvf(const std::vector<PointMm>& points, const VectorField& dvf);

// Indices of points outside the field's sampling domain.
std::vector<std::size_t> points_outside(const std::vector<PointMm>& points, const VolumeGeometry& g);

struct TREReport {
  std::vector<int> ids;
  std::vector<double> errors_mm;
  Summary summary;
  std::string filter;
};

// Error per pair = |warp(p1) - p2|. Flagged pairs are dropped unless
// `include_flagged`. Errors: EmptySelection, OutOfBounds.
TREReport compute_tre(const std::vector<LandmarkPair>& pairs, const VectorField& dvf, bool include_flagged = false);

std::string format_tre_text(const TREReport& report);
std::string format_tre_json(const TREReport& report);

// Published per-case counts, used as the census reference.
struct CaseExpectation {
  int case_index;
  int total;
  int normal;
  int flagged;
  int scan_interval_days;
};
const std::array<CaseExpectation, 30>& published_case_table();

struct CaseCensus {
  int case_index = 0;
  int total = 0;
  int normal = 0;
  int flagged = 0;
  int type1 = 0;
  int type2 = 0;
  std::map<std::string, int> provenance;
};

struct CensusReport {
  std::vector<CaseCensus> cases;
  CaseCensus totals;
  // Human-readable notes on every difference from the published table.
  std::vector<std::string> discrepancies;
};

CensusReport dataset_census(const std::vector<CaseRecord>& cases);
std::string format_census_text(const CensusReport& report);
std::string format_census_json(const CensusReport& report);

}  // namespace vm
