#include "vesselmark/landmarks.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "json.hpp"
#include "vesselmark/format.hpp"
#include "vesselmark/volume_io.hpp"

namespace vm {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(PairStatus s) { return s == PairStatus::normal ? "normal" : "flagged"; }

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::sphere_grown_original: return "sphere_grown_original";
    case Provenance::sphere_grown_auto_mask: return "sphere_grown_auto_mask";
    case Provenance::sphere_grown_manual_mask: return "sphere_grown_manual_mask";
    case Provenance::manual: return "manual";
  }
  return "manual";
}

PairType parse_pair_type(std::string_view s) {
  if (s == "type1" || s == "1") return PairType::type1;
  if (s == "type2" || s == "2") return PairType::type2;
  throw Error(ErrorCode::MalformedRow, "unknown pair type '" + std::string(s) + "'");
}

PairStatus parse_status(std::string_view s) {
  if (s == "normal") return PairStatus::normal;
  if (s == "flagged") return PairStatus::flagged;
  throw Error(ErrorCode::MalformedRow, "unknown status '" + std::string(s) + "'");
}

Provenance parse_provenance(std::string_view s) {
  for (auto p : {Provenance::sphere_grown_original, Provenance::sphere_grown_auto_mask,
                 Provenance::sphere_grown_manual_mask, Provenance::manual}) {
    if (s == to_string(p)) return p;
  }
  throw Error(ErrorCode::MalformedRow, "unknown provenance '" + std::string(s) + "'");
}

Provenance provenance_of(SourceImage source) {
  switch (source) {
    case SourceImage::original: return Provenance::sphere_grown_original;
    case SourceImage::vesselness_mask: return Provenance::sphere_grown_auto_mask;
    case SourceImage::manual_mask: return Provenance::sphere_grown_manual_mask;
  }
  return Provenance::manual;
}

namespace {

std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

void check_header(const std::vector<std::string>& cols, const std::string& source) {
  static const std::vector<std::string> expected = split_csv(std::string(kLandmarkHeader));
  if (cols.size() == expected.size()) {
    bool same = true;
    for (std::size_t n = 0; n < cols.size(); ++n) same = same && cols[n] == expected[n];
    if (same) return;
  }
  // A coordinate column carrying another unit suffix is a unit problem, not
  // a layout problem.
  for (const auto& c : cols) {
    if (c.size() > 3 && (c[0] == 'x' || c[0] == 'y' || c[0] == 'z') && (c[1] == '1' || c[1] == '2') && c[2] == '_' &&
        c.substr(3) != "mm")
      throw Error(ErrorCode::UnitMismatch, source + ": coordinate column '" + c + "' is not in mm");
  }
  throw Error(ErrorCode::MalformedRow, source + " line 1: header must be '" + std::string(kLandmarkHeader) + "'");
}

}  // namespace

std::string format_landmarks(const std::vector<LandmarkPair>& pairs) {
  std::string out(kLandmarkHeader);
  out += '\n';
  for (const auto& p : pairs) {
    out += std::to_string(p.id);
    for (const auto& pt : {p.p1, p.p2}) {
      for (int a = 0; a < 3; ++a) {
        out += ',';
        out += format_double(pt[a]);
      }
    }
    out += ',';
    out += to_string(p.pair_type);
    out += ',';
    out += to_string(p.status);
    out += ',';
    out += to_string(p.provenance);
    out += '\n';
  }
  return out;
}

std::vector<LandmarkPair> parse_landmarks(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool have_header = false;
  std::vector<LandmarkPair> out;
  std::set<int> ids;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto cols = split_csv(t);
    if (!have_header) {
      check_header(cols, source);
      have_header = true;
      continue;
    }
    const std::string where = source + " line " + std::to_string(line_no);
    if (cols.size() != 10)
      throw Error(ErrorCode::MalformedRow, where + ": expected 10 fields, found " + std::to_string(cols.size()));
    LandmarkPair p;
    long long id;
    if (!parse_int(cols[0], id)) throw Error(ErrorCode::MalformedRow, where + ": bad id '" + cols[0] + "'");
    p.id = static_cast<int>(id);
    double v[6];
    for (int n = 0; n < 6; ++n) {
      if (!parse_double(cols[n + 1], v[n]) || !std::isfinite(v[n]))
        throw Error(ErrorCode::MalformedRow, where + ": bad coordinate '" + cols[n + 1] + "'");
    }
    p.p1 = {v[0], v[1], v[2]};
    p.p2 = {v[3], v[4], v[5]};
    try {
      p.pair_type = parse_pair_type(cols[7]);
      p.status = parse_status(cols[8]);
      p.provenance = parse_provenance(cols[9]);
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedRow, where + ": " + e.what());
    }
    if (!ids.insert(p.id).second) throw Error(ErrorCode::MalformedRow, where + ": duplicate id " + cols[0]);
    out.push_back(p);
  }
  if (!have_header) throw Error(ErrorCode::MalformedRow, source + ": missing header line");
  return out;
}

std::vector<LandmarkPair> read_landmarks(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::MissingFile, path.string());
  return parse_landmarks(read_file(path), path.string());
}

void write_landmarks(const fs::path& path, const std::vector<LandmarkPair>& pairs) {
  write_file_atomic(path, format_landmarks(pairs));
}

CaseRecord load_case(const fs::path& dir, bool load_images) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::MissingFile, "case directory " + dir.string());
  CaseRecord rec;
  std::string image1 = "image1.nii.gz", image2 = "image2.nii.gz", table = "landmarks.csv";
  const fs::path manifest = dir / "case.json";
  if (fs::exists(manifest)) {
    json j;
    try {
      j = json::parse(read_file(manifest));
      rec.case_index = j.value("case_index", 0);
      rec.scan_interval_days = j.value("scan_interval_days", 0);
      image1 = j.value("image1", image1);
      image2 = j.value("image2", image2);
      table = j.value("landmarks", table);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::BadConfig, manifest.string() + ": " + e.what());
    }
    const std::string units = j.value("units", std::string("mm"));
    if (units != "mm") throw Error(ErrorCode::UnitMismatch, manifest.string() + ": units '" + units + "', expected mm");
  }
  rec.image1_path = dir / image1;
  rec.image2_path = dir / image2;
  rec.landmarks = read_landmarks(dir / table);
  if (load_images) {
    rec.image1 = read_scalar_volume(rec.image1_path);
    rec.image2 = read_scalar_volume(rec.image2_path);
  }
  return rec;
}

void save_case(const fs::path& dir, const CaseRecord& rec) {
  fs::create_directories(dir);
  const std::string image1 = rec.image1_path.empty() ? "image1.nii.gz" : rec.image1_path.filename().string();
  const std::string image2 = rec.image2_path.empty() ? "image2.nii.gz" : rec.image2_path.filename().string();
  json j = {{"case_index", rec.case_index},
            {"image1", image1},
            {"image2", image2},
            {"landmarks", "landmarks.csv"},
            {"scan_interval_days", rec.scan_interval_days},
            {"units", "mm"}};
  write_file_atomic(dir / "case.json", j.dump(2) + "\n");
  write_landmarks(dir / "landmarks.csv", rec.landmarks);
  if (rec.image1) write_volume(dir / image1, *rec.image1);
  if (rec.image2) write_volume(dir / image2, *rec.image2);
}

}  // namespace vm
