#include <cstring>
#include <fstream>

#include "doctest.h"
#include "support/check_code.hpp"
#include "support/fixtures.hpp"
#include "vesselmark/landmarks.hpp"
#include "vesselmark/volume_io.hpp"

using namespace vmtest;

namespace {

ScalarVolume ramp_volume() {
  const VolumeGeometry g({7, 5, 4}, {0.7, 0.9, 2.5}, {-10.5, 3.0, 42.0});
  ScalarVolume v(g);
  for (std::size_t n = 0; n < v.size(); ++n) v.values()[n] = static_cast<float>(n) * 0.5f - 3.0f;
  return v;
}

void check_same(const ScalarVolume& a, const ScalarVolume& b) {
  REQUIRE(a.geometry().same_as(b.geometry()));
  for (std::size_t n = 0; n < a.size(); ++n) CHECK(a.values()[n] == b.values()[n]);
}

}  // namespace

TEST_CASE("volume formats") {
  TempDir tmp("io");
  const ScalarVolume v = ramp_volume();
  CHECK(format_from_path("a/b.nii") == VolumeFormat::nifti);
  CHECK(format_from_path("a/b.NII.GZ") == VolumeFormat::nifti_gz);
  CHECK(format_from_path("b.rawh") == VolumeFormat::raw);
  CHECK_CODE(format_from_path("b.mha"), UnsupportedFormat);

  SUBCASE("scalar round trips") {
    for (const char* name : {"v.nii", "v.nii.gz", "v.rawh"}) {
      write_volume(tmp / name, v);
      check_same(read_scalar_volume(tmp / name), v);
    }
  }
  SUBCASE("gzip output is deterministic") {
    write_volume(tmp / "a.nii.gz", v);
    write_volume(tmp / "b.nii.gz", v);
    CHECK(read_file(tmp / "a.nii.gz") == read_file(tmp / "b.nii.gz"));
  }
  SUBCASE("vector field round trips") {
    VectorField f(v.geometry());
    for (std::size_t n = 0; n < f.size(); ++n) f.values()[n] = Vec3{double(n), -0.5 * n, 1.25};
    for (const char* name : {"f.nii.gz", "f.rawh"}) {
      write_volume(tmp / name, f);
      const VectorField back = read_vector_field(tmp / name);
      REQUIRE(back.geometry().same_as(f.geometry()));
      for (std::size_t n = 0; n < f.size(); ++n) CHECK(norm(back.values()[n] - f.values()[n]) == 0.0);
    }
    CHECK_CODE(read_vector_field(tmp / "missing.nii"), MissingFile);
    write_volume(tmp / "s.nii", v);
    CHECK_CODE(read_vector_field(tmp / "s.nii"), UnsupportedFormat);
  }
  SUBCASE("mask round trip") {
    MaskVolume m(v.geometry(), 0);
    m.at(1, 2, 3) = 1;
    write_volume(tmp / "m.nii.gz", m);
    const MaskVolume back = read_mask(tmp / "m.nii.gz");
    CHECK(back.at(1, 2, 3) == 1);
    CHECK(back.at(0, 0, 0) == 0);
  }
  SUBCASE("negative x axis is flipped on read") {
    write_volume(tmp / "v.nii", v);
    std::string bytes = read_file(tmp / "v.nii");
    float row[4];
    std::memcpy(row, bytes.data() + 280, sizeof row);
    const float sx = row[0];
    // Same voxels, stored with x running towards lower world coordinates.
    row[0] = -sx;
    row[3] = static_cast<float>(v.geometry().origin().x + sx * (v.dims()[0] - 1));
    std::memcpy(bytes.data() + 280, row, sizeof row);
    write_file_atomic(tmp / "flipped.nii", bytes);
    const ScalarVolume f = read_scalar_volume(tmp / "flipped.nii");
    CHECK(f.geometry().spacing().x == doctest::Approx(0.7));
    CHECK(f.geometry().origin().x == doctest::Approx(v.geometry().origin().x).epsilon(1e-6));
    CHECK(f.at(0, 1, 2) == v.at(6, 1, 2));
  }
  SUBCASE("missing and truncated files") {
    CHECK_CODE(read_scalar_volume(tmp / "nope.nii.gz"), MissingFile);
    write_file_atomic(tmp / "short.nii", std::string(100, '\0'));
    CHECK_CODE(read_scalar_volume(tmp / "short.nii"), UnsupportedFormat);
  }
}

TEST_CASE("landmark tables") {
  std::vector<LandmarkPair> pairs{
      {1, {1.5, -2.25, 3.0}, {0.1, 0.2, 0.3}, PairType::type1, PairStatus::normal, Provenance::sphere_grown_original},
      {7, {-1e-3, 2e5, 1.0 / 3}, {4, 5, 6}, PairType::type2, PairStatus::flagged, Provenance::manual},
  };
  SUBCASE("round trip is exact") {
    const auto back = parse_landmarks(format_landmarks(pairs), "t");
    REQUIRE(back.size() == 2);
    CHECK(back[1].p1.z == pairs[1].p1.z);
    CHECK(back[1].pair_type == PairType::type2);
    CHECK(back[1].status == PairStatus::flagged);
    CHECK(back[0].provenance == Provenance::sphere_grown_original);
  }
  SUBCASE("a row with five coordinates names its line") {
    const std::string text = std::string(kLandmarkHeader) + "\n1,1,2,3,4,5,6,type1,normal,manual\n2,1,2,3,4,5,type1,normal,manual\n";
    try {
      parse_landmarks(text, "case.csv");
      FAIL("accepted a short row");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MalformedRow);
      CHECK(std::string(e.what()).find("case.csv line 3") != std::string::npos);
    }
  }
  SUBCASE("bad values") {
    const std::string h = std::string(kLandmarkHeader) + "\n";
    CHECK_CODE(parse_landmarks(h + "1,1,2,x,4,5,6,type1,normal,manual\n", "t"), MalformedRow);
    CHECK_CODE(parse_landmarks(h + "1,1,2,3,4,5,6,type3,normal,manual\n", "t"), MalformedRow);
    CHECK_CODE(parse_landmarks(h + "1,1,2,3,4,5,6,type1,normal,manual\n1,1,2,3,4,5,6,type1,normal,manual\n", "t"),
               MalformedRow);
    CHECK_CODE(parse_landmarks("id,x1_cm,y1_cm,z1_cm,x2_cm,y2_cm,z2_cm,type,status,provenance\n", "t"), UnitMismatch);
    CHECK_CODE(parse_landmarks("", "t"), MalformedRow);
  }
}

TEST_CASE("case directories") {
  TempDir tmp("case");
  CaseRecord rec;
  rec.case_index = 24;
  rec.scan_interval_days = 92;
  rec.image1 = ramp_volume();
  rec.image2 = ramp_volume();
  Rng rng(4);
  for (int n = 0; n < 30; ++n) {
    rec.landmarks.push_back({n + 1,
                             {rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(-100, 100)},
                             {rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(-100, 100)}});
  }
  save_case(tmp / "c24", rec);
  SUBCASE("save then load is lossless") {
    const CaseRecord back = load_case(tmp / "c24");
    CHECK(back.case_index == 24);
    CHECK(back.scan_interval_days == 92);
    REQUIRE(back.landmarks.size() == 30);
    for (std::size_t n = 0; n < 30; ++n) {
      CHECK(distance(back.landmarks[n].p1, rec.landmarks[n].p1) < 1e-6);
      CHECK(distance(back.landmarks[n].p2, rec.landmarks[n].p2) < 1e-6);
    }
    REQUIRE(back.image1);
    check_same(*back.image1, *rec.image1);
  }
  SUBCASE("images are optional") {
    const CaseRecord back = load_case(tmp / "c24", false);
    CHECK_FALSE(back.image1.has_value());
  }
  SUBCASE("units and missing pieces") {
    write_file_atomic(tmp / "c24" / "case.json", R"({"case_index": 24, "units": "cm"})");
    CHECK_CODE(load_case(tmp / "c24"), UnitMismatch);
    CHECK_CODE(load_case(tmp / "nowhere"), MissingFile);
    fs::create_directories(tmp / "empty");
    CHECK_CODE(load_case(tmp / "empty"), MissingFile);
  }
}
