#include <cstdlib>
#include <sstream>

#include "doctest.h"
#include "pipeline.hpp"
#include "support/check_code.hpp"
#include "support/fixtures.hpp"
#include "vesselmark/dir_eval.hpp"
#include "vesselmark/phantom.hpp"
#include "vesselmark/volume_io.hpp"

using namespace vmtest;
using namespace vm::cli;

namespace {

// Runs the command-line binary and returns its exit status.
int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(VESSELMARK_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::istringstream in(read_file(p));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cols.push_back(cell);
    if (!line.empty() && line.back() == ',') cols.push_back("");
    rows.push_back(cols);
  }
  return rows;
}

struct SyntheticCase {
  MultiYCase data;
  fs::path dir;
  fs::path seeds;
};

SyntheticCase write_case(const TempDir& tmp, int count) {
  SyntheticCase c{make_multi_y_case(count, 77), tmp / "case", tmp / "seeds.csv"};
  CaseRecord rec;
  rec.case_index = 3;
  rec.image1 = c.data.image1;
  rec.image2 = c.data.image2;
  rec.landmarks = seeds_near(c.data, 78);
  save_case(c.dir, rec);
  write_landmarks(c.seeds, rec.landmarks);
  return c;
}

}  // namespace

TEST_CASE("refine command") {
  TempDir tmp("refine");
  const SyntheticCase c = write_case(tmp, 10);
  const std::string image_before = read_file(c.dir / "image1.nii.gz");
  std::string log;
  REQUIRE(cmd_refine(RunConfig{}, c.dir, c.seeds, tmp / "out", log) == kOk);

  const auto refined = read_landmarks(tmp / "out" / "refined.csv");
  REQUIRE(refined.size() == 10);
  for (std::size_t n = 0; n < 10; ++n) {
    CHECK(distance(refined[n].p1, c.data.junctions[n]) <= 2 * 0.7);
    CHECK(distance(refined[n].p2, translate(c.data.junctions[n], c.data.shift)) <= 2 * 0.7);
    CHECK(refined[n].provenance == Provenance::sphere_grown_original);
  }
  const auto report = read_csv(tmp / "out" / "refine_report.csv");
  REQUIRE(report.size() == 21);
  for (std::size_t r = 1; r < report.size(); ++r) CHECK(report[r][8] == "converged");

  const std::string trace = read_file(tmp / "out" / "traces" / "1_image1.csv");
  CHECK(trace.find("lambda1=0.2 lambda2=0.3") != std::string::npos);
  CHECK(trace.find("iterations=30") != std::string::npos);
  // Inputs are left alone.
  CHECK(read_file(c.dir / "image1.nii.gz") == image_before);
}

TEST_CASE("refine isolates a bad seed") {
  TempDir tmp("refine_bad");
  const SyntheticCase c = write_case(tmp, 2);
  auto seeds = read_landmarks(c.seeds);
  seeds[1].p2 = {-500, 0, 0};
  write_landmarks(tmp / "bad.csv", seeds);
  CHECK(run_cli("refine " + c.dir.string() + " " + (tmp / "bad.csv").string() + " --out " + (tmp / "o").string(),
                tmp / "log") == 0);
  const auto report = read_csv(tmp / "o" / "refine_report.csv");
  REQUIRE(report.size() == 5);
  CHECK(report[4][8] == "error");
  CHECK(report[4][10].find("OutOfBounds") != std::string::npos);
  CHECK(report[1][8] == "converged");
  const auto refined = read_landmarks(tmp / "o" / "refined.csv");
  CHECK(refined[1].provenance == Provenance::manual);
  CHECK(distance(refined[1].p2, seeds[1].p2) == 0.0);
}

TEST_CASE("phantom command") {
  TempDir tmp("phantom");
  const SyntheticCase c = write_case(tmp, 2);
  RunConfig cfg;
  cfg.phantom = {20.0, 0.7};
  std::string log;
  REQUIRE(cmd_phantom(cfg, c.dir / "image1.nii.gz", c.seeds, 3, tmp / "a", log) == kOk);
  REQUIRE(cmd_phantom(cfg, c.dir / "image1.nii.gz", c.seeds, 3, tmp / "b", log) == kOk);
  for (int i = 0; i < 3; ++i) {
    const fs::path m = fs::path("phantom_00" + std::to_string(i)) / "manifest.txt";
    CHECK(read_file(tmp / "a" / m.string()) == read_file(tmp / "b" / m.string()));
  }
  CHECK(read_file(tmp / "a" / "suite.csv") == read_file(tmp / "b" / "suite.csv"));

  // The manifest alone re-derives the second ground-truth point.
  const std::string manifest = read_file(tmp / "a" / "phantom_001" / "manifest.txt");
  const SyntheticTransform t = parse_manifest_transform(manifest);
  const auto suite = read_csv(tmp / "a" / "suite.csv");
  const PointMm gt1{std::stod(suite[2][3]), std::stod(suite[2][4]), std::stod(suite[2][5])};
  const PointMm gt2{std::stod(suite[2][6]), std::stod(suite[2][7]), std::stod(suite[2][8])};
  CHECK(distance(map_point_forward(t, gt1), gt2) == 0.0);

  cfg.seed += 1;
  REQUIRE(cmd_phantom(cfg, c.dir / "image1.nii.gz", c.seeds, 3, tmp / "c", log) == kOk);
  CHECK(read_file(tmp / "a" / "suite.csv") != read_file(tmp / "c" / "suite.csv"));

  CHECK(run_cli("phantom " + (tmp / "missing.nii.gz").string() + " " + c.seeds.string() + " -n 2 --out " +
                    (tmp / "d").string(),
                tmp / "log") == kMissingInput);
}

TEST_CASE("evaluate command") {
  TempDir tmp("evaluate");
  const VolumeGeometry g = cube_grid(41, 1.0, {-20, -20, -20});
  std::string log;
  SUBCASE("zero field on coincident pairs") {
    CaseRecord rec;
    for (int n = 0; n < 30; ++n) rec.landmarks.push_back({n + 1, {n * 0.5 - 7, 1, 2}, {n * 0.5 - 7, 1, 2}});
    save_case(tmp / "c", rec);
    write_volume(tmp / "zero.nii.gz", VectorField(g));
    REQUIRE(cmd_evaluate(RunConfig{}, tmp / "c", tmp / "zero.nii.gz", false, tmp / "o", log) == kOk);
    CHECK(read_file(tmp / "o" / "tre.json").find("\"n\": 30") != std::string::npos);
    CHECK(read_file(tmp / "o" / "tre.json").find("\"mean_mm\": 0.0") != std::string::npos);
  }
  SUBCASE("DVF sampled from a known transform") {
    const SyntheticTransform t = random_transform(5, {0, 0, 0});
    VectorField dvf(g);
    for (int k = 0; k < 41; ++k)
      for (int j = 0; j < 41; ++j)
        for (int i = 0; i < 41; ++i) {
          const PointMm p = g.world_of({double(i), double(j), double(k)});
          dvf.at(i, j, k) = offset(p, map_point_forward(t, p));
        }
    write_volume(tmp / "dvf.rawh", dvf);
    CaseRecord rec;
    Rng rng(6);
    for (int n = 0; n < 25; ++n) {
      const PointMm p{rng.uniform(-15, 15), rng.uniform(-15, 15), rng.uniform(-15, 15)};
      rec.landmarks.push_back({n + 1, p, map_point_forward(t, p)});
    }
    save_case(tmp / "c", rec);
    REQUIRE(cmd_evaluate(RunConfig{}, tmp / "c", tmp / "dvf.rawh", false, tmp / "o", log) == kOk);
    const TREReport r = compute_tre(rec.landmarks, read_vector_field(tmp / "dvf.rawh"));
    CHECK(r.summary.mean < 0.1);
  }
  SUBCASE("landmarks outside the field") {
    CaseRecord rec;
    rec.landmarks = {{4, {0, 0, 0}, {0, 0, 0}}, {9, {30, 0, 0}, {30, 0, 0}}};
    save_case(tmp / "c", rec);
    write_volume(tmp / "zero.nii.gz", VectorField(g));
    CHECK(run_cli("evaluate " + (tmp / "c").string() + " " + (tmp / "zero.nii.gz").string() + " --out " +
                      (tmp / "o").string(),
                  tmp / "log") == kOutsideDvf);
    CHECK(read_file(tmp / "log").find("9") != std::string::npos);
    CHECK(run_cli("evaluate " + (tmp / "c").string() + " " + (tmp / "none.nii.gz").string(), tmp / "log") ==
          kMissingInput);
  }
  SUBCASE("flagged pairs on request") {
    CaseRecord rec;
    rec.landmarks = {{1, {0, 0, 0}, {0, 0, 0}}, {2, {1, 0, 0}, {1, 0, 3}, PairType::type1, PairStatus::flagged}};
    save_case(tmp / "c", rec);
    write_volume(tmp / "zero.nii.gz", VectorField(g));
    REQUIRE(run_cli("--include-flagged evaluate " + (tmp / "c").string() + " " + (tmp / "zero.nii.gz").string() +
                        " --out " + (tmp / "o").string(),
                    tmp / "log") == 0);
    CHECK(read_file(tmp / "o" / "tre.json").find("\"n\": 2") != std::string::npos);
  }
}

TEST_CASE("overwrite command") {
  TempDir tmp("overwrite");
  const VolumeGeometry g({20, 20, 20}, {0.8, 0.8, 1.5}, {1, 2, 3});
  ScalarVolume img(g);
  Rng rng(9);
  for (auto& v : img.values()) v = static_cast<float>(rng.uniform(100, 400));
  write_volume(tmp / "img.nii.gz", img);
  const std::array<std::string, 4> organs{"stomach", "small_intestine", "duodenum", "colon"};
  std::size_t union_count = 0;
  std::vector<char> any(img.size(), 0);
  for (int o = 0; o < 4; ++o) {
    MaskVolume m(g, 0);
    for (int k = 0; k < 20; ++k)
      for (int j = 0; j < 20; ++j)
        for (int i = 3 * o; i < 3 * o + 5; ++i) m.at(i, j, k) = 1;
    for (std::size_t n = 0; n < m.size(); ++n) any[n] |= m.values()[n];
    write_volume(tmp / (organs[o] + ".nii.gz"), m);
  }
  for (char a : any) union_count += a;
  std::string log;
  SUBCASE("no masks leaves the payload intact") {
    REQUIRE(cmd_overwrite(RunConfig{}, tmp / "img.nii.gz", {}, tmp / "out.nii.gz", log) == kOk);
    CHECK(read_file(tmp / "out.nii.gz") == read_file(tmp / "img.nii.gz"));
  }
  SUBCASE("stomach only") {
    REQUIRE(cmd_overwrite(RunConfig{}, tmp / "img.nii.gz", {{"stomach", tmp / "stomach.nii.gz"}}, tmp / "out.nii.gz",
                          log) == kOk);
    const ScalarVolume out = read_scalar_volume(tmp / "out.nii.gz");
    std::size_t changed = 0;
    for (std::size_t n = 0; n < out.size(); ++n) changed += out.values()[n] != img.values()[n];
    CHECK(changed == 5 * 20 * 20);
    CHECK(out.at(0, 0, 0) == 0.0f);
  }
  SUBCASE("four organs, later masks win") {
    std::string args = "overwrite " + (tmp / "img.nii.gz").string() + " " + (tmp / "out.nii.gz").string();
    for (const auto& o : organs) args += " --mask " + o + "=" + (tmp / (o + ".nii.gz")).string();
    REQUIRE(run_cli(args, tmp / "log") == 0);
    const ScalarVolume out = read_scalar_volume(tmp / "out.nii.gz");
    std::size_t changed = 0;
    for (std::size_t n = 0; n < out.size(); ++n) changed += out.values()[n] != img.values()[n];
    CHECK(changed == union_count);
    CHECK(out.at(3, 0, 0) == 20.0f);   // stomach and small intestine overlap
    CHECK(out.at(10, 0, 0) == 60.0f);  // duodenum and colon overlap
  }
  SUBCASE("geometry mismatch") {
    write_volume(tmp / "odd.nii.gz", MaskVolume(VolumeGeometry({20, 20, 19}, {0.8, 0.8, 1.5}, {1, 2, 3}), 1));
    CHECK(run_cli("overwrite " + (tmp / "img.nii.gz").string() + " " + (tmp / "o.nii.gz").string() +
                      " --mask colon=" + (tmp / "odd.nii.gz").string(),
                  tmp / "log") == kGeometryMismatch);
    CHECK_FALSE(fs::exists(tmp / "o.nii.gz"));
  }
}

TEST_CASE("census command") {
  TempDir tmp("census");
  std::string log;
  SUBCASE("missing dataset") {
    CHECK(run_cli("census " + (tmp / "nope").string(), tmp / "log") == kMissingInput);
  }
  SUBCASE("empty dataset") {
    fs::create_directories(tmp / "data");
    REQUIRE(cmd_census(RunConfig{}, tmp / "data", tmp / "o", log) == kOk);
    CHECK(log.find("no cases found") != std::string::npos);
  }
  SUBCASE("a case matching its published row") {
    CaseRecord rec;
    rec.case_index = 24;
    for (int n = 0; n < 30; ++n) rec.landmarks.push_back({n + 1, {0, 0, 0}, {0, 0, 0}});
    save_case(tmp / "data" / "case24", rec);
    REQUIRE(cmd_census(RunConfig{}, tmp / "data", tmp / "o", log) == kOk);
    CHECK(log.find("24,30,30,0,30,0") != std::string::npos);
    CHECK(log.find("case 24:") == std::string::npos);
  }
}

TEST_CASE("configuration errors exit with status 2") {
  TempDir tmp("cfg");
  write_file_atomic(tmp / "bad.conf", "grow.lambda1 = 0.2\nbogus = 1\n");
  CHECK(run_cli("--config " + (tmp / "bad.conf").string() + " config", tmp / "log") == kBadConfig);
  CHECK(read_file(tmp / "log").find("line 2") != std::string::npos);
  CHECK(run_cli("--config " + (tmp / "none.conf").string() + " config", tmp / "log") == kBadConfig);
  CHECK(run_cli("frobnicate", tmp / "log") == kBadConfig);
  CHECK(run_cli("config", tmp / "log") == 0);
  CHECK(read_file(tmp / "log").find("grow.lambda1 = 0.2") != std::string::npos);
}
