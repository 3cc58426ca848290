#include "pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <optional>
#include <sstream>

#include "vesselmark/dir_eval.hpp"
#include "vesselmark/format.hpp"
#include "vesselmark/landmarks.hpp"
#include "vesselmark/parallel.hpp"
#include "vesselmark/phantom.hpp"
#include "vesselmark/rng.hpp"
#include "vesselmark/sphere_growing.hpp"
#include "vesselmark/volume_io.hpp"

namespace vm::cli {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadConfig:
    case ErrorCode::InvalidParams:
    case ErrorCode::InvalidWindow:
    case ErrorCode::InvalidSigma: return kBadConfig;
    case ErrorCode::MissingFile:
    case ErrorCode::MalformedRow:
    case ErrorCode::UnitMismatch:
    case ErrorCode::UnsupportedFormat: return kMissingInput;
    case ErrorCode::GeometryMismatch: return kGeometryMismatch;
    default: return kFailure;
  }
}

namespace {

std::string triple(const PointMm& p) {
  return format_double(p.x) + ',' + format_double(p.y) + ',' + format_double(p.z);
}

struct PointJob {
  std::size_t pair_index;
  int image;  // 1 or 2
  PointMm seed;
  std::optional<RefineResult> result;
  std::string error;
};

int source_rank(SourceImage s) {
  switch (s) {
    case SourceImage::original: return 0;
    case SourceImage::vesselness_mask: return 1;
    case SourceImage::manual_mask: return 2;
  }
  return 0;
}

}  // namespace

int cmd_refine(const RunConfig& cfg, const fs::path& case_dir, const fs::path& seeds_file, const fs::path& out_dir,
               std::string& log) {
  const CaseRecord rec = load_case(case_dir, true);
  const std::vector<LandmarkPair> seeds = read_landmarks(seeds_file);

  std::vector<PointJob> jobs;
  for (std::size_t n = 0; n < seeds.size(); ++n) {
    jobs.push_back({n, 1, seeds[n].p1, std::nullopt, {}});
    jobs.push_back({n, 2, seeds[n].p2, std::nullopt, {}});
  }
  parallel_for(0, static_cast<int>(jobs.size()), [&](int j) {
    PointJob& job = jobs[j];
    const ScalarVolume& img = job.image == 1 ? *rec.image1 : *rec.image2;
    try {
      job.result = refine_with_fallback(img, job.seed, cfg.grow, cfg.vesselness, cfg.region_grow);
    } catch (const Error& e) {
      job.error = e.what();
    }
  });

  std::vector<LandmarkPair> refined = seeds;
  std::ostringstream report;
  report << "id,image,seed_x_mm,seed_y_mm,seed_z_mm,x_mm,y_mm,z_mm,outcome,source,message\n";
  int converged = 0, failed = 0;
  for (std::size_t n = 0; n < seeds.size(); ++n) {
    const PointJob& a = jobs[2 * n];
    const PointJob& b = jobs[2 * n + 1];
    bool pair_ok = true;
    int rank = 0;
    for (const PointJob* job : {&a, &b}) {
      const bool ok = job->result && job->result->trace.outcome == GrowOutcome::converged;
      pair_ok = pair_ok && ok;
      const PointMm out = ok ? job->result->point : job->seed;
      if (ok) {
        rank = std::max(rank, source_rank(job->result->trace.source));
        (job->image == 1 ? refined[n].p1 : refined[n].p2) = out;
        ++converged;
      } else {
        ++failed;
      }
      std::string outcome = "error", source = "", message = job->error;
      if (job->result) {
        outcome = std::string(to_string(job->result->trace.outcome));
        source = std::string(to_string(job->result->trace.source));
        const std::string trace_name =
            "traces/" + std::to_string(seeds[n].id) + "_image" + std::to_string(job->image) + ".csv";
        write_file_atomic(out_dir / trace_name, format_trace(job->result->trace, cfg.grow));
      }
      std::replace(message.begin(), message.end(), ',', ';');
      report << seeds[n].id << ',' << job->image << ',' << triple(job->seed) << ',' << triple(out) << ',' << outcome
             << ',' << source << ',' << message << '\n';
    }
    if (pair_ok) {
      const SourceImage src = rank == 0 ? SourceImage::original
                                        : (rank == 1 ? SourceImage::vesselness_mask : SourceImage::manual_mask);
      refined[n].provenance = provenance_of(src);
    } else {
      refined[n].provenance = Provenance::manual;
    }
  }
  write_landmarks(out_dir / "refined.csv", refined);
  write_file_atomic(out_dir / "refine_report.csv", report.str());
  log += "refined " + std::to_string(converged) + " points, " + std::to_string(failed) +
         " left at their seeds (see refine_report.csv)\n";
  return kOk;
}

int cmd_phantom(const RunConfig& cfg, const fs::path& image_path, const fs::path& landmarks_file, int n,
                const fs::path& out_dir, std::string& log) {
  if (n < 1) throw Error(ErrorCode::BadConfig, "phantom count must be >= 1");
  const ScalarVolume image = read_scalar_volume(image_path);
  const std::vector<LandmarkPair> landmarks = read_landmarks(landmarks_file);
  if (landmarks.empty()) throw Error(ErrorCode::MissingFile, landmarks_file.string() + " holds no landmarks");

  // Seeded shuffle; cycles through the list again when n exceeds it.
  std::vector<std::size_t> order(landmarks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(mix_seed(cfg.seed, 0));
  for (std::size_t i = order.size(); i > 1; --i) 
    std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);

  std::ostringstream suite;
  suite << "index,landmark_id,seed,x1_mm,y1_mm,z1_mm,x2_mm,y2_mm,z2_mm,status\n";
  int written = 0;
  for (int i = 0; i < n; ++i) {
    const LandmarkPair& lm = landmarks[order[i % order.size()]];
    const std::uint64_t seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(i) + 1);
    char name[32];
    std::snprintf(name, sizeof name, "phantom_%03d", i);
    try {
      const PhantomPair pair = make_phantom_pair(image, lm.p1, seed, cfg.phantom);
      const fs::path dir = out_dir / name;
      write_volume(dir / "patch1.nii.gz", pair.patch1);
      write_volume(dir / "patch2.nii.gz", pair.patch2);
      write_file_atomic(dir / "manifest.txt", format_manifest(pair));
      suite << i << ',' << lm.id << ',' << seed << ',' << triple(pair.gt_landmark1) << ','
            << triple(pair.gt_landmark2) << ",ok\n";
      ++written;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::OutOfBounds && e.code() != ErrorCode::NoConvergence) throw;
      suite << i << ',' << lm.id << ',' << seed << ",,,,,,," << to_string(e.code()) << '\n';
    }
  }
  write_file_atomic(out_dir / "suite.csv", suite.str());
  log += "wrote " + std::to_string(written) + " of " + std::to_string(n) + " phantom pairs to " + out_dir.string() + "\n";
  return kOk;
}

int cmd_evaluate(const RunConfig&, const fs::path& case_dir, const fs::path& dvf_file, bool include_flagged,
                 const fs::path& out_dir, std::string& log) {
  const CaseRecord rec = load_case(case_dir, false);
  if (!fs::exists(dvf_file)) throw Error(ErrorCode::MissingFile, dvf_file.string());
  const VectorField dvf = read_vector_field(dvf_file);
  TREReport report;
  try {
    report = compute_tre(rec.landmarks, dvf, include_flagged);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::OutOfBounds) {
      log += std::string(e.what()) + "\n";
      return kOutsideDvf;
    }
    throw;
  }
  write_file_atomic(out_dir / "tre.txt", format_tre_text(report));
  write_file_atomic(out_dir / "tre.json", format_tre_json(report));
  char buf[160];
  std::snprintf(buf, sizeof buf, "TRE over %zu pairs: mean %.4f mm, sd %.4f mm\n", report.summary.n, report.summary.mean,
                report.summary.sd);
  log += buf;
  return kOk;
}

int cmd_overwrite(const RunConfig& cfg, const fs::path& image_path,
                  const std::vector<std::pair<std::string, fs::path>>& masks, const fs::path& output, std::string& log) {
  const ScalarVolume image = read_scalar_volume(image_path);
  std::vector<OrganMask> list;
  for (const auto& [name, path] : masks) {
    MaskVolume m = read_mask(path);
    if (!m.geometry().same_as(image.geometry())) {
      log += "mask '" + name + "' (" + path.string() + ") does not match the image geometry\n";
      return kGeometryMismatch;
    }
    list.push_back({name, std::move(m), cfg.organ_fill(name)});
  }
  const ScalarVolume out = overwrite_organ_intensities(image, OrganMaskSet(std::move(list)));
  write_volume(output, out);
  std::size_t changed = 0;
  for (std::size_t n = 0; n < out.size(); ++n) changed += out.values()[n] != image.values()[n];
  log += "overwrote " + std::to_string(changed) + " voxels; wrote " + output.string() + "\n";
  return kOk;
}

int cmd_census(const RunConfig&, const fs::path& dataset_dir, const fs::path& out_dir, std::string& log) {
  if (!fs::is_directory(dataset_dir)) throw Error(ErrorCode::MissingFile, "dataset directory " + dataset_dir.string());
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(dataset_dir)) {
    if (entry.is_directory() && (fs::exists(entry.path() / "landmarks.csv") || fs::exists(entry.path() / "case.json")))
      dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<CaseRecord> cases;
  for (const auto& d : dirs) {
    CaseRecord rec = load_case(d, false);
    if (rec.case_index == 0) {
      // Fall back to the trailing number of the directory name.
      const std::string name = d.filename().string();
      std::size_t pos = name.size();
      while (pos > 0 && std::isdigit(static_cast<unsigned char>(name[pos - 1]))) --pos;
      if (pos < name.size()) rec.case_index = std::stoi(name.substr(pos));
    }
    cases.push_back(std::move(rec));
  }
  const CensusReport report = dataset_census(cases);
  const std::string text = format_census_text(report);
  write_file_atomic(out_dir / "census.txt", text);
  write_file_atomic(out_dir / "census.json", format_census_json(report));
  log += text;
  return kOk;
}

}  // namespace vm::cli
