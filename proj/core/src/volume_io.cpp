#include "vesselmark/volume_io.hpp"

#include <cctype>
#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace vm {

namespace fs = std::filesystem;

namespace {

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// NIfTI-1 header; natural alignment gives exactly 348 bytes.
struct Nifti1Header {
  std::int32_t sizeof_hdr;
  char data_type[10];
  char db_name[18];
  std::int32_t extents;
  std::int16_t session_error;
  char regular;
  char dim_info;
  std::int16_t dim[8];
  float intent_p1, intent_p2, intent_p3;
  std::int16_t intent_code;
  std::int16_t datatype;
  std::int16_t bitpix;
  std::int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope;
  float scl_inter;
  std::int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max, cal_min;
  float slice_duration;
  float toffset;
  std::int32_t glmax, glmin;
  char descrip[80];
  char aux_file[24];
  std::int16_t qform_code;
  std::int16_t sform_code;
  float quatern_b, quatern_c, quatern_d;
  float qoffset_x, qoffset_y, qoffset_z;
  float srow_x[4];
  float srow_y[4];
  float srow_z[4];
  char intent_name[16];
  char magic[4];
};
static_assert(sizeof(Nifti1Header) == 348);

constexpr std::int16_t kDtUint8 = 2, kDtInt16 = 4, kDtInt32 = 8, kDtFloat32 = 16, kDtFloat64 = 64,
                       kDtInt8 = 256, kDtUint16 = 512, kDtUint32 = 768;
constexpr std::int16_t kIntentVector = 1007;

template <typename T>
T byteswap_value(T v) {
  std::array<unsigned char, sizeof(T)> b;
  std::memcpy(b.data(), &v, sizeof(T));
  std::reverse(b.begin(), b.end());
  std::memcpy(&v, b.data(), sizeof(T));
  return v;
}

void swap_header(Nifti1Header& h) {
  auto sw = [](auto& v) { v = byteswap_value(v); };
  sw(h.sizeof_hdr);
  sw(h.extents);
  sw(h.session_error);
  for (auto& d : h.dim) sw(d);
  sw(h.intent_p1);
  sw(h.intent_p2);
  sw(h.intent_p3);
  sw(h.intent_code);
  sw(h.datatype);
  sw(h.bitpix);
  sw(h.slice_start);
  for (auto& p : h.pixdim) sw(p);
  sw(h.vox_offset);
  sw(h.scl_slope);
  sw(h.scl_inter);
  sw(h.slice_end);
  sw(h.cal_max);
  sw(h.cal_min);
  sw(h.slice_duration);
  sw(h.toffset);
  sw(h.glmax);
  sw(h.glmin);
  sw(h.qform_code);
  sw(h.sform_code);
  sw(h.quatern_b);
  sw(h.quatern_c);
  sw(h.quatern_d);
  sw(h.qoffset_x);
  sw(h.qoffset_y);
  sw(h.qoffset_z);
  for (auto& v : h.srow_x) sw(v);
  for (auto& v : h.srow_y) sw(v);
  for (auto& v : h.srow_z) sw(v);
}

std::string read_gz(const fs::path& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::string out;
  char buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
  const bool failed = n < 0;
  gzclose(f);
  if (failed) throw Error(ErrorCode::Io, "corrupt gzip stream in " + path.string());
  return out;
}

std::string gzip_bytes(const std::string& raw) {
  z_stream zs{};
  if (deflateInit2(&zs, 6, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    throw Error(ErrorCode::Io, "deflateInit2 failed");
  std::string out;
  out.resize(deflateBound(&zs, raw.size()));
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(raw.data()));
  zs.avail_in = static_cast<uInt>(raw.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  out.resize(zs.total_out);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error(ErrorCode::Io, "gzip compression failed");
  return out;
}

// Decoded NIfTI content: axis-aligned geometry plus voxel values (x fastest,
// then y, z, then component).
struct Decoded {
  VolumeGeometry geometry;
  int components = 1;
  std::vector<double> values;
};

double read_element(const char* p, std::int16_t dt, bool swap) {
  auto get = [&](auto tag) {
    using T = decltype(tag);
    T v;
    std::memcpy(&v, p, sizeof(T));
    if (swap) v = byteswap_value(v);
    return static_cast<double>(v);
  };
  switch (dt) {
    case kDtUint8: return get(std::uint8_t{});
    case kDtInt8: return get(std::int8_t{});
    case kDtInt16: return get(std::int16_t{});
    case kDtUint16: return get(std::uint16_t{});
    case kDtInt32: return get(std::int32_t{});
    case kDtUint32: return get(std::uint32_t{});
    case kDtFloat32: return get(float{});
    case kDtFloat64: return get(double{});
  }
  throw Error(ErrorCode::UnsupportedFormat, "NIfTI datatype " + std::to_string(dt));
}

int element_size(std::int16_t dt) {
  switch (dt) {
    case kDtUint8:
    case kDtInt8: return 1;
    case kDtInt16:
    case kDtUint16: return 2;
    case kDtInt32:
    case kDtUint32:
    case kDtFloat32: return 4;
    case kDtFloat64: return 8;
  }
  throw Error(ErrorCode::UnsupportedFormat, "NIfTI datatype " + std::to_string(dt));
}

using Mat3 = std::array<std::array<double, 3>, 3>;

Decoded decode_nifti(const std::string& bytes, const std::string& name) {
  if (bytes.size() < sizeof(Nifti1Header)) throw Error(ErrorCode::UnsupportedFormat, name + ": truncated header");
  Nifti1Header h;
  std::memcpy(&h, bytes.data(), sizeof h);
  bool swap = false;
  if (h.sizeof_hdr != 348) {
    swap_header(h);
    swap = true;
    if (h.sizeof_hdr != 348) throw Error(ErrorCode::UnsupportedFormat, name + ": not a NIfTI-1 file");
  }
  if (std::memcmp(h.magic, "n+1", 4) != 0)
    throw Error(ErrorCode::UnsupportedFormat, name + ": only single-file NIfTI-1 (n+1) is supported");
  const int ndim = h.dim[0];
  if (ndim < 1 || ndim > 7) throw Error(ErrorCode::UnsupportedFormat, name + ": bad dim[0]");
  Dims d{1, 1, 1};
  for (int a = 0; a < 3; ++a) d[a] = a < ndim ? std::max<int>(1, h.dim[a + 1]) : 1;
  int extra = 1;
  for (int a = 4; a <= ndim; ++a) extra *= std::max<int>(1, h.dim[a]);

  // Spatial unit scale to mm.
  double unit = 1.0;
  switch (h.xyzt_units & 0x07) {
    case 1: unit = 1000.0; break;
    case 3: unit = 0.001; break;
    default: break;
  }

  Mat3 m{};
  std::array<double, 3> t{};
  if (h.sform_code > 0) {
    const float* rows[3] = {h.srow_x, h.srow_y, h.srow_z};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m[r][c] = rows[r][c];
      t[r] = rows[r][3];
    }
  } else if (h.qform_code > 0) {
    const double b = h.quatern_b, c = h.quatern_c, dq = h.quatern_d;
    const double a = std::sqrt(std::max(0.0, 1.0 - (b * b + c * c + dq * dq)));
    const Mat3 R{{{a * a + b * b - c * c - dq * dq, 2 * (b * c - a * dq), 2 * (b * dq + a * c)},
                  {2 * (b * c + a * dq), a * a + c * c - b * b - dq * dq, 2 * (c * dq - a * b)},
                  {2 * (b * dq - a * c), 2 * (c * dq + a * b), a * a + dq * dq - c * c - b * b}}};
    const double qfac = h.pixdim[0] < 0 ? -1.0 : 1.0;
    const double s[3] = {h.pixdim[1], h.pixdim[2], qfac * h.pixdim[3]};
    for (int r = 0; r < 3; ++r)
      for (int cc = 0; cc < 3; ++cc) m[r][cc] = R[r][cc] * s[cc];
    t = {h.qoffset_x, h.qoffset_y, h.qoffset_z};
  } else {
    for (int a = 0; a < 3; ++a) m[a][a] = h.pixdim[a + 1] > 0 ? h.pixdim[a + 1] : 1.0;
  }

  // Require a diagonal direction matrix; flip negative axes.
  std::array<double, 3> step{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      if (r == c) continue;
      if (std::abs(m[r][c]) > 1e-6 * std::max(1.0, std::abs(m[c][c])))
        throw Error(ErrorCode::UnsupportedFormat, name + ": oblique or permuted orientation is not supported");
    }
    step[r] = m[r][r] * unit;
    t[r] *= unit;
    if (step[r] == 0.0) throw Error(ErrorCode::UnsupportedFormat, name + ": zero voxel spacing");
  }
  const std::array<bool, 3> flip{step[0] < 0, step[1] < 0, step[2] < 0};
  PointMm origin{t[0], t[1], t[2]};
  for (int a = 0; a < 3; ++a) {
    if (flip[a]) origin[a] = t[a] + (d[a] - 1) * step[a];
  }
  Decoded out;
  out.geometry = VolumeGeometry(d, {std::abs(step[0]), std::abs(step[1]), std::abs(step[2])}, origin);
  out.components = extra;

  const int es = element_size(h.datatype);
  const std::size_t offset = static_cast<std::size_t>(h.vox_offset);
  const std::size_t n3 = out.geometry.voxel_count();
  const std::size_t total = n3 * static_cast<std::size_t>(extra);
  if (bytes.size() < offset + total * es) throw Error(ErrorCode::UnsupportedFormat, name + ": truncated voxel data");
  const double slope = (h.scl_slope != 0.0f && std::isfinite(h.scl_slope)) ? h.scl_slope : 1.0;
  const double inter = std::isfinite(h.scl_inter) ? h.scl_inter : 0.0;
  out.values.resize(total);
  const char* base = bytes.data() + offset;
  for (int comp = 0; comp < extra; ++comp) {
    for (int k = 0; k < d[2]; ++k) {
      for (int j = 0; j < d[1]; ++j) {
        for (int i = 0; i < d[0]; ++i) {
          const std::size_t src = out.geometry.index(i, j, k) + n3 * comp;
          const int ii = flip[0] ? d[0] - 1 - i : i;
          const int jj = flip[1] ? d[1] - 1 - j : j;
          const int kk = flip[2] ? d[2] - 1 - k : k;
          const std::size_t dst = out.geometry.index(ii, jj, kk) + n3 * comp;
          out.values[dst] = read_element(base + src * es, h.datatype, swap) * slope + inter;
        }
      }
    }
  }
  return out;
}

std::string encode_nifti(const VolumeGeometry& g, int components, std::int16_t datatype,
                         const std::string& payload) {
  Nifti1Header h{};
  h.sizeof_hdr = 348;
  h.regular = 'r';
  const Dims& d = g.dims();
  h.dim[0] = components > 1 ? 5 : 3;
  h.dim[1] = static_cast<std::int16_t>(d[0]);
  h.dim[2] = static_cast<std::int16_t>(d[1]);
  h.dim[3] = static_cast<std::int16_t>(d[2]);
  h.dim[4] = 1;
  h.dim[5] = static_cast<std::int16_t>(components);
  h.dim[6] = h.dim[7] = 1;
  if (components > 1) h.intent_code = kIntentVector;
  h.datatype = datatype;
  h.bitpix = static_cast<std::int16_t>(8 * element_size(datatype));
  h.pixdim[0] = 1.0f;
  h.pixdim[1] = static_cast<float>(g.spacing().x);
  h.pixdim[2] = static_cast<float>(g.spacing().y);
  h.pixdim[3] = static_cast<float>(g.spacing().z);
  h.pixdim[4] = h.pixdim[5] = 1.0f;
  h.vox_offset = 352.0f;
  h.scl_slope = 1.0f;
  h.xyzt_units = 2;  // mm
  std::snprintf(h.descrip, sizeof h.descrip, "vesselmark");
  h.qform_code = 1;
  h.sform_code = 1;
  h.qoffset_x = static_cast<float>(g.origin().x);
  h.qoffset_y = static_cast<float>(g.origin().y);
  h.qoffset_z = static_cast<float>(g.origin().z);
  h.srow_x[0] = h.pixdim[1];
  h.srow_y[1] = h.pixdim[2];
  h.srow_z[2] = h.pixdim[3];
  h.srow_x[3] = h.qoffset_x;
  h.srow_y[3] = h.qoffset_y;
  h.srow_z[3] = h.qoffset_z;
  std::memcpy(h.magic, "n+1\0", 4);
  if constexpr (std::endian::native == std::endian::big) swap_header(h);

  std::string out(352, '\0');
  std::memcpy(out.data(), &h, sizeof h);
  out += payload;
  return out;
}

template <typename T>
void append_le(std::string& out, T v) {
  if constexpr (std::endian::native == std::endian::big) v = byteswap_value(v);
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.append(b, sizeof(T));
}

template <typename T>
T read_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) v = byteswap_value(v);
  return v;
}

// ---- raw sidecar format ----

struct RawHeader {
  VolumeGeometry geometry;
  int components = 1;
  fs::path data;
};

RawHeader parse_raw_header(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    std::string rest;
    std::getline(ls, rest);
    kv[key] = rest;
  }
  auto need = [&](const std::string& key) -> std::istringstream {
    auto it = kv.find(key);
    if (it == kv.end()) throw Error(ErrorCode::UnsupportedFormat, path.string() + ": missing '" + key + "'");
    return std::istringstream(it->second);
  };
  RawHeader r;
  Dims d;
  Vec3 sp;
  PointMm org;
  {
    auto s = need("dims");
    if (!(s >> d[0] >> d[1] >> d[2])) throw Error(ErrorCode::UnsupportedFormat, path.string() + ": bad dims");
  }
  {
    auto s = need("spacing_mm");
    if (!(s >> sp.x >> sp.y >> sp.z)) throw Error(ErrorCode::UnsupportedFormat, path.string() + ": bad spacing_mm");
  }
  {
    auto s = need("origin_mm");
    if (!(s >> org.x >> org.y >> org.z)) throw Error(ErrorCode::UnsupportedFormat, path.string() + ": bad origin_mm");
  }
  {
    std::string order;
    need("axis_order") >> order;
    if (order != "xyz") throw Error(ErrorCode::UnsupportedFormat, path.string() + ": axis_order must be xyz");
  }
  if (kv.count("components")) need("components") >> r.components;
  if (r.components != 1 && r.components != 3)
    throw Error(ErrorCode::UnsupportedFormat, path.string() + ": components must be 1 or 3");
  {
    std::string type;
    need("datatype") >> type;
    if (type != "float32") throw Error(ErrorCode::UnsupportedFormat, path.string() + ": datatype must be float32");
  }
  if (kv.count("endian")) {
    std::string e;
    need("endian") >> e;
    if (e != "little") throw Error(ErrorCode::UnsupportedFormat, path.string() + ": payload must be little-endian");
  }
  std::string data;
  need("data") >> data;
  r.geometry = VolumeGeometry(d, sp, org);
  r.data = path.parent_path() / data;
  return r;
}

Decoded read_raw(const fs::path& path) {
  const RawHeader h = parse_raw_header(path);
  const std::string bytes = read_file(h.data);
  const std::size_t total = h.geometry.voxel_count() * h.components;
  if (bytes.size() != total * 4)
    throw Error(ErrorCode::UnsupportedFormat, h.data.string() + ": payload size does not match header");
  Decoded out;
  out.geometry = h.geometry;
  out.components = h.components;
  out.values.resize(total);
  // Raw payload stores components interleaved per voxel; convert to planar.
  const std::size_t n3 = h.geometry.voxel_count();
  for (std::size_t v = 0; v < n3; ++v)
    for (int c = 0; c < h.components; ++c)
      out.values[v + n3 * c] = read_le<float>(bytes.data() + 4 * (v * h.components + c));
  return out;
}

void write_raw(const fs::path& path, const VolumeGeometry& g, int components, const std::vector<float>& interleaved) {
  std::string payload;
  payload.reserve(interleaved.size() * 4);
  for (float v : interleaved) append_le(payload, v);
  fs::path data = path;
  data.replace_extension(".raw");
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "# vesselmark raw volume\n"
                "dims %d %d %d\n"
                "spacing_mm %.17g %.17g %.17g\n"
                "origin_mm %.17g %.17g %.17g\n"
                "axis_order xyz\n"
                "components %d\n"
                "datatype float32\n"
                "endian little\n"
                "data %s\n",
                g.dims()[0], g.dims()[1], g.dims()[2], g.spacing().x, g.spacing().y, g.spacing().z, g.origin().x,
                g.origin().y, g.origin().z, components, data.filename().c_str());
  write_file_atomic(data, payload);
  write_file_atomic(path, buf);
}

Decoded read_any(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::MissingFile, path.string());
  switch (format_from_path(path)) {
    case VolumeFormat::nifti: return decode_nifti(read_file(path), path.string());
    case VolumeFormat::nifti_gz: return decode_nifti(read_gz(path), path.string());
    case VolumeFormat::raw: return read_raw(path);
  }
  throw Error(ErrorCode::UnsupportedFormat, path.string());
}

void write_nifti(const fs::path& path, const VolumeGeometry& g, int components, std::int16_t dt,
                 const std::string& payload) {
  std::string bytes = encode_nifti(g, components, dt, payload);
  if (format_from_path(path) == VolumeFormat::nifti_gz) bytes = gzip_bytes(bytes);
  write_file_atomic(path, bytes);
}

}  // namespace

VolumeFormat format_from_path(const fs::path& path) {
  std::string s = path.string();
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (ends_with(s, ".nii.gz")) return VolumeFormat::nifti_gz;
  if (ends_with(s, ".nii")) return VolumeFormat::nifti;
  if (ends_with(s, ".rawh")) return VolumeFormat::raw;
  throw Error(ErrorCode::UnsupportedFormat, "unrecognised volume extension: " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  static thread_local std::mt19937_64 salt(std::random_device{}());
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(salt() % 1000000007ULL);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::Io, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorCode::Io, "cannot rename onto " + path.string() + ": " + ec.message());
  }
}

ScalarVolume read_scalar_volume(const fs::path& path) {
  Decoded d = read_any(path);
  if (d.components != 1) throw Error(ErrorCode::UnsupportedFormat, path.string() + ": expected a scalar volume");
  std::vector<float> v(d.values.begin(), d.values.end());
  return ScalarVolume(d.geometry, std::move(v));
}

VectorField read_vector_field(const fs::path& path) {
  Decoded d = read_any(path);
  if (d.components != 3)
    throw Error(ErrorCode::UnsupportedFormat, path.string() + ": expected a 3-component vector volume");
  const std::size_t n3 = d.geometry.voxel_count();
  std::vector<Vec3> v(n3);
  for (std::size_t n = 0; n < n3; ++n) v[n] = {d.values[n], d.values[n + n3], d.values[n + 2 * n3]};
  return VectorField(d.geometry, std::move(v));
}

MaskVolume read_mask(const fs::path& path) {
  Decoded d = read_any(path);
  if (d.components != 1) throw Error(ErrorCode::UnsupportedFormat, path.string() + ": expected a scalar mask");
  std::vector<std::uint8_t> v(d.values.size());
  for (std::size_t n = 0; n < v.size(); ++n) v[n] = d.values[n] >= 0.5 ? 1 : 0;
  return MaskVolume(d.geometry, std::move(v));
}

void write_volume(const fs::path& path, const ScalarVolume& vol) {
  auto vals = vol.values();
  if (format_from_path(path) == VolumeFormat::raw) {
    write_raw(path, vol.geometry(), 1, std::vector<float>(vals.begin(), vals.end()));
    return;
  }
  std::string payload;
  payload.reserve(vals.size() * 4);
  for (float v : vals) append_le(payload, v);
  write_nifti(path, vol.geometry(), 1, kDtFloat32, payload);
}

void write_volume(const fs::path& path, const VectorField& field) {
  auto vals = field.values();
  if (format_from_path(path) == VolumeFormat::raw) {
    std::vector<float> inter;
    inter.reserve(vals.size() * 3);
    for (const auto& v : vals) {
      inter.push_back(static_cast<float>(v.x));
      inter.push_back(static_cast<float>(v.y));
      inter.push_back(static_cast<float>(v.z));
    }
    write_raw(path, field.geometry(), 3, inter);
    return;
  }
  std::string payload;
  payload.reserve(vals.size() * 12);
  for (int c = 0; c < 3; ++c)
    for (const auto& v : vals) append_le(payload, static_cast<float>(v[c]));
  write_nifti(path, field.geometry(), 3, kDtFloat32, payload);
}

void write_volume(const fs::path& path, const MaskVolume& mask) {
  auto vals = mask.values();
  if (format_from_path(path) == VolumeFormat::raw) {
    std::vector<float> f(vals.size());
    for (std::size_t n = 0; n < f.size(); ++n) f[n] = vals[n] ? 1.0f : 0.0f;
    write_raw(path, mask.geometry(), 1, f);
    return;
  }
  std::string payload(vals.begin(), vals.end());
  write_nifti(path, mask.geometry(), 1, kDtUint8, payload);
}

}  // namespace vm
