#include "longfuse/nifti.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstring>
#include <limits>
#include <memory>

namespace longfuse {
namespace {

struct NiftiHeader {
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
static_assert(sizeof(NiftiHeader) == 348);
static_assert(offsetof(NiftiHeader, dim) == 40);
static_assert(offsetof(NiftiHeader, datatype) == 70);
static_assert(offsetof(NiftiHeader, pixdim) == 76);
static_assert(offsetof(NiftiHeader, vox_offset) == 108);
static_assert(offsetof(NiftiHeader, qform_code) == 252);
static_assert(offsetof(NiftiHeader, srow_x) == 280);
static_assert(offsetof(NiftiHeader, magic) == 344);
static_assert(std::endian::native == std::endian::little, "only little-endian hosts are supported");

enum : std::int16_t {
  DT_UINT8 = 2,
  DT_INT16 = 4,
  DT_INT32 = 8,
  DT_FLOAT32 = 16,
  DT_FLOAT64 = 64,
  DT_INT8 = 256,
  DT_UINT16 = 512,
  DT_UINT32 = 768,
};

int bytes_per_voxel(std::int16_t datatype) {
  switch (datatype) {
  case DT_UINT8:
  case DT_INT8:
    return 1;
  case DT_INT16:
  case DT_UINT16:
    return 2;
  case DT_INT32:
  case DT_UINT32:
  case DT_FLOAT32:
    return 4;
  case DT_FLOAT64:
    return 8;
  default:
    return 0;
  }
}

bool is_integer_type(std::int16_t datatype) {
  return datatype != DT_FLOAT32 && datatype != DT_FLOAT64;
}

template <class T> void swap_bytes(T &v) {
  auto *p = reinterpret_cast<unsigned char *>(&v);
  std::reverse(p, p + sizeof(T));
}

void swap_header(NiftiHeader &h) {
  swap_bytes(h.sizeof_hdr);
  for (auto &d : h.dim)
    swap_bytes(d);
  swap_bytes(h.datatype);
  swap_bytes(h.bitpix);
  for (auto &p : h.pixdim)
    swap_bytes(p);
  swap_bytes(h.vox_offset);
  swap_bytes(h.scl_slope);
  swap_bytes(h.scl_inter);
  swap_bytes(h.qform_code);
  swap_bytes(h.sform_code);
  for (int i = 0; i < 4; ++i) {
    swap_bytes(h.srow_x[i]);
    swap_bytes(h.srow_y[i]);
    swap_bytes(h.srow_z[i]);
  }
}

struct GzCloser {
  void operator()(gzFile f) const {
    if (f)
      gzclose(f);
  }
};
using GzHandle = std::unique_ptr<gzFile_s, GzCloser>;

std::string where(const std::filesystem::path &path) { return "'" + path.string() + "'"; }

// Reads exactly `len` bytes or reports how many were available.
std::size_t read_fully(gzFile f, void *dst, std::size_t len) {
  auto *out = static_cast<unsigned char *>(dst);
  std::size_t got = 0;
  while (got < len) {
    const auto chunk = static_cast<unsigned>(std::min<std::size_t>(len - got, 1u << 30));
    const int r = gzread(f, out + got, chunk);
    if (r <= 0)
      break;
    got += static_cast<std::size_t>(r);
  }
  return got;
}

template <class T> float decode(const unsigned char *p, bool swap) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if (swap)
    swap_bytes(v);
  return static_cast<float>(v);
}

bool ends_with_gz(const std::filesystem::path &path) {
  const auto s = path.string();
  return s.size() >= 3 && s.compare(s.size() - 3, 3, ".gz") == 0;
}

} // namespace

Volume read_volume(const std::filesystem::path &path) {
  GzHandle f(gzopen(path.string().c_str(), "rb"));
  if (!f)
    throw IoError("cannot open " + where(path));

  NiftiHeader h{};
  if (read_fully(f.get(), &h, sizeof h) != sizeof h)
    throw IoError(where(path) + ": header shorter than 348 bytes");

  bool swap = false;
  if (h.sizeof_hdr != 348) {
    swap_header(h);
    if (h.sizeof_hdr != 348)
      throw IoError(where(path) + ": sizeof_hdr is not 348, not a NIfTI-1 file");
    swap = true;
  }
  if (std::memcmp(h.magic, "n+1", 4) != 0)
    throw IoError(where(path) + ": magic is not \"n+1\" (only single-file NIfTI-1 is supported)");

  const int ndim = h.dim[0];
  if (ndim < 1 || ndim > 7)
    throw IoError(where(path) + ": dim[0] = " + std::to_string(ndim) + " out of range");
  for (int a = 4; a <= ndim; ++a) {
    if (h.dim[a] > 1)
      throw IoError(where(path) + ": dim[" + std::to_string(a) + "] = " + std::to_string(h.dim[a]) +
                    ", only 3D volumes are supported");
  }
  Dims dims{h.dim[1], ndim >= 2 ? h.dim[2] : 1, ndim >= 3 ? h.dim[3] : 1};
  if (dims.x <= 0 || dims.y <= 0 || dims.z <= 0)
    throw IoError(where(path) + ": non-positive dim " + to_string(dims));

  const int bpv = bytes_per_voxel(h.datatype);
  if (bpv == 0)
    throw IoError(where(path) + ": unsupported datatype code " + std::to_string(h.datatype));

  Spacing spacing{std::abs(h.pixdim[1]), std::abs(h.pixdim[2]), std::abs(h.pixdim[3])};
  if (!(spacing.x > 0) || !(spacing.y > 0) || !(spacing.z > 0))
    throw IoError(where(path) + ": pixdim[1..3] must be positive");

  if (!(h.vox_offset >= 348.0f))
    throw IoError(where(path) + ": vox_offset " + std::to_string(h.vox_offset) + " is before end of header");
  const auto offset = static_cast<std::size_t>(h.vox_offset);
  std::vector<unsigned char> skip(offset - sizeof h);
  if (read_fully(f.get(), skip.data(), skip.size()) != skip.size())
    throw IoError(where(path) + ": truncated payload (file ends before vox_offset)");

  const std::size_t count = dims.count();
  std::vector<unsigned char> raw(count * static_cast<std::size_t>(bpv));
  if (read_fully(f.get(), raw.data(), raw.size()) != raw.size())
    throw IoError(where(path) + ": truncated payload (expected " + std::to_string(raw.size()) +
                  " bytes of voxel data for dims " + to_string(dims) + ")");

  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned char *p = raw.data() + i * static_cast<std::size_t>(bpv);
    switch (h.datatype) {
    case DT_UINT8: data[i] = static_cast<float>(*p); break;
    case DT_INT8: data[i] = static_cast<float>(static_cast<std::int8_t>(*p)); break;
    case DT_INT16: data[i] = decode<std::int16_t>(p, swap); break;
    case DT_UINT16: data[i] = decode<std::uint16_t>(p, swap); break;
    case DT_INT32: data[i] = decode<std::int32_t>(p, swap); break;
    case DT_UINT32: data[i] = decode<std::uint32_t>(p, swap); break;
    case DT_FLOAT32: data[i] = decode<float>(p, swap); break;
    case DT_FLOAT64: data[i] = decode<double>(p, swap); break;
    }
  }

  const bool scaled = h.scl_slope != 0.0f && std::isfinite(h.scl_slope) &&
                      (h.scl_slope != 1.0f || h.scl_inter != 0.0f);
  if (scaled) {
    for (auto &v : data)
      v = v * h.scl_slope + h.scl_inter;
  }

  VolumeKind kind = VolumeKind::intensity;
  if (is_integer_type(h.datatype) && !scaled &&
      std::all_of(data.begin(), data.end(), [](float v) { return v >= 0.0f; }))
    kind = VolumeKind::label;

  Volume v(dims, spacing, kind, std::move(data));
  if (h.sform_code > 0) {
    std::array<float, 12> a{};
    std::copy(h.srow_x, h.srow_x + 4, a.begin());
    std::copy(h.srow_y, h.srow_y + 4, a.begin() + 4);
    std::copy(h.srow_z, h.srow_z + 4, a.begin() + 8);
    v.set_affine(a);
  }
  return v;
}

void write_volume(const Volume &v, const std::filesystem::path &path) {
  const bool label = v.is_label();
  if (label) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      const float value = v.data()[i];
      if (value > static_cast<float>(std::numeric_limits<std::int16_t>::max()))
        throw IoError(where(path) + ": label value " + std::to_string(static_cast<long>(value)) +
                      " exceeds the int16 range of the output datatype");
    }
  }

  NiftiHeader h{};
  h.sizeof_hdr = 348;
  h.regular = 'r';
  h.dim[0] = 3;
  h.dim[1] = static_cast<std::int16_t>(v.dims().x);
  h.dim[2] = static_cast<std::int16_t>(v.dims().y);
  h.dim[3] = static_cast<std::int16_t>(v.dims().z);
  for (int a = 4; a < 8; ++a)
    h.dim[a] = 1;
  h.datatype = label ? DT_INT16 : DT_FLOAT32;
  h.bitpix = label ? 16 : 32;
  h.pixdim[0] = 1.0f;
  h.pixdim[1] = static_cast<float>(v.spacing().x);
  h.pixdim[2] = static_cast<float>(v.spacing().y);
  h.pixdim[3] = static_cast<float>(v.spacing().z);
  h.vox_offset = 352.0f;
  h.scl_slope = 1.0f;
  h.xyzt_units = 2; // mm
  h.sform_code = 1;
  const auto &a = v.affine();
  std::copy(a.begin(), a.begin() + 4, h.srow_x);
  std::copy(a.begin() + 4, a.begin() + 8, h.srow_y);
  std::copy(a.begin() + 8, a.end(), h.srow_z);
  std::memcpy(h.magic, "n+1", 4);

  std::vector<unsigned char> buf(352 + v.size() * (label ? 2u : 4u), 0);
  std::memcpy(buf.data(), &h, sizeof h);
  unsigned char *payload = buf.data() + 352;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (label) {
      const auto s = static_cast<std::int16_t>(v.data()[i]);
      std::memcpy(payload + 2 * i, &s, 2);
    } else {
      const float f = v.data()[i];
      std::memcpy(payload + 4 * i, &f, 4);
    }
  }

  GzHandle f(gzopen(path.string().c_str(), ends_with_gz(path) ? "wb6" : "wbT"));
  if (!f)
    throw IoError("cannot open " + where(path) + " for writing");
  std::size_t written = 0;
  while (written < buf.size()) {
    const auto chunk = static_cast<unsigned>(std::min<std::size_t>(buf.size() - written, 1u << 30));
    const int w = gzwrite(f.get(), buf.data() + written, chunk);
    if (w <= 0)
      throw IoError("write failed for " + where(path));
    written += static_cast<std::size_t>(w);
  }
  if (gzclose(f.release()) != Z_OK)
    throw IoError("closing " + where(path) + " failed");
}

} // namespace longfuse
