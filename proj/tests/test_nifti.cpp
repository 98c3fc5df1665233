#include <doctest.h>

#include <cstring>
#include <fstream>
#include <set>

#include "longfuse/nifti.hpp"
#include "test_support.hpp"

using namespace longfuse;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path &p, const std::string &bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

template <typename T> void poke(std::string &bytes, std::size_t offset, T value) {
  std::memcpy(bytes.data() + offset, &value, sizeof value);
}

} // namespace

TEST_CASE("16^3 int16 zeros read back as an all-zero label volume") {
  const auto dir = test::scratch_dir("nifti_zeros");
  const Volume v = Volume::filled({16, 16, 16}, {}, VolumeKind::label, 0.0f);
  write_volume(v, dir / "z.nii");
  const std::string raw = slurp(dir / "z.nii");
  std::int16_t datatype = 0;
  std::memcpy(&datatype, raw.data() + 70, 2);
  CHECK(datatype == 4);
  float vox_offset = 0;
  std::memcpy(&vox_offset, raw.data() + 108, 4);
  CHECK(vox_offset == 352.0f);
  CHECK(raw.size() == 352 + 16 * 16 * 16 * 2);

  const Volume r = read_volume(dir / "z.nii");
  CHECK(r.dims() == Dims{16, 16, 16});
  CHECK(r.is_label());
  CHECK(std::all_of(r.data().begin(), r.data().end(), [](float x) { return x == 0.0f; }));
}

TEST_CASE("intensity round trip is bitwise, with geometry, plain and gzip") {
  const auto dir = test::scratch_dir("nifti_roundtrip");
  std::mt19937_64 rng(1);
  Volume v = test::random_intensity({5, 6, 7}, rng);
  v = Volume(v.dims(), {1.2, 1.0, 0.9}, VolumeKind::intensity, std::vector<float>(v.data().begin(), v.data().end()));
  std::array<float, 12> aff{1.2f, 0, 0, -3, 0, 1, 0, 4, 0, 0, 0.9f, 5};
  v.set_affine(aff);
  for (const char *name : {"a.nii", "a.nii.gz"}) {
    write_volume(v, dir / name);
    const Volume r = read_volume(dir / name);
    CHECK(r.dims() == v.dims());
    CHECK(r.spacing().x == doctest::Approx(1.2).epsilon(1e-7));
    CHECK(r.spacing().z == doctest::Approx(0.9).epsilon(1e-7));
    CHECK(r.kind() == VolumeKind::intensity);
    CHECK(std::equal(r.data().begin(), r.data().end(), v.data().begin()));
    CHECK(r.affine() == aff);
  }
  // The gzip file really is compressed.
  const std::string gz = slurp(dir / "a.nii.gz");
  CHECK(static_cast<unsigned char>(gz[0]) == 0x1f);
  CHECK(static_cast<unsigned char>(gz[1]) == 0x8b);
}

TEST_CASE("label volume with 132 distinct labels round-trips exactly") {
  const auto dir = test::scratch_dir("nifti_labels");
  std::vector<float> data(12 * 12 * 12);
  for (std::size_t i = 0; i < data.size(); ++i)
    data[i] = static_cast<float>(i % 132 == 0 ? 0 : (i % 132) * 3);
  const Volume v({12, 12, 12}, {}, VolumeKind::label, data);
  write_volume(v, dir / "l.nii.gz");
  const Volume r = read_volume(dir / "l.nii.gz");
  CHECK(r.is_label());
  CHECK(std::equal(r.data().begin(), r.data().end(), v.data().begin()));
  std::set<float> distinct(r.data().begin(), r.data().end());
  CHECK(distinct.size() == 132);
}

TEST_CASE("label value 40000 is a range error") {
  const auto dir = test::scratch_dir("nifti_range");
  const Volume v({2, 1, 1}, {}, VolumeKind::label, {1.0f, 40000.0f});
  CHECK_THROWS_WITH_AS(write_volume(v, dir / "r.nii"), doctest::Contains("int16"), IoError);
}

TEST_CASE("payload shorter than dims imply is reported as truncated") {
  const auto dir = test::scratch_dir("nifti_trunc");
  write_volume(Volume::filled({4, 4, 4}, {}, VolumeKind::intensity, 1.0f), dir / "t.nii");
  std::string raw = slurp(dir / "t.nii");
  raw.resize(raw.size() - 10);
  spit(dir / "t.nii", raw);
  CHECK_THROWS_WITH_AS(read_volume(dir / "t.nii"), doctest::Contains("truncated payload"), IoError);
  CHECK_THROWS_WITH_AS(read_volume(dir / "t.nii"), doctest::Contains("t.nii"), IoError);
}

TEST_CASE("malformed headers name the file and field") {
  const auto dir = test::scratch_dir("nifti_bad");
  write_volume(Volume::filled({2, 2, 2}, {}, VolumeKind::intensity, 1.0f), dir / "ok.nii");
  const std::string good = slurp(dir / "ok.nii");

  std::string bad = good;
  poke<std::int16_t>(bad, 70, 1024);
  spit(dir / "dtype.nii", bad);
  CHECK_THROWS_WITH_AS(read_volume(dir / "dtype.nii"), doctest::Contains("datatype"), IoError);

  bad = good;
  poke<std::int16_t>(bad, 40, 4);
  poke<std::int16_t>(bad, 48, 2);
  spit(dir / "4d.nii", bad);
  CHECK_THROWS_WITH_AS(read_volume(dir / "4d.nii"), doctest::Contains("dim[4]"), IoError);

  bad = good;
  poke<std::int16_t>(bad, 48, 1);
  poke<std::int16_t>(bad, 40, 4);
  spit(dir / "4d_singleton.nii", bad);
  CHECK(read_volume(dir / "4d_singleton.nii").dims() == Dims{2, 2, 2});

  bad = good;
  bad[344] = 'x';
  spit(dir / "magic.nii", bad);
  CHECK_THROWS_WITH_AS(read_volume(dir / "magic.nii"), doctest::Contains("magic"), IoError);

  CHECK_THROWS_AS(read_volume(dir / "missing.nii"), IoError);
  spit(dir / "short.nii", good.substr(0, 100));
  CHECK_THROWS_AS(read_volume(dir / "short.nii"), IoError);
}

TEST_CASE("scl_slope and scl_inter are applied and make the volume intensity") {
  const auto dir = test::scratch_dir("nifti_scale");
  write_volume(Volume({2, 1, 1}, {}, VolumeKind::label, {1.0f, 3.0f}), dir / "s.nii");
  std::string raw = slurp(dir / "s.nii");
  poke<float>(raw, 112, 2.0f);
  poke<float>(raw, 116, 0.5f);
  spit(dir / "s.nii", raw);
  const Volume r = read_volume(dir / "s.nii");
  CHECK(r.kind() == VolumeKind::intensity);
  CHECK(r.data()[0] == 2.5f);
  CHECK(r.data()[1] == 6.5f);
}

TEST_CASE("unwritable path raises IoError") {
  CHECK_THROWS_AS(write_volume(Volume::filled({1, 1, 1}, {}, VolumeKind::intensity), "/nonexistent-dir/x.nii"),
                  IoError);
}
