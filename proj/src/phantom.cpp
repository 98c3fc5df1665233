#include "longfuse/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace longfuse {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Independent, order-free random streams: one per (purpose, atlas, time).
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t a = 0, std::uint64_t b = 0) {
  return std::mt19937_64(splitmix64(splitmix64(splitmix64(seed ^ (purpose << 56)) + a) + b));
}

enum Purpose : std::uint64_t { kSharedNoise = 1, kScanNoise, kFlipBase, kFlipTime, kAtlasNoise };

double mean_of(const IntensityModel &m, int label) {
  auto it = m.means.find(label);
  return it == m.means.end() ? 0.0 : it->second;
}

Volume corrupt_labels(const Volume &truth, double rate, double persistence, std::uint64_t seed, int atlas, int t) {
  const Dims d = truth.dims();
  std::vector<float> out(truth.data().begin(), truth.data().end());
  auto base = stream(seed, kFlipBase, static_cast<std::uint64_t>(atlas));
  auto fresh = stream(seed, kFlipTime, static_cast<std::uint64_t>(atlas), static_cast<std::uint64_t>(t));
  std::uniform_real_distribution<double> U(0.0, 1.0);

  const int nb[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};
  int others[6];
  for (int z = 0; z < d.z; ++z)
    for (int y = 0; y < d.y; ++y)
      for (int x = 0; x < d.x; ++x) {
        // Fixed number of draws per voxel keeps every stream aligned with the grid.
        const double base_u = U(base), base_pick = U(base);
        const double coin = U(fresh), fresh_u = U(fresh), fresh_pick = U(fresh);
        const int own = static_cast<int>(truth.at(x, y, z));
        int count = 0;
        for (const auto &o : nb) {
          const int xx = x + o[0], yy = y + o[1], zz = z + o[2];
          if (xx < 0 || yy < 0 || zz < 0 || xx >= d.x || yy >= d.y || zz >= d.z)
            continue;
          const int l = static_cast<int>(truth.at(xx, yy, zz));
          if (l != own)
            others[count++] = l;
        }
        if (count == 0)
          continue;
        const bool reuse = coin < persistence;
        const double u = reuse ? base_u : fresh_u;
        const double pick = reuse ? base_pick : fresh_pick;
        if (u < rate)
          out[truth.index(x, y, z)] = static_cast<float>(others[std::min(count - 1, static_cast<int>(pick * count))]);
      }
  Volume v(d, truth.spacing(), VolumeKind::label, std::move(out));
  return v;
}

} // namespace

double PhantomSpec::scale(std::size_t s, int t) const {
  const auto &sc = structures.at(s).scales;
  return sc.empty() ? 1.0 : sc.at(static_cast<std::size_t>(t));
}

void PhantomSpec::validate() const {
  if (dims.x <= 0 || dims.y <= 0 || dims.z <= 0)
    throw Error("phantom dims must be positive");
  if (k < 1 || n < 1)
    throw Error("phantom needs k >= 1 and n >= 1");
  if (!(atlas_label_error_rate >= 0.0 && atlas_label_error_rate <= 1.0))
    throw Error("atlas_label_error_rate must lie in [0,1]");
  if (!(atlas_error_persistence >= 0.0 && atlas_error_persistence <= 1.0))
    throw Error("atlas_error_persistence must lie in [0,1]");
  if (!(intensity.shared_noise_fraction >= 0.0 && intensity.shared_noise_fraction <= 1.0))
    throw Error("shared_noise_fraction must lie in [0,1]");
  if (!(intensity.sigma >= 0.0) || !(atlas_intensity_sigma >= 0.0))
    throw Error("noise sigmas must be non-negative");
  if (!time_offsets.empty() && time_offsets.size() != static_cast<std::size_t>(k))
    throw Error("time_offsets needs one entry per time point");
  for (std::size_t s = 0; s < structures.size(); ++s) {
    const auto &st = structures[s];
    if (st.label < 0)
      throw Error("structure labels must be non-negative");
    if (!st.scales.empty() && st.scales.size() != static_cast<std::size_t>(k))
      throw Error("structure " + std::to_string(st.label) + " needs one scale per time point");
    const int extent[3] = {dims.x, dims.y, dims.z};
    for (int t = 0; t < k; ++t) {
      const double sc = scale(s, t);
      if (!(sc > 0.0))
        throw Error("structure scales must be positive");
      for (int a = 0; a < 3; ++a) {
        const double r = st.radii[static_cast<std::size_t>(a)] * sc;
        const double c = st.center[static_cast<std::size_t>(a)];
        if (!(r > 0.0) || c - r < 0.0 || c + r > extent[a] - 1)
          throw GeometryError("structure with label " + std::to_string(st.label) + " exceeds the volume bounds at time " +
                              std::to_string(t));
      }
    }
  }
}

PhantomSpec PhantomSpec::concentric(Dims dims, int k, int n, std::uint64_t seed) {
  PhantomSpec s;
  s.dims = dims;
  s.k = k;
  s.n = n;
  s.seed = seed;
  const std::array<double, 3> c{(dims.x - 1) / 2.0, (dims.y - 1) / 2.0, (dims.z - 1) / 2.0};
  const std::array<double, 3> aniso{1.0, 0.9, 0.85};
  const double fractions[4] = {0.80, 0.60, 0.40, 0.20};
  for (int l = 1; l <= 4; ++l) {
    Structure st;
    st.label = l;
    st.center = c;
    for (std::size_t a = 0; a < 3; ++a)
      st.radii[a] = fractions[l - 1] * c[a] * aniso[a];
    s.structures.push_back(st);
  }
  s.intensity.means = {{0, 0.05}, {1, 0.35}, {2, 0.65}, {3, 0.45}, {4, 0.9}};
  return s;
}

Volume phantom_truth(const PhantomSpec &spec, int t) {
  Volume v = Volume::filled(spec.dims, spec.spacing, VolumeKind::label, 0.0f);
  for (std::size_t s = 0; s < spec.structures.size(); ++s) {
    const auto &st = spec.structures[s];
    const double sc = spec.scale(s, t);
    const double rx = st.radii[0] * sc, ry = st.radii[1] * sc, rz = st.radii[2] * sc;
    for (int z = 0; z < spec.dims.z; ++z)
      for (int y = 0; y < spec.dims.y; ++y)
        for (int x = 0; x < spec.dims.x; ++x) {
          const double ex = (x - st.center[0]) / rx, ey = (y - st.center[1]) / ry, ez = (z - st.center[2]) / rz;
          if (ex * ex + ey * ey + ez * ez <= 1.0)
            v.at(x, y, z) = static_cast<float>(st.label);
        }
  }
  return v;
}

Phantom generate_phantom(const PhantomSpec &spec) {
  spec.validate();
  const std::size_t N = spec.dims.count();
  std::normal_distribution<double> G(0.0, 1.0);

  std::vector<double> shared(N, 0.0);
  const double rho = spec.intensity.shared_noise_fraction;
  if (rho > 0.0) {
    auto rng = stream(spec.seed, kSharedNoise);
    for (auto &g : shared)
      g = G(rng);
  }

  Phantom ph;
  ph.series.subject_id = "phantom-" + std::to_string(spec.seed);
  for (int t = 0; t < spec.k; ++t) {
    Volume truth = phantom_truth(spec, t);
    auto rng = stream(spec.seed, kScanNoise, static_cast<std::uint64_t>(t));
    const double offset = spec.time_offsets.empty() ? 0.0 : spec.time_offsets[static_cast<std::size_t>(t)];
    std::vector<float> img(N);
    for (std::size_t v = 0; v < N; ++v) {
      const double scan = G(rng);
      const double noise = std::sqrt(rho) * shared[v] + std::sqrt(1.0 - rho) * scan;
      img[v] = static_cast<float>(mean_of(spec.intensity, truth.label(v)) + spec.intensity.sigma * noise + offset);
    }
    ph.series.targets.emplace_back(spec.dims, spec.spacing, VolumeKind::intensity, std::move(img));
    ph.truth.push_back(std::move(truth));
  }

  std::vector<AtlasPair> pairs;
  for (int t = 0; t < spec.k; ++t) {
    for (int j = 0; j < spec.n; ++j) {
      Volume labels = corrupt_labels(ph.truth[static_cast<std::size_t>(t)], spec.atlas_label_error_rate,
                                     spec.atlas_error_persistence, spec.seed, j, t);
      auto rng = stream(spec.seed, kAtlasNoise, static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(t));
      std::vector<float> img(N);
      for (std::size_t v = 0; v < N; ++v)
        img[v] = static_cast<float>(mean_of(spec.intensity, labels.label(v)) + spec.atlas_intensity_sigma * G(rng));
      pairs.push_back({Volume(spec.dims, spec.spacing, VolumeKind::intensity, std::move(img)), std::move(labels)});
    }
  }
  ph.bank = AtlasBank(spec.n, spec.k, std::move(pairs));
  return ph;
}

PhantomSpec outlier_spec(const PhantomSpec &base, double scale) {
  PhantomSpec s = base;
  s.k = 1;
  s.time_offsets.clear();
  s.seed = splitmix64(base.seed ^ 0x6F75746C696572ull);
  for (auto &st : s.structures) {
    st.scales.clear();
    for (auto &r : st.radii)
      r *= scale;
  }
  return s;
}

std::vector<LongitudinalSeries> make_dummy_pairs(const LongitudinalSeries &targets, const Volume &outlier) {
  std::vector<LongitudinalSeries> out;
  for (int t = 0; t < targets.k(); ++t) {
    const Volume &tt = targets.target(t);
    if (!tt.same_grid(outlier))
      throw GeometryError("dummy pair: outlier grid " + to_string(outlier.dims()) + " differs from target " +
                          std::to_string(t) + " grid " + to_string(tt.dims()));
    LongitudinalSeries pair;
    pair.subject_id = targets.subject_id + "-dummy" + std::to_string(t);
    pair.targets = {tt, outlier};
    out.push_back(std::move(pair));
  }
  return out;
}

AtlasBank make_dummy_bank(const AtlasBank &subject, int t, const AtlasBank &outlier) {
  if (subject.n() != outlier.n())
    throw GeometryError("dummy bank: subject and outlier banks have different atlas counts");
  std::vector<AtlasPair> pairs;
  for (int i = subject.block_begin(t); i < subject.block_end(t); ++i)
    pairs.push_back(subject.pair(i));
  for (int i = outlier.block_begin(0); i < outlier.block_end(0); ++i)
    pairs.push_back(outlier.pair(i));
  return AtlasBank(subject.n(), 2, std::move(pairs));
}

void to_json(nlohmann::json &j, const PhantomSpec &s) {
  nlohmann::json structures = nlohmann::json::array();
  for (const auto &st : s.structures)
    structures.push_back({{"label", st.label}, {"center", st.center}, {"radii", st.radii}, {"scales", st.scales}});
  nlohmann::json means = nlohmann::json::object();
  for (const auto &[l, m] : s.intensity.means)
    means[std::to_string(l)] = m;
  j = {{"dims", {s.dims.x, s.dims.y, s.dims.z}},
       {"spacing", {s.spacing.x, s.spacing.y, s.spacing.z}},
       {"k", s.k},
       {"n", s.n},
       {"structures", structures},
       {"intensity",
        {{"means", means}, {"sigma", s.intensity.sigma}, {"shared_noise_fraction", s.intensity.shared_noise_fraction}}},
       {"atlas_label_error_rate", s.atlas_label_error_rate},
       {"atlas_intensity_sigma", s.atlas_intensity_sigma},
       {"atlas_error_persistence", s.atlas_error_persistence},
       {"time_offsets", s.time_offsets},
       {"seed", s.seed}};
}

void from_json(const nlohmann::json &j, PhantomSpec &s) {
  Dims dims{32, 32, 32};
  if (j.contains("dims")) {
    const auto d = j.at("dims").get<std::vector<int>>();
    if (d.size() != 3)
      throw Error("phantom spec: dims needs three entries");
    dims = {d[0], d[1], d[2]};
  }
  const int k = j.value("k", 3);
  const int n = j.value("n", 4);
  const auto seed = j.value("seed", std::uint64_t{1});
  s = PhantomSpec::concentric(dims, k, n, seed);
  if (j.contains("spacing")) {
    const auto sp = j.at("spacing").get<std::vector<double>>();
    if (sp.size() != 3)
      throw Error("phantom spec: spacing needs three entries");
    s.spacing = {sp[0], sp[1], sp[2]};
  }
  if (j.contains("structures")) {
    s.structures.clear();
    for (const auto &js : j.at("structures")) {
      Structure st;
      st.label = js.at("label").get<int>();
      st.center = js.at("center").get<std::array<double, 3>>();
      st.radii = js.at("radii").get<std::array<double, 3>>();
      st.scales = js.value("scales", std::vector<double>{});
      s.structures.push_back(st);
    }
  }
  if (j.contains("intensity")) {
    const auto &ji = j.at("intensity");
    if (ji.contains("means")) {
      s.intensity.means.clear();
      for (const auto &[key, value] : ji.at("means").items())
        s.intensity.means[std::stoi(key)] = value.get<double>();
    }
    s.intensity.sigma = ji.value("sigma", s.intensity.sigma);
    s.intensity.shared_noise_fraction = ji.value("shared_noise_fraction", s.intensity.shared_noise_fraction);
  }
  s.atlas_label_error_rate = j.value("atlas_label_error_rate", s.atlas_label_error_rate);
  s.atlas_intensity_sigma = j.value("atlas_intensity_sigma", s.atlas_intensity_sigma);
  s.atlas_error_persistence = j.value("atlas_error_persistence", s.atlas_error_persistence);
  s.time_offsets = j.value("time_offsets", std::vector<double>{});
}

} // namespace longfuse
