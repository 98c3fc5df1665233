#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include <sys/wait.h>

#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "cli/manifest.hpp"
#include "longfuse/nifti.hpp"
#include "test_support.hpp"

using namespace longfuse;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "longfuse");
  std::vector<const char *> argv;
  for (const auto &a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Runs the installed binary in a child process; returns its exit status.
int run_process(const std::string &args, const fs::path &log) {
  const std::string cmd = std::string(LONGFUSE_BIN) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string path_of(const fs::path &dir, const std::string &name) { return (dir / name).string(); }

// Writes a small phantom fixture: 16^3, k = 2, n = 3.
fs::path make_fixture(const std::string &name, int k = 2) {
  const fs::path dir = test::scratch_dir(name);
  const Run r = run({"phantom", "--dims", "16", "16", "16", "--k", std::to_string(k), "--n", "3", "--seed", "4",
                     "--out-dir", (dir / "ph").string()});
  REQUIRE(r.code == 0);
  return dir;
}

std::vector<std::string> fuse_args(const fs::path &dir, const std::string &mode, int k, const std::string &prefix) {
  std::vector<std::string> a{"fuse", "--mode", mode, "--patch-radius", "1", "--search-radius", "1", "--targets"};
  for (int t = 0; t < k; ++t)
    a.push_back(path_of(dir, "ph/target_t" + std::to_string(t) + ".nii.gz"));
  a.push_back("--atlas-images");
  for (int j = 0; j < 3; ++j)
    a.push_back(path_of(dir, "ph/atlas_i" + std::to_string(j) + "_t0_j" + std::to_string(j) + "_image.nii.gz"));
  a.push_back("--atlas-labels");
  for (int j = 0; j < 3; ++j)
    a.push_back(path_of(dir, "ph/atlas_i" + std::to_string(j) + "_t0_j" + std::to_string(j) + "_labels.nii.gz"));
  a.push_back("--out-prefix");
  a.push_back((dir / prefix).string());
  return a;
}

} // namespace

TEST_CASE("missing --targets exits 1 with usage text") {
  const fs::path dir = test::scratch_dir("usage");
  const Run r = run({"fuse", "--out-prefix", (dir / "x").string()});
  CHECK(r.code == cli::kExitUsage);
  CHECK(r.err.find("--targets") != std::string::npos);
  CHECK(r.err.find("Usage") != std::string::npos);

  CHECK(run_process("fuse --out-prefix " + (dir / "x").string(), dir / "log.txt") == 1);
  CHECK(run_process("frobnicate", dir / "log.txt") == 1);
  CHECK(run_process("--help", dir / "log.txt") == 0);
}

TEST_CASE("unreadable inputs exit 2 and name the file") {
  const fs::path dir = test::scratch_dir("missing");
  const Run r = run({"fuse", "--targets", (dir / "nope.nii.gz").string(), "--atlas-images", "a.nii", "--atlas-labels",
                     "b.nii", "--out-prefix", (dir / "x").string()});
  CHECK(r.code == cli::kExitInput);
  CHECK(r.err.find("nope.nii.gz") != std::string::npos);
  CHECK(r.err.find("--targets") != std::string::npos);
}

TEST_CASE("invalid flag values exit 2 and name the flag") {
  const fs::path dir = make_fixture("badflag");
  auto args = fuse_args(dir, "4djlf", 2, "seg");
  args.push_back("--alpha");
  args.push_back("-1");
  Run r = run(args);
  CHECK(r.code == cli::kExitInput);
  CHECK(r.err.find("--alpha") != std::string::npos);

  args = fuse_args(dir, "bogus", 2, "seg");
  r = run(args);
  CHECK(r.code == cli::kExitInput);
  CHECK(r.err.find("--mode") != std::string::npos);
}

TEST_CASE("bounds-violating phantom exits 2") {
  const fs::path dir = test::scratch_dir("bounds");
  std::ofstream(dir / "spec.json") << R"({"dims":[16,16,16],"k":2,"n":2,"structures":[
    {"label":1,"center":[8,8,8],"radii":[6,6,6],"scales":[1.0,1.5]}]})";
  const Run r = run({"phantom", "--spec", (dir / "spec.json").string(), "--out-dir", (dir / "ph").string()});
  CHECK(r.code == cli::kExitInput);
  CHECK(r.err.find("exceeds the volume bounds") != std::string::npos);
  CHECK(run_process("phantom --spec " + (dir / "spec.json").string() + " --out-dir " + (dir / "ph").string(),
                    dir / "log.txt") == 2);
}

TEST_CASE("k = 1 with 4djlf equals jlf and logs a notice") {
  const fs::path dir = make_fixture("k1", 1);
  const Run a = run(fuse_args(dir, "4djlf", 1, "four"));
  const Run b = run(fuse_args(dir, "jlf", 1, "jlf"));
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(a.err.find("notice") != std::string::npos);
  CHECK(cli::sha256_nifti(path_of(dir, "four_t0.nii.gz")) == cli::sha256_nifti(path_of(dir, "jlf_t0.nii.gz")));
}

TEST_CASE("phantom fixture end to end matches the golden hashes") {
  const fs::path dir = make_fixture("golden");
  const fs::path golden = fs::path(LONGFUSE_GOLDEN_DIR) / "fuse_hashes.json";
  nlohmann::json got;
  for (const std::string mode : {"jlf", "jlf-multi", "4djlf"}) {
    const Run r = run(fuse_args(dir, mode, 2, mode));
    REQUIRE(r.code == 0);
    for (int t = 0; t < 2; ++t)
      got[mode].push_back(cli::sha256_nifti(path_of(dir, mode + "_t" + std::to_string(t) + ".nii.gz")));
  }
  for (int t = 0; t < 2; ++t)
    got["phantom_targets"].push_back(cli::sha256_nifti(path_of(dir, "ph/target_t" + std::to_string(t) + ".nii.gz")));
  if (std::getenv("LONGFUSE_UPDATE_GOLDEN")) {
    cli::write_json_atomic(golden.string(), got);
    MESSAGE("golden hashes rewritten");
  }
  REQUIRE(fs::exists(golden));
  CHECK(cli::read_json_file(golden.string()) == got);
}

TEST_CASE("phantom output is deterministic and its spec round-trips through the manifest") {
  const fs::path a = make_fixture("det_a"), b = make_fixture("det_b");
  for (const std::string f : {"target_t1.nii.gz", "truth_t0.nii.gz", "atlas_i4_t1_j1_labels.nii.gz"})
    CHECK(cli::sha256_nifti((a / "ph" / f).string()) == cli::sha256_nifti((b / "ph" / f).string()));

  // Regenerate from the manifest alone and compare every listed file.
  const Run r = run({"phantom", "--spec", (a / "ph/phantom_manifest.json").string(), "--out-dir", (a / "re").string()});
  REQUIRE(r.code == 0);
  const auto m1 = cli::read_json_file((a / "ph/phantom_manifest.json").string());
  const auto m2 = cli::read_json_file((a / "re/phantom_manifest.json").string());
  CHECK(m1.at("spec") == m2.at("spec"));
  REQUIRE(m1.at("bank").size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(m1["bank"][i]["labels"]["sha256"] == m2["bank"][i]["labels"]["sha256"]);
    CHECK(m1["bank"][i]["image"]["sha256"] == m2["bank"][i]["image"]["sha256"]);
    CHECK(m1["bank"][i]["time"] == static_cast<int>(i / 3));
  }
  CHECK(m1["targets"] != nlohmann::json());
}

TEST_CASE("a fuse manifest reproduces identical outputs") {
  const fs::path dir = make_fixture("manifest");
  auto args = fuse_args(dir, "4djlf", 2, "first");
  args.insert(args.end(), {"--beta", "5", "--posteriors"});
  REQUIRE(run(args).code == 0);
  const auto m = cli::read_json_file(path_of(dir, "first_manifest.json"));
  CHECK(m.at("tool") == "longfuse");
  CHECK(m.at("config").at("beta") == 5.0);
  CHECK(m.at("inputs").at("targets").size() == 2);
  CHECK(m.contains("timings"));

  const Run again = run({"fuse", "--config", path_of(dir, "first_manifest.json"), "--out-prefix", path_of(dir, "second")});
  REQUIRE(again.code == 0);
  const auto m2 = cli::read_json_file(path_of(dir, "second_manifest.json"));
  CHECK(m2.at("config") == m.at("config"));
  for (int t = 0; t < 2; ++t) {
    const std::string s = "_t" + std::to_string(t);
    CHECK(cli::sha256_nifti(path_of(dir, "first" + s + ".nii.gz")) == cli::sha256_nifti(path_of(dir, "second" + s + ".nii.gz")));
    CHECK(cli::sha256_nifti(path_of(dir, "first" + s + "_label2.nii.gz")) ==
          cli::sha256_nifti(path_of(dir, "second" + s + "_label2.nii.gz")));
  }
  // No temporary files left behind by the atomic writes.
  for (const auto &e : fs::directory_iterator(dir))
    CHECK(e.path().filename().string().find(".tmp") == std::string::npos);
}

TEST_CASE("property: flags override config values, which override defaults") {
  std::mt19937_64 rng(11);
  const cli::ResolvedFuse defaults = cli::resolve_settings({}, {});
  for (int trial = 0; trial < 300; ++trial) {
    cli::FuseSettings flags, config;
    auto maybe = [&](auto &field, auto value) {
      if (rng() % 2)
        field = value;
    };
    const char *modes[] = {"jlf", "jlf-multi", "4djlf"};
    for (cli::FuseSettings *s : {&flags, &config}) {
      maybe(s->mode, std::string(modes[rng() % 3]));
      maybe(s->patch_radius, static_cast<int>(rng() % 4));
      maybe(s->search_radius, static_cast<int>(rng() % 5));
      maybe(s->alpha, 0.01 * static_cast<double>(1 + rng() % 100));
      maybe(s->beta, static_cast<double>(rng() % 200));
      maybe(s->workers, 1 + static_cast<int>(rng() % 8));
      maybe(s->consensus_shortcut, static_cast<bool>(rng() % 2));
      maybe(s->normalize, static_cast<bool>(rng() % 2));
    }
    // Round-trip the config side through JSON, as the tool reads it from disk.
    nlohmann::json doc = nlohmann::json::object();
    if (config.mode)
      doc["mode"] = *config.mode;
    if (config.patch_radius)
      doc["patch_radius"] = *config.patch_radius;
    if (config.search_radius)
      doc["search_radius"] = *config.search_radius;
    if (config.alpha)
      doc["alpha"] = *config.alpha;
    if (config.beta)
      doc["beta"] = *config.beta;
    if (config.workers)
      doc["workers"] = *config.workers;
    if (config.consensus_shortcut)
      doc["consensus_shortcut"] = *config.consensus_shortcut;
    if (config.normalize)
      doc["normalize"] = *config.normalize;
    const auto r = cli::resolve_settings(flags, cli::settings_from_json(doc));

    auto pick = [](const auto &f, const auto &c, const auto &d) { return f ? *f : c ? *c : d; };
    CHECK(r.fusion.mode == (flags.mode || config.mode ? *parse_fusion_mode(pick(flags.mode, config.mode, std::string()))
                                                      : defaults.fusion.mode));
    CHECK(r.fusion.patch.patch_radius == pick(flags.patch_radius, config.patch_radius, defaults.fusion.patch.patch_radius));
    CHECK(r.fusion.patch.search_radius ==
          pick(flags.search_radius, config.search_radius, defaults.fusion.patch.search_radius));
    CHECK(r.fusion.alpha == pick(flags.alpha, config.alpha, defaults.fusion.alpha));
    CHECK(r.fusion.beta == pick(flags.beta, config.beta, defaults.fusion.beta));
    CHECK(r.fusion.workers == pick(flags.workers, config.workers, defaults.fusion.workers));
    CHECK(r.fusion.consensus_shortcut ==
          pick(flags.consensus_shortcut, config.consensus_shortcut, defaults.fusion.consensus_shortcut));
    CHECK(r.normalize == pick(flags.normalize, config.normalize, defaults.normalize));
  }
}

TEST_CASE("config documents reject unknown keys and bad types") {
  CHECK_THROWS_AS(cli::settings_from_json({{"alpah", 0.1}}), cli::InputError);
  CHECK_THROWS_AS(cli::settings_from_json({{"alpha", "high"}}), cli::InputError);
  CHECK_NOTHROW(cli::settings_from_json({{"config", {{"alpha", 0.2}}}, {"tool", "longfuse"}}));
}

TEST_CASE("eval writes dice, reproducibility, volume and stats tables") {
  const fs::path dir = make_fixture("eval");
  std::vector<std::string> four = fuse_args(dir, "4djlf", 2, "four");
  REQUIRE(run(four).code == 0);
  const nlohmann::json doc = {
      {"labels", {1, 2, 3, 4}},
      {"groups", {{"whole", {1, 2, 3, 4}}}},
      {"subjects",
       {{{"id", "s1"},
         {"truth", {"ph/truth_t0.nii.gz", "ph/truth_t1.nii.gz"}},
         {"modes",
          {{"jlf", {"ph/truth_t0.nii.gz", "ph/truth_t1.nii.gz"}},
           {"4djlf", {"four_t0.nii.gz", "four_t1.nii.gz"}}}}}}}};
  std::ofstream(dir / "eval.json") << doc.dump();
  const Run r = run({"eval", "--input", path_of(dir, "eval.json"), "--out-dir", path_of(dir, "ev")});
  REQUIRE(r.code == 0);
  const std::string repro = slurp(dir / "ev/reproducibility.csv");
  CHECK(repro.find("s1,jlf,0-1,mean_dice,1.000000") != std::string::npos);
  CHECK(repro.find("s1,jlf,all,mean_dice,1.000000") != std::string::npos);
  const std::string stats = slurp(dir / "ev/stats.csv");
  CHECK(stats.rfind("metric,mode,baseline,n,mean_mode,mean_baseline,wilcoxon_p,cohens_d", 0) == 0);
  CHECK(stats.find("repro,4djlf,jlf,1,") != std::string::npos);
  CHECK(slurp(dir / "ev/volumes.csv").find("volume_group_whole") != std::string::npos);
  CHECK(slurp(dir / "ev/dice_vs_truth.csv").find("s1,jlf,1,dice_label_4,1.000000") != std::string::npos);
  CHECK(fs::exists(dir / "ev/eval_manifest.json"));

  nlohmann::json bad = doc;
  bad["subjects"][0]["modes"]["4djlf"] = {"four_t0.nii.gz"};
  std::ofstream(dir / "bad.json") << bad.dump();
  CHECK(run({"eval", "--input", path_of(dir, "bad.json"), "--out-dir", path_of(dir, "ev2")}).code == cli::kExitInput);
}

TEST_CASE("experiment report is deterministic per seed set") {
  const fs::path a = test::scratch_dir("exp_a"), b = test::scratch_dir("exp_b");
  const std::vector<std::string> common{"experiment", "--dims", "14", "14", "14", "--k", "2", "--n", "3",
                                        "--seeds", "5", "--patch-radius", "1", "--search-radius", "1"};
  auto with_out = [&](const fs::path &d) {
    auto v = common;
    v.push_back("--out-dir");
    v.push_back(d.string());
    return v;
  };
  const Run ra = run(with_out(a)), rb = run(with_out(b));
  REQUIRE(ra.code == 0);
  REQUIRE(rb.code == 0);
  CHECK(slurp(a / "report.txt") == slurp(b / "report.txt"));
  CHECK(slurp(a / "stats.csv") == slurp(b / "stats.csv"));
  CHECK(ra.out == slurp(a / "report.txt"));
  CHECK(slurp(a / "stats.csv").find("repro,4djlf,jlf,5,") != std::string::npos);

  const fs::path c = test::scratch_dir("exp_c");
  auto single = with_out(c);
  single.insert(single.end(), {"--modes", "jlf", "--first-seed", "3"});
  const Run rc = run(single);
  REQUIRE(rc.code == 0);
  CHECK(slurp(c / "stats.csv").find('\n') == slurp(c / "stats.csv").size() - 1); // header only
}
