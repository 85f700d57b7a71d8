#include "depthedge/cli.hpp"
#include "depthedge/image_io.hpp"
#include "depthedge/lidar.hpp"
#include "depthedge/panoptic_io.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace depthedge;
using depthedge::fixtures::TempDir;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "depthedge");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string corpus_manifest() { return (fixtures::data_dir() / "corpus" / "manifest.json").string(); }

}  // namespace

TEST(Cli, Version) {
  const CliRun r = run({"version"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out, std::string(DEPTHEDGE_VERSION) + "\n");
}

TEST(Cli, UnknownSubcommandOrFlag) {
  const CliRun a = run({"frobnicate"});
  EXPECT_EQ(a.code, kExitUsage);
  EXPECT_FALSE(a.err.empty());
  EXPECT_EQ(run({"eval", "--bogus"}).code, kExitUsage);
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST(Cli, EvalMatchesGoldenFiles) {
  TempDir dir("cli_golden");
  const CliRun r = run({"--seed", "1", "eval", "--manifest", corpus_manifest(), "--out", (dir / "report.json").string(),
                        "--csv", (dir / "pr.csv").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(slurp(dir / "report.json"), slurp(fixtures::data_dir() / "golden_report.json"));
  EXPECT_EQ(slurp(dir / "pr.csv"), slurp(fixtures::data_dir() / "golden_pr_curve.csv"));
}

TEST(Cli, EvalIsIdenticalAcrossThreadCounts) {
  TempDir dir("cli_threads");
  for (const std::string t : {"1", "8", "auto"}) {
    const CliRun r = run({"--seed", "5", "--threads", t, "eval", "--manifest", corpus_manifest(), "--out",
                          (dir / ("r" + t + ".json")).string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
  }
  const std::string one = slurp(dir / "r1.json");
  EXPECT_EQ(one, slurp(dir / "r8.json"));
  EXPECT_EQ(one, slurp(dir / "rauto.json"));
}

TEST(Cli, EvalMissingManifestWritesNothing) {
  TempDir dir("cli_missing");
  const CliRun r = run({"--seed", "1", "eval", "--manifest", (dir / "nope.json").string(), "--out",
                        (dir / "report.json").string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("manifest"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "report.json"));
}

TEST(Cli, EvalNeedsSeed) {
  TempDir dir("cli_seed");
  const CliRun r = run({"eval", "--manifest", corpus_manifest(), "--out", (dir / "r.json").string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("seed"), std::string::npos);
  // A seed from the config file is enough.
  std::ofstream(dir / "cfg.json") << R"({"seed": 1})";
  const CliRun c = run({"--config", (dir / "cfg.json").string(), "eval", "--manifest", corpus_manifest(), "--out",
                        (dir / "r.json").string()});
  EXPECT_EQ(c.code, kExitOk) << c.err;
  EXPECT_EQ(slurp(dir / "r.json"), slurp(fixtures::data_dir() / "golden_report.json"));
}

TEST(Cli, EvalPartialFailureExitsOne) {
  TempDir dir("cli_partial");
  const fs::path corpus = fixtures::data_dir() / "corpus";
  json m = json::array();
  m.push_back({{"id", "scene_0"},
               {"pred_depth_path", (corpus / "scene_0_pred.pfm").string()},
               {"gt_depth_path", (corpus / "scene_0_gt.png").string()},
               {"gt_edges_path", (corpus / "scene_0_edges.png").string()}});
  m.push_back({{"id", "ghost"},
               {"pred_depth_path", "ghost.pfm"},
               {"gt_depth_path", "ghost.png"},
               {"gt_edges_path", "ghost_edges.png"}});
  std::ofstream(dir / "m.json") << m.dump();
  const CliRun r = run({"--seed", "1", "eval", "--manifest", (dir / "m.json").string(), "--out",
                        (dir / "r.json").string()});
  EXPECT_EQ(r.code, kExitItemFailures);
  EXPECT_NE(r.err.find("ghost"), std::string::npos);
  const json report = json::parse(slurp(dir / "r.json"));
  EXPECT_EQ(report.at("num_images"), 1);
  EXPECT_EQ(report.at("errors").at(0).at("id"), "ghost");
}

TEST(Cli, FlagsOverrideConfig) {
  TempDir dir("cli_cfg");
  const DepthMap d = fixtures::vertical_step(12, 12, 5, 10.0, 13.0);
  write_file_bytes(dir / "d.png", write_depth_png16(d));
  // Config thresholds of 0.5-1 m/px find the 3 m step (1.5 m/px centrally); the flags restore 4-5 m/px.
  std::ofstream(dir / "cfg.json") << R"({"canny": {"th_low": 0.5, "th_high": 1.0}})";
  const std::string cfg = (dir / "cfg.json").string();
  ASSERT_EQ(run({"--config", cfg, "extract-edges", "--depth", (dir / "d.png").string(), "--out",
                 (dir / "e1.png").string()})
                .code,
            kExitOk);
  EXPECT_FALSE(read_edge_png8(read_file_bytes(dir / "e1.png")).empty());
  ASSERT_EQ(run({"--config", cfg, "extract-edges", "--depth", (dir / "d.png").string(), "--out",
                 (dir / "e2.png").string(), "--th-low", "4", "--th-high", "5"})
                .code,
            kExitOk);
  EXPECT_TRUE(read_edge_png8(read_file_bytes(dir / "e2.png")).empty());
  EXPECT_EQ(run({"extract-edges", "--depth", (dir / "d.png").string(), "--out", (dir / "e3.png").string(),
                 "--th-low", "6", "--th-high", "5"})
                .code,
            kExitUsage);
}

TEST(Cli, OutDirPrefixesRelativeOutputs) {
  TempDir dir("cli_outdir");
  write_file_bytes(dir / "d.png", write_depth_png16(fixtures::vertical_step(12, 12, 5, 10.0, 30.0)));
  const CliRun r = run({"--out-dir", (dir / "results").string(), "extract-edges", "--depth",
                        (dir / "d.png").string(), "--out", "edges.png"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(dir / "results" / "edges.png"));
}

TEST(Cli, LossWritesTermsAndGradient) {
  TempDir dir("cli_loss");
  const auto inst = fixtures::make_grad_check_instance(2);
  write_file_bytes(dir / "pred.pfm", write_pfm(ImageF(inst.pred.values().cast<float>())));
  write_file_bytes(dir / "gt.png", write_depth_png16(inst.gt));
  write_file_bytes(dir / "edges.png", write_edge_png8(inst.edges));
  const CliRun r = run({"loss", "--pred", (dir / "pred.pfm").string(), "--gt-depth", (dir / "gt.png").string(),
                        "--gt-edges", (dir / "edges.png").string(), "--out", (dir / "loss.json").string(),
                        "--grad-out", (dir / "grad.pfm").string(), "--alpha", "0.5"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json j = json::parse(slurp(dir / "loss.json"));
  EXPECT_NEAR(j.at("total").get<double>(),
              j.at("depth_term").get<double>() + 0.5 * j.at("edge_term").get<double>(), 1e-7);
  EXPECT_EQ(read_pfm_field(read_file_bytes(dir / "grad.pfm")).rows(), 16);
  EXPECT_EQ(run({"loss", "--pred", (dir / "pred.pfm").string(), "--pred", (dir / "pred.pfm").string(),
                 "--gt-depth", (dir / "gt.png").string(), "--out", (dir / "l2.json").string()})
                .code,
            kExitUsage);
}

TEST(Cli, PrCurveSingleImage) {
  TempDir dir("cli_pr");
  const fs::path corpus = fixtures::data_dir() / "corpus";
  const CliRun r = run({"pr-curve", "--pred", (corpus / "scene_1_pred.pfm").string(), "--gt-edges",
                        (corpus / "scene_1_edges.png").string(), "--out", (dir / "pr.csv").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string csv = slurp(dir / "pr.csv");
  EXPECT_EQ(csv.rfind("param,precision,recall\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 31);
  EXPECT_EQ(run({"pr-curve", "--out", (dir / "x.csv").string()}).code, kExitUsage);
}

TEST(Cli, LidarDensityThinPipeline) {
  TempDir dir("cli_lidar");
  const DepthMap d = fixtures::vertical_step(40, 80, 39, 10.0, 30.0);
  write_file_bytes(dir / "d.png", write_depth_png16(d));
  std::ofstream(dir / "k.json") << R"({"fx": 40, "fy": 40, "cx": 40, "cy": 20})";
  ASSERT_EQ(run({"extract-edges", "--depth", (dir / "d.png").string(), "--out", (dir / "e.png").string()}).code,
            kExitOk);
  const CliRun sim = run({"lidar-sim", "--depth", (dir / "d.png").string(), "--intrinsics",
                          (dir / "k.json").string(), "--beams", "32", "--vert-fov", "-25", "25", "--out",
                          (dir / "l.png").string()});
  ASSERT_EQ(sim.code, kExitOk) << sim.err;
  const SparseDepth lidar = read_sparse_png16(read_file_bytes(dir / "l.png"));
  EXPECT_GT(lidar.size(), 100u);
  for (const auto& s : lidar.samples()) EXPECT_EQ(s.depth, d.at(s.row, s.col));

  const CliRun dens = run({"density", "--lidar", (dir / "l.png").string(), "--edges", (dir / "e.png").string(),
                           "--max-d", "10", "--out", (dir / "c.json").string()});
  ASSERT_EQ(dens.code, kExitOk) << dens.err;
  const DensityCurve curve = density_curve_from_json(json::parse(slurp(dir / "c.json")));
  EXPECT_EQ(curve.bins.size(), 11u);

  EXPECT_EQ(run({"thin", "--lidar", (dir / "l.png").string(), "--edges", (dir / "e.png").string(), "--factor",
                 "0.5", "--out", (dir / "t.png").string()})
                .code,
            kExitUsage);
  for (const std::string name : {"t1.png", "t2.png"}) {
    const CliRun t = run({"--seed", "3", "thin", "--lidar", (dir / "l.png").string(), "--edges",
                          (dir / "e.png").string(), "--factor", "0.5", "--out", (dir / name).string()});
    ASSERT_EQ(t.code, kExitOk) << t.err;
  }
  EXPECT_EQ(slurp(dir / "t1.png"), slurp(dir / "t2.png"));
  EXPECT_LT(read_sparse_png16(read_file_bytes(dir / "t1.png")).size(), lidar.size());
  EXPECT_EQ(run({"--seed", "3", "thin", "--lidar", (dir / "l.png").string(), "--edges", (dir / "e.png").string(),
                 "--factor", "0.5", "--target", (dir / "c.json").string(), "--out", (dir / "t3.png").string()})
                .code,
            kExitUsage);
}

TEST(Cli, GtFromPanopticAndDeePostprocess) {
  TempDir dir("cli_misc");
  Image<std::int32_t> seg(4, 6), cls(4, 6);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 6; ++c) {
      seg(r, c) = c < 3 ? 1 : 2;
      cls(r, c) = c < 3 ? 5 : 6;
    }
  }
  write_file_bytes(dir / "p.png", write_panoptic_png(PanopticMap(seg, cls)));
  ASSERT_EQ(run({"gt-from-panoptic", "--panoptic", (dir / "p.png").string(), "--out", (dir / "g.png").string()}).code,
            kExitOk);
  EXPECT_EQ(read_edge_png8(read_file_bytes(dir / "g.png")).count(), 4u);
  std::ofstream(dir / "x.json") << "[[5, 6]]";
  ASSERT_EQ(run({"gt-from-panoptic", "--panoptic", (dir / "p.png").string(), "--exclusions",
                 (dir / "x.json").string(), "--out", (dir / "g2.png").string()})
                .code,
            kExitOk);
  EXPECT_TRUE(read_edge_png8(read_file_bytes(dir / "g2.png")).empty());

  ImageD p = ImageD::Zero(5, 5);
  p.col(2).setConstant(0.95);
  write_file_bytes(dir / "prob.png", write_prob_png16(EdgeProbMap(p)));
  write_file_bytes(dir / "o.pfm", write_pfm(ImageF(ImageF::Zero(5, 5))));
  ASSERT_EQ(run({"dee-postprocess", "--probs", (dir / "prob.png").string(), "--orient", (dir / "o.pfm").string(),
                 "--out", (dir / "dee.png").string()})
                .code,
            kExitOk);
  const EdgeMap dee = read_edge_png8(read_file_bytes(dir / "dee.png"));
  EXPECT_EQ(dee.count(), 5u);
  EXPECT_TRUE(dee.contains(0, 2));
}
