#include "depthedge/annotation.hpp"
#include "depthedge/evaluate.hpp"
#include "depthedge/image_io.hpp"
#include "depthedge/panoptic_io.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <thread>

using namespace depthedge;
using depthedge::fixtures::TempDir;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kH = 12;
constexpr int kW = 16;

// Two segments split at column 8, different classes; depth steps 10 -> 15 m there.
PanopticMap two_segment_panoptic() {
  Image<std::int32_t> seg(kH, kW), cls(kH, kW);
  for (int r = 0; r < kH; ++r) {
    for (int c = 0; c < kW; ++c) {
      seg(r, c) = c < 8 ? 1 : 2;
      cls(r, c) = c < 8 ? 3 : 4;
    }
  }
  return PanopticMap(seg, cls);
}

DepthMap step_depth() { return fixtures::vertical_step(kH, kW, 7, 10.0, 15.0); }

void write_text_file(const fs::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

// Dataset with a panoptic item "a" (with depth) and an edge-map item "b" (no depth).
void make_dataset(const fs::path& root) {
  write_file_bytes(root / "a_pan.png", write_panoptic_png(two_segment_panoptic()));
  write_file_bytes(root / "a_depth.pfm", write_pfm(ImageF(step_depth().values().cast<float>())));
  write_text_file(root / "a.jpg", "not really a jpeg");
  write_file_bytes(root / "b_edges.png", write_edge_png8(EdgeMap(kH, kW, {{2, 2}, {2, 3}})));
  write_text_file(root / "manifest.json", R"([
    {"id": "a", "rgb_path": "a.jpg", "depth_path": "a_depth.pfm", "panoptic_path": "a_pan.png"},
    {"id": "b", "rgb_path": "b.jpg", "proposal": "edge_map", "edges_path": "b_edges.png"}
  ])");
}

EdgeEdit add(std::vector<Pixel> pts) { return {EdgeEdit::Op::AddPolyline, std::move(pts), 0}; }
EdgeEdit erase(std::vector<Pixel> pts, int radius) { return {EdgeEdit::Op::ErasePolyline, std::move(pts), radius}; }

std::vector<Pixel> sorted(std::vector<Pixel> v) {
  std::sort(v.begin(), v.end(), [](const Pixel& a, const Pixel& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Edits

TEST(Rasterize, AxisAlignedSegment) {
  const auto px = rasterize_polyline({{0, 0}, {0, 3}});
  ASSERT_EQ(px.size(), 4u);
  for (int c = 0; c < 4; ++c) {
    EXPECT_EQ(px[c].row, 0);
    EXPECT_EQ(px[c].col, c);
  }
}

TEST(Rasterize, Diagonal) {
  const auto px = rasterize_polyline({{0, 0}, {3, 3}});
  ASSERT_EQ(px.size(), 4u);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(px[i].row, i);
    EXPECT_EQ(px[i].col, i);
  }
}

TEST(Rasterize, SharedVertexAppearsOnceAndTraceIsConnected) {
  const auto px = rasterize_polyline({{0, 0}, {2, 5}, {6, 1}});
  EXPECT_EQ(px.front().row, 0);
  EXPECT_EQ(px.back().row, 6);
  for (std::size_t i = 1; i < px.size(); ++i) {
    EXPECT_LE(std::abs(px[i].row - px[i - 1].row), 1);
    EXPECT_LE(std::abs(px[i].col - px[i - 1].col), 1);
    EXPECT_FALSE(px[i].row == px[i - 1].row && px[i].col == px[i - 1].col);
  }
}

TEST(Edits, AddThenEraseRadiusZero) {
  EdgeMap e(4, 4);
  apply_edit_to(e, add({{0, 0}, {0, 3}}));
  EXPECT_EQ(e.count(), 4u);
  apply_edit_to(e, erase({{0, 2}}, 0));
  EXPECT_EQ(e.count(), 3u);
  EXPECT_FALSE(e.contains(0, 2));
}

TEST(Edits, EraseRadiusIsEuclidean) {
  EdgeMap e(Mask::Constant(5, 5, true));
  apply_edit_to(e, erase({{2, 2}}, 1));
  EXPECT_EQ(e.count(), 20u);
  EXPECT_TRUE(e.contains(1, 1));
  EXPECT_FALSE(e.contains(1, 2));
}

TEST(Edits, Validation) {
  EdgeMap e(4, 4);
  EXPECT_THROW(apply_edit_to(e, add({{0, 0}})), AnnotationError);
  EXPECT_THROW(apply_edit_to(e, add({{0, 0}, {4, 0}})), AnnotationError);
  EXPECT_THROW(apply_edit_to(e, erase({{0, 0}}, -1)), AnnotationError);
  EXPECT_THROW(apply_edit_to(e, erase({}, 0)), AnnotationError);
  EXPECT_TRUE(e.empty());
}

TEST(Edits, JsonRoundTrip) {
  const EdgeEdit e = erase({{1, 2}, {3, 4}}, 2);
  const EdgeEdit back = edge_edit_from_json(to_json(e));
  EXPECT_EQ(back.op, e.op);
  EXPECT_EQ(back.brush_radius, 2);
  ASSERT_EQ(back.points.size(), 2u);
  EXPECT_EQ(back.points[1].col, 4);
  EXPECT_EQ(to_json(e).at("op"), "erase_polyline");
  EXPECT_THROW(edge_edit_from_json(json{{"op", "paint"}, {"points", json::array()}}), AnnotationError);
  EXPECT_THROW(edge_edit_from_json(json{{"op", "add_polyline"}, {"points", {{1, 2, 3}}}}), AnnotationError);
}

TEST(Edits, ReplayIsFold) {
  Rng rng(2);
  EdgeMap cur(10, 10);
  std::vector<EdgeEdit> edits;
  for (int i = 0; i < 30; ++i) {
    auto p = [&] { return Pixel{static_cast<int>(rng.below(10)), static_cast<int>(rng.below(10))}; };
    const EdgeEdit e = rng.below(3) ? add({p(), p()}) : erase({p(), p()}, static_cast<int>(rng.below(3)));
    apply_edit_to(cur, e);
    edits.push_back(e);
  }
  EXPECT_EQ(replay(EdgeMap(10, 10), edits), cur);
}

TEST(Manifest, ParsesSourcesAndRejectsBadIds) {
  const auto specs = parse_annotation_manifest(
      json::parse(R"([{"id": "x", "rgb_path": "x.png", "proposal": "panoptic"}, {"id": "y"}])"), "/d");
  ASSERT_EQ(specs.size(), 2u);
  EXPECT_EQ(specs[0].rgb_path, fs::path("/d/x.png"));
  EXPECT_EQ(*specs[0].proposal, ProposalSource::Panoptic);
  EXPECT_FALSE(specs[1].proposal.has_value());
  EXPECT_THROW(parse_annotation_manifest(json::parse(R"([{"id": "../x"}])"), "/d"), AnnotationError);
  EXPECT_THROW(parse_annotation_manifest(json::parse(R"([{"id": "x"}, {"id": "x"}])"), "/d"), AnnotationError);
}

// ---------------------------------------------------------------------------
// Session

TEST(Session, EmptyManifest) {
  TempDir root("ann_empty");
  write_text_file(root / "manifest.json", "[]");
  EXPECT_TRUE(AnnotationSession::open(root.path(), ProposalSource::Panoptic)->items().empty());
}

TEST(Session, InitialEdgesFromEachSource) {
  TempDir root("ann_init");
  make_dataset(root.path());
  const auto s = AnnotationSession::open(root.path(), ProposalSource::Panoptic);
  ASSERT_EQ(s->items().size(), 2u);
  EXPECT_EQ(s->initial_edges("a"), gt_from_panoptic(two_segment_panoptic()));
  EXPECT_EQ(*s->edges("a"), s->initial_edges("a"));
  EXPECT_EQ(s->info("a").proposal, ProposalSource::Panoptic);
  EXPECT_EQ(s->info("b").proposal, ProposalSource::EdgeMapFiles);
  EXPECT_EQ(s->info("b").edge_count, 2u);
  EXPECT_TRUE(s->info("a").has_depth);
  EXPECT_FALSE(s->info("b").has_depth);
  EXPECT_EQ(s->info("a").status, ItemStatus::Todo);
  EXPECT_THROW(s->info("zzz"), AnnotationError);
}

TEST(Session, ProvenanceSurvivesReopen) {
  TempDir root("ann_prov");
  make_dataset(root.path());
  AnnotationSession::open(root.path(), ProposalSource::Panoptic);
  const auto s = AnnotationSession::open(root.path(), ProposalSource::EdgeMapFiles);
  EXPECT_EQ(s->info("a").proposal, ProposalSource::Panoptic);
  EXPECT_EQ(s->info("b").proposal, ProposalSource::EdgeMapFiles);
}

TEST(Session, DepthProbe) {
  TempDir root("ann_probe");
  make_dataset(root.path());
  const auto s = AnnotationSession::open(root.path(), ProposalSource::Panoptic);
  const ProbeResult step = s->depth_probe("a", {3, 7}, {3, 8});
  EXPECT_EQ(step.d1, 10.0);
  EXPECT_EQ(step.d2, 15.0);
  EXPECT_EQ(step.diff, 5.0);
  EXPECT_TRUE(step.exceeds_4m);
  const ProbeResult flat = s->depth_probe("a", {0, 0}, {5, 5});
  EXPECT_EQ(flat.diff, 0.0);
  EXPECT_FALSE(flat.exceeds_4m);
  EXPECT_THROW(s->depth_probe("a", {0, 0}, {kH, 0}), AnnotationError);
  try {
    s->depth_probe("b", {0, 0}, {0, 1});
    FAIL();
  } catch (const AnnotationError& e) {
    EXPECT_EQ(e.kind(), AnnotationError::Kind::NoDepth);
  }
}

TEST(Session, ProbeThresholdArithmetic) {
  TempDir root("ann_probe13");
  write_file_bytes(root / "d.pfm", write_pfm(ImageF(fixtures::vertical_step(4, 4, 1, 10.0, 13.0).values().cast<float>())));
  write_file_bytes(root / "e.png", write_edge_png8(EdgeMap(4, 4)));
  write_text_file(root / "manifest.json",
                  R"([{"id": "s", "depth_path": "d.pfm", "proposal": "edge_map", "edges_path": "e.png"}])");
  const auto s = AnnotationSession::open(root.path(), ProposalSource::Panoptic);
  const ProbeResult r = s->depth_probe("s", {0, 0}, {0, 3});
  EXPECT_EQ(r.diff, 3.0);
  EXPECT_FALSE(r.exceeds_4m);
}

TEST(Session, EditsMoveTodoToInProgressAndJournal) {
  TempDir root("ann_edit");
  make_dataset(root.path());
  const auto s = AnnotationSession::open(root.path(), ProposalSource::Panoptic);
  const EdgeMap after = s->apply_edit("b", add({{5, 0}, {5, 4}}));
  EXPECT_EQ(after.count(), 7u);
  EXPECT_EQ(*s->edges("b"), after);
  EXPECT_EQ(s->info("b").status, ItemStatus::InProgress);
  EXPECT_EQ(s->info("b").num_edits, 1u);
  EXPECT_EQ(s->journal("b").size(), 1u);
  EXPECT_THROW(s->apply_edit("b", add({{0, 0}, {0, 99}})), AnnotationError);
  EXPECT_EQ(s->journal("b").size(), 1u);
}

TEST(Session, ReplayReproducesCurrentAfterEveryEdit) {
  TempDir root("ann_replay");
  make_dataset(root.path());
  SessionOptions opts;
  opts.snapshot_every = 3;
  const auto s = AnnotationSession::open(root.path(), ProposalSource::Panoptic, opts);
  Rng rng(8);
  for (int i = 0; i < 20; ++i) {
    auto p = [&] { return Pixel{static_cast<int>(rng.below(kH)), static_cast<int>(rng.below(kW))}; };
    s->apply_edit("a", rng.below(4) ? add({p(), p(), p()}) : erase({p(), p()}, static_cast<int>(rng.below(2))));
    ASSERT_EQ(replay(s->initial_edges("a"), s->journal("a")), *s->edges("a"));
  }
}

TEST(Session, CrashMidAppendIsRecovered) {
  TempDir root("ann_crash");
  make_dataset(root.path());
  SessionOptions opts;
  opts.snapshot_every = 4;
  EdgeMap final_edges;
  std::vector<EdgeEdit> edits;
  {
    const auto s = AnnotationSession::open(root.path(), ProposalSource::Panoptic, opts);
    for (int i = 0; i < 6; ++i) s->apply_edit("a", add({{i, 0}, {i, 5 + i}}));
    s->apply_edit("a", erase({{2, 3}}, 1));
    final_edges = *s->edges("a");
    edits = s->journal("a");
  }
  const fs::path journal = root / ".annotation" / "items" / "a" / "journal.jsonl";
  ASSERT_TRUE(fs::exists(journal));
  const auto clean_size = fs::file_size(journal);
  {
    std::ofstream out(journal, std::ios::app | std::ios::binary);
    out << R"({"op":"add_polyline","points":[[0,0],[9,)";
  }
  const auto s = AnnotationSession::open(root.path(), ProposalSource::Panoptic, opts);
  EXPECT_EQ(*s->edges("a"), final_edges);
  EXPECT_EQ(replay(s->initial_edges("a"), s->journal("a")), final_edges);
  EXPECT_EQ(s->journal("a").size(), edits.size());
  EXPECT_EQ(fs::file_size(journal), clean_size);
  EXPECT_EQ(s->info("a").status, ItemStatus::InProgress);
  // Appends after recovery land on a clean line.
  s->apply_edit("a", add({{11, 0}, {11, 15}}));
  const auto again = AnnotationSession::open(root.path(), ProposalSource::Panoptic, opts);
  EXPECT_EQ(again->journal("a").size(), edits.size() + 1);
  EXPECT_EQ(*again->edges("a"), *s->edges("a"));
}

TEST(Session, ConcurrentWritersNeverCorruptTheJournal) {
  TempDir root("ann_conc");
  make_dataset(root.path());
  const auto s = AnnotationSession::open(root.path(), ProposalSource::Panoptic);
  std::atomic<int> ok{0}, conflicts{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 20; ++i) {
        try {
          s->apply_edit("a", add({{t, i % kW}, {(t + 3) % kH, (i + 5) % kW}}));
          ++ok;
        } catch (const AnnotationError& e) {
          EXPECT_EQ(e.kind(), AnnotationError::Kind::Conflict);
          ++conflicts;
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(ok + conflicts, 160);
  EXPECT_EQ(s->journal("a").size(), static_cast<std::size_t>(ok.load()));
  EXPECT_EQ(replay(s->initial_edges("a"), s->journal("a")), *s->edges("a"));
  const auto reopened = AnnotationSession::open(root.path(), ProposalSource::Panoptic);
  EXPECT_EQ(*reopened->edges("a"), *s->edges("a"));
}

TEST(Session, ExportWithNothingDoneFails) {
  TempDir root("ann_none");
  make_dataset(root.path());
  const auto s = AnnotationSession::open(root.path(), ProposalSource::Panoptic);
  try {
    s->export_gt(root / "out");
    FAIL();
  } catch (const AnnotationError& e) {
    EXPECT_EQ(e.kind(), AnnotationError::Kind::NothingToExport);
  }
}

TEST(Session, ExportRoundTripAndSelfEvaluation) {
  TempDir root("ann_export");
  make_dataset(root.path());
  const auto s = AnnotationSession::open(root.path(), ProposalSource::Panoptic);
  s->apply_edit("a", add({{1, 1}, {1, 6}}));
  s->apply_edit("a", add({{9, 2}, {11, 4}}));
  s->apply_edit("a", add({{4, 12}, {4, 15}}));
  s->apply_edit("a", erase({{4, 14}}, 0));
  s->apply_edit("b", add({{0, 0}, {3, 3}}));
  s->set_status("a", ItemStatus::Done);
  s->set_status("b", ItemStatus::Done);
  const ExportResult res = s->export_gt(root / "out");
  ASSERT_EQ(res.ids, (std::vector<std::string>{"a", "b"}));

  const auto manifest = json::parse(std::ifstream(res.manifest_path));
  for (const auto& rec : manifest) {
    const std::string id = rec.at("id");
    const EdgeMap back = read_edge_png8(read_file_bytes(root / "out" / rec.at("gt_edges_path").get<std::string>()));
    EXPECT_EQ(back, *s->edges(id));
  }
  // The exported manifest uses the evaluation schema; item "a" carries depth.
  const auto entries = parse_manifest(manifest, root / "out");
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_TRUE(fs::exists(entries[0].gt_depth_path));
  const EdgeMap gt = read_edge_png8(read_file_bytes(entries[0].gt_edges_path));
  const MatchResult m = match_edges(gt, gt, MatchConfig{});
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.recall, 1.0);
  EXPECT_EQ(sorted(gt.pixels()).size(), gt.count());
}

TEST(Session, DoneSurvivesReopenWithSnapshot) {
  TempDir root("ann_done");
  make_dataset(root.path());
  EdgeMap expect;
  {
    const auto s = AnnotationSession::open(root.path(), ProposalSource::Panoptic);
    s->apply_edit("b", add({{7, 0}, {7, 9}}));
    s->set_status("b", ItemStatus::Done);
    expect = *s->edges("b");
  }
  EXPECT_TRUE(fs::exists(root / ".annotation" / "items" / "b" / "snapshot.png"));
  const auto s = AnnotationSession::open(root.path(), ProposalSource::Panoptic);
  EXPECT_EQ(s->info("b").status, ItemStatus::Done);
  EXPECT_EQ(*s->edges("b"), expect);
}
