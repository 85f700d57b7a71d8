// Writes the synthetic evaluation corpus used by the CLI determinism tests:
// five street-like scenes (ground plane, box occluders) with dense GT depth,
// GT edges from Canny on the GT, and a blurred, noisy "prediction".
//
//   make_fixture_corpus <out_dir> [seed]

#include "depthedge/edges.hpp"
#include "depthedge/image_io.hpp"
#include "depthedge/json_format.hpp"
#include "depthedge/rng.hpp"

#include <filesystem>
#include <iostream>
#include <string>

using namespace depthedge;
namespace fs = std::filesystem;

namespace {

constexpr int kHeight = 96;
constexpr int kWidth = 160;

DepthMap make_scene(Rng& rng) {
  ImageD d(kHeight, kWidth);
  // Ground plane receding toward a horizon at row 20, capped at 80 m.
  for (int r = 0; r < kHeight; ++r) {
    const double depth = r > 20 ? std::min(80.0, 1500.0 / (r - 20)) : 80.0;
    d.row(r).setConstant(depth);
  }
  // Boxes standing on the ground occlude the farther ground and sky behind them.
  const int boxes = 2 + static_cast<int>(rng.below(3));
  for (int b = 0; b < boxes; ++b) {
    const int w = 12 + static_cast<int>(rng.below(30));
    const int h = 10 + static_cast<int>(rng.below(30));
    const int c0 = static_cast<int>(rng.below(kWidth - w));
    const int r1 = 40 + static_cast<int>(rng.below(kHeight - 40));
    const int r0 = std::max(0, r1 - h);
    const double z = 1500.0 / (r1 - 20);
    for (int r = r0; r < r1; ++r) {
      for (int c = c0; c < c0 + w; ++c) d(r, c) = std::min(d(r, c), z);
    }
  }
  // Quantize to the PNG16 grid so the written GT round-trips exactly.
  d = (d * 256.0).round() / 256.0;
  return DepthMap::from_values(d);
}

DepthMap make_prediction(const DepthMap& gt, Rng& rng) {
  const double scale = rng.uniform(0.95, 1.05);
  ImageD p = gaussian_blur(gt.values(), 1.2) * scale;
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] *= 1.0 + rng.uniform(-0.02, 0.02);
  return DepthMap::from_values(p.cast<float>().cast<double>());
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: make_fixture_corpus <out_dir> [seed]\n";
    return 2;
  }
  const fs::path out = argv[1];
  const std::uint64_t seed = argc > 2 ? std::stoull(argv[2]) : 7;
  fs::create_directories(out);

  nlohmann::json manifest = nlohmann::json::array();
  for (int i = 0; i < 5; ++i) {
    const std::string id = "scene_" + std::to_string(i);
    Rng rng(derive_seed(seed, id));
    const DepthMap gt = make_scene(rng);
    const DepthMap pred = make_prediction(gt, rng);
    const EdgeMap edges = canny_depth_edges(gt, CannyConfig{});
    write_file_bytes(out / (id + "_gt.png"), write_depth_png16(gt));
    write_file_bytes(out / (id + "_edges.png"), write_edge_png8(edges));
    write_file_bytes(out / (id + "_pred.pfm"), write_pfm(ImageF(pred.values().cast<float>())));
    manifest.push_back({{"id", id},
                        {"pred_depth_path", id + "_pred.pfm"},
                        {"gt_depth_path", id + "_gt.png"},
                        {"gt_edges_path", id + "_edges.png"}});
  }
  const std::string text = dump_json(manifest);
  write_file_bytes(out / "manifest.json", ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  std::cout << "wrote 5 scenes to " << out << "\n";
  return 0;
}
