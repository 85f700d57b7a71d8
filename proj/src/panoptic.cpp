#include "depthedge/edges.hpp"
#include "depthedge/panoptic_io.hpp"

#include <json.hpp>

#include <unordered_map>

namespace depthedge {

PanopticMap::PanopticMap(Image<std::int32_t> segments, Image<std::int32_t> classes,
                         std::set<std::pair<std::int32_t, std::int32_t>> excluded)
    : segment_id(std::move(segments)), class_id(std::move(classes)) {
  require_same_shape(segment_id, class_id, "PanopticMap");
  if (segment_id.rows() < 1 || segment_id.cols() < 1) {
    throw std::invalid_argument("PanopticMap: dimensions must be >= 1");
  }
  for (const auto& [a, b] : excluded) excluded_class_pairs.insert({std::min(a, b), std::max(a, b)});
  std::unordered_map<std::int32_t, std::int32_t> class_of;
  for (Eigen::Index i = 0; i < segment_id.size(); ++i) {
    const auto [it, inserted] = class_of.emplace(segment_id.data()[i], class_id.data()[i]);
    if (!inserted && it->second != class_id.data()[i]) {
      throw std::invalid_argument("PanopticMap: segment " + std::to_string(it->first) +
                                  " spans more than one class");
    }
  }
}

bool PanopticMap::excluded(std::int32_t a, std::int32_t b) const {
  return excluded_class_pairs.contains({std::min(a, b), std::max(a, b)});
}

EdgeMap gt_from_panoptic(const PanopticMap& pm) {
  const int h = pm.height();
  const int w = pm.width();
  EdgeMap out(h, w);
  constexpr int kOffsets[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const auto seg = pm.segment_id(r, c);
      for (const auto& off : kOffsets) {
        const int rr = r + off[0];
        const int cc = c + off[1];
        if (!in_bounds(pm.segment_id, rr, cc)) continue;
        const auto other = pm.segment_id(rr, cc);
        if (seg > other && !pm.excluded(pm.class_id(r, c), pm.class_id(rr, cc))) {
          out.set(r, c);
          break;
        }
      }
    }
  }
  return out;
}

PanopticMap read_panoptic(ByteView png_bytes, const std::string& exclusions_json) {
  const RawPng png = decode_png(png_bytes);
  if (png.palette || png.channels != 2 || png.bit_depth != 16) {
    throw FormatError("panoptic PNG: expected 2-channel 16-bit PNG (segment_id, class_id), got " +
                      std::to_string(png.channels) + " channels at " + std::to_string(png.bit_depth) +
                      "-bit");
  }
  Image<std::int32_t> seg(png.height, png.width);
  Image<std::int32_t> cls(png.height, png.width);
  for (int r = 0; r < png.height; ++r) {
    for (int c = 0; c < png.width; ++c) {
      seg(r, c) = png.at(r, c, 0);
      cls(r, c) = png.at(r, c, 1);
    }
  }
  return PanopticMap(std::move(seg), std::move(cls), parse_class_exclusions(exclusions_json));
}

std::set<std::pair<std::int32_t, std::int32_t>> parse_class_exclusions(const std::string& json_text) {
  std::set<std::pair<std::int32_t, std::int32_t>> out;
  if (json_text.empty()) return out;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("exclusion list: ") + e.what());
  }
  const nlohmann::json& pairs = j.is_object() ? j.at("excluded_class_pairs") : j;
  if (!pairs.is_array()) throw FormatError("exclusion list: expected an array of [class, class] pairs");
  for (const auto& p : pairs) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer()) {
      throw FormatError("exclusion list: each entry must be [int, int]");
    }
    const auto a = p[0].get<std::int32_t>();
    const auto b = p[1].get<std::int32_t>();
    out.insert({std::min(a, b), std::max(a, b)});
  }
  return out;
}

Bytes write_panoptic_png(const PanopticMap& pm) {
  RawPng png;
  png.height = pm.height();
  png.width = pm.width();
  png.channels = 2;
  png.bit_depth = 16;
  png.samples.resize(static_cast<std::size_t>(png.height) * png.width * 2);
  for (int r = 0; r < png.height; ++r) {
    for (int c = 0; c < png.width; ++c) {
      const std::size_t i = (static_cast<std::size_t>(r) * png.width + c) * 2;
      png.samples[i] = static_cast<std::uint16_t>(pm.segment_id(r, c));
      png.samples[i + 1] = static_cast<std::uint16_t>(pm.class_id(r, c));
    }
  }
  return encode_png(png);
}

}  // namespace depthedge
