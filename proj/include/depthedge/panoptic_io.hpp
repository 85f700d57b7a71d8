#pragma once

#include "depthedge/edges.hpp"
#include "depthedge/image_io.hpp"

#include <string>

namespace depthedge {

/// 2-channel 16-bit PNG (channel 0 segment_id, channel 1 class_id) plus an
/// optional JSON exclusion list: `[[a, b], ...]` or `{"excluded_class_pairs": [...]}`.
PanopticMap read_panoptic(ByteView png_bytes, const std::string& exclusions_json = {});
std::set<std::pair<std::int32_t, std::int32_t>> parse_class_exclusions(const std::string& json_text);
Bytes write_panoptic_png(const PanopticMap& pm);

}  // namespace depthedge
