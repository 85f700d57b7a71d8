#pragma once

#include "depthedge/types.hpp"

#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace depthedge {

enum class ProposalSource { Panoptic, EdgeMapFiles };
enum class ItemStatus { Todo, InProgress, Done };

std::string to_string(ProposalSource s);
std::string to_string(ItemStatus s);
ProposalSource parse_proposal_source(const std::string& s);
ItemStatus parse_item_status(const std::string& s);

class AnnotationError : public std::runtime_error {
 public:
  enum class Kind { NotFound, BadRequest, Conflict, NoDepth, NothingToExport, Io };

  AnnotationError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct EdgeEdit {
  enum class Op { AddPolyline, ErasePolyline };

  Op op = Op::AddPolyline;
  std::vector<Pixel> points;
  int brush_radius = 0;  // erase only

  /// Throws AnnotationError(BadRequest) on too few points, negative radius or
  /// points outside a height x width frame.
  void validate(int height, int width) const;
};

/// {"op": "add_polyline" | "erase_polyline", "points": [[row, col], ...], "brush_radius": r}
nlohmann::json to_json(const EdgeEdit& e);
EdgeEdit edge_edit_from_json(const nlohmann::json& j);

/// Bresenham trace through consecutive points; shared vertices appear once.
std::vector<Pixel> rasterize_polyline(const std::vector<Pixel>& points);

/// Applies one validated edit in place.
void apply_edit_to(EdgeMap& edges, const EdgeEdit& edit);

/// Folds `edits` over a copy of `initial`.
EdgeMap replay(const EdgeMap& initial, const std::vector<EdgeEdit>& edits);

inline constexpr double kDepthStepGuideline = 4.0;  // meters

struct ProbeResult {
  double d1 = 0.0;
  double d2 = 0.0;
  double diff = 0.0;
  bool exceeds_4m = false;
};

/// Input record from <dataset_root>/manifest.json. Relative paths resolve
/// against dataset_root.
struct AnnotationItemSpec {
  std::string id;
  std::filesystem::path rgb_path;
  std::optional<std::filesystem::path> depth_path;
  std::optional<ProposalSource> proposal;  // falls back to the session default
  std::optional<std::filesystem::path> panoptic_path;
  std::optional<std::filesystem::path> exclusions_path;
  std::optional<std::filesystem::path> edges_path;
};

std::vector<AnnotationItemSpec> parse_annotation_manifest(const nlohmann::json& j,
                                                          const std::filesystem::path& dataset_root);

struct ItemInfo {
  std::string id;
  ItemStatus status = ItemStatus::Todo;
  ProposalSource proposal = ProposalSource::Panoptic;
  bool has_depth = false;
  int height = 0;
  int width = 0;
  std::size_t edge_count = 0;
  std::size_t num_edits = 0;
};

nlohmann::json to_json(const ItemInfo& info);

struct SessionOptions {
  /// Journal, snapshots and session.json; defaults to <dataset_root>/.annotation.
  std::optional<std::filesystem::path> state_dir;
  /// Materialize a PNG8 snapshot after this many journaled edits.
  int snapshot_every = 16;
};

struct ExportResult {
  std::filesystem::path manifest_path;
  std::vector<std::string> ids;
};

/// Annotation state for one dataset. Edits to an item are single-writer: a
/// concurrent writer gets AnnotationError(Conflict). Reads never block.
class AnnotationSession {
 public:
  /// Loads <dataset_root>/manifest.json. Existing state in the state directory
  /// is resumed by replaying each item's journal; otherwise initial edges are
  /// materialized and every item starts as todo.
  static std::unique_ptr<AnnotationSession> open(const std::filesystem::path& dataset_root,
                                                 ProposalSource default_source, SessionOptions options = {});

  AnnotationSession(const AnnotationSession&) = delete;
  AnnotationSession& operator=(const AnnotationSession&) = delete;
  ~AnnotationSession();

  const std::filesystem::path& dataset_root() const { return root_; }
  const std::filesystem::path& state_dir() const { return state_dir_; }

  std::vector<ItemInfo> items() const;
  ItemInfo info(const std::string& id) const;
  const AnnotationItemSpec& spec(const std::string& id) const;

  std::shared_ptr<const EdgeMap> edges(const std::string& id) const;
  const EdgeMap& initial_edges(const std::string& id) const;
  /// Depth attached to the item; throws AnnotationError(NoDepth) if none.
  const DepthMap& depth(const std::string& id) const;
  /// Journaled edits in order.
  std::vector<EdgeEdit> journal(const std::string& id) const;

  /// Validates, appends to the journal, then publishes the new edge map.
  /// A todo item moves to in_progress.
  EdgeMap apply_edit(const std::string& id, const EdgeEdit& edit);
  /// Reports both depths and whether |d1 - d2| >= 4 m. Advisory only.
  ProbeResult depth_probe(const std::string& id, Pixel p1, Pixel p2) const;
  /// Marking done persists a snapshot first.
  void set_status(const std::string& id, ItemStatus status);

  /// Writes <out_dir>/edges/<id>.png for every done item plus <out_dir>/manifest.json.
  ExportResult export_gt(const std::filesystem::path& out_dir) const;

 private:
  struct Item;

  AnnotationSession() = default;
  Item& find(const std::string& id) const;
  void write_snapshot(Item& item, const EdgeMap& edges, std::size_t seq) const;
  void save_session_file() const;

  std::filesystem::path root_;
  std::filesystem::path state_dir_;
  SessionOptions options_;
  std::vector<std::unique_ptr<Item>> items_;
  std::map<std::string, Item*, std::less<>> by_id_;
  mutable std::mutex session_file_mutex_;
};

}  // namespace depthedge
