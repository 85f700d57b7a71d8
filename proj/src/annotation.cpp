#include "depthedge/annotation.hpp"

#include "depthedge/image_io.hpp"
#include "depthedge/json_format.hpp"
#include "depthedge/panoptic_io.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace depthedge {

namespace fs = std::filesystem;
using nlohmann::json;
using Kind = AnnotationError::Kind;

std::string to_string(ProposalSource s) { return s == ProposalSource::Panoptic ? "panoptic" : "edge_map"; }

std::string to_string(ItemStatus s) {
  switch (s) {
    case ItemStatus::Todo: return "todo";
    case ItemStatus::InProgress: return "in_progress";
    case ItemStatus::Done: return "done";
  }
  return "todo";
}

ProposalSource parse_proposal_source(const std::string& s) {
  if (s == "panoptic") return ProposalSource::Panoptic;
  if (s == "edge_map" || s == "edge_map_files") return ProposalSource::EdgeMapFiles;
  throw AnnotationError(Kind::BadRequest, "unknown proposal source '" + s + "'");
}

ItemStatus parse_item_status(const std::string& s) {
  if (s == "todo") return ItemStatus::Todo;
  if (s == "in_progress") return ItemStatus::InProgress;
  if (s == "done") return ItemStatus::Done;
  throw AnnotationError(Kind::BadRequest, "unknown item status '" + s + "'");
}

// ---------------------------------------------------------------------------
// Edits

void EdgeEdit::validate(int height, int width) const {
  if (op == Op::AddPolyline && points.size() < 2) {
    throw AnnotationError(Kind::BadRequest, "add_polyline needs at least 2 points");
  }
  if (points.empty()) throw AnnotationError(Kind::BadRequest, "erase_polyline needs at least 1 point");
  if (brush_radius < 0) throw AnnotationError(Kind::BadRequest, "brush_radius must be >= 0");
  for (const Pixel& p : points) {
    if (p.row < 0 || p.col < 0 || p.row >= height || p.col >= width) {
      throw AnnotationError(Kind::BadRequest, "point (" + std::to_string(p.row) + ", " + std::to_string(p.col) +
                                                  ") outside " + std::to_string(height) + "x" +
                                                  std::to_string(width) + " frame");
    }
  }
}

json to_json(const EdgeEdit& e) {
  json pts = json::array();
  for (const Pixel& p : e.points) pts.push_back({p.row, p.col});
  json j = {{"op", e.op == EdgeEdit::Op::AddPolyline ? "add_polyline" : "erase_polyline"}, {"points", pts}};
  if (e.op == EdgeEdit::Op::ErasePolyline) j["brush_radius"] = e.brush_radius;
  return j;
}

EdgeEdit edge_edit_from_json(const json& j) {
  EdgeEdit e;
  try {
    const auto op = j.at("op").get<std::string>();
    if (op == "add_polyline") e.op = EdgeEdit::Op::AddPolyline;
    else if (op == "erase_polyline") e.op = EdgeEdit::Op::ErasePolyline;
    else throw AnnotationError(Kind::BadRequest, "unknown edit op '" + op + "'");
    for (const auto& p : j.at("points")) {
      if (!p.is_array() || p.size() != 2) throw AnnotationError(Kind::BadRequest, "points must be [row, col] pairs");
      e.points.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
    }
    e.brush_radius = j.value("brush_radius", 0);
  } catch (const json::exception& ex) {
    throw AnnotationError(Kind::BadRequest, std::string("malformed edit: ") + ex.what());
  }
  return e;
}

std::vector<Pixel> rasterize_polyline(const std::vector<Pixel>& points) {
  std::vector<Pixel> out;
  if (points.empty()) return out;
  out.push_back(points.front());
  for (std::size_t i = 1; i < points.size(); ++i) {
    int r = points[i - 1].row;
    int c = points[i - 1].col;
    const int r1 = points[i].row;
    const int c1 = points[i].col;
    const int dc = std::abs(c1 - c);
    const int dr = -std::abs(r1 - r);
    const int sc = c < c1 ? 1 : -1;
    const int sr = r < r1 ? 1 : -1;
    int err = dc + dr;
    while (r != r1 || c != c1) {
      const int e2 = 2 * err;
      if (e2 >= dr) {
        err += dr;
        c += sc;
      }
      if (e2 <= dc) {
        err += dc;
        r += sr;
      }
      out.push_back({r, c});
    }
  }
  return out;
}

void apply_edit_to(EdgeMap& edges, const EdgeEdit& edit) {
  edit.validate(edges.height(), edges.width());
  const auto trace = rasterize_polyline(edit.points);
  if (edit.op == EdgeEdit::Op::AddPolyline) {
    for (const Pixel& p : trace) edges.set(p.row, p.col, true);
    return;
  }
  const int rad = edit.brush_radius;
  const long r2 = static_cast<long>(rad) * rad;
  for (const Pixel& p : trace) {
    for (int dr = -rad; dr <= rad; ++dr) {
      for (int dc = -rad; dc <= rad; ++dc) {
        if (static_cast<long>(dr) * dr + static_cast<long>(dc) * dc > r2) continue;
        const int r = p.row + dr;
        const int c = p.col + dc;
        if (r >= 0 && c >= 0 && r < edges.height() && c < edges.width()) edges.set(r, c, false);
      }
    }
  }
}

EdgeMap replay(const EdgeMap& initial, const std::vector<EdgeEdit>& edits) {
  EdgeMap out = initial;
  for (const auto& e : edits) apply_edit_to(out, e);
  return out;
}

// ---------------------------------------------------------------------------
// Manifest

namespace {

bool valid_id(const std::string& id) {
  if (id.empty() || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](char ch) {
    return (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') || ch == '.' ||
           ch == '_' || ch == '-';
  });
}

}  // namespace

std::vector<AnnotationItemSpec> parse_annotation_manifest(const json& j, const fs::path& dataset_root) {
  const json& items = j.is_object() ? j.at("items") : j;
  if (!items.is_array()) throw AnnotationError(Kind::Io, "annotation manifest: expected a list of items");
  auto resolve = [&](const json& rec, const char* key) -> std::optional<fs::path> {
    if (!rec.contains(key) || rec.at(key).is_null()) return std::nullopt;
    const fs::path p(rec.at(key).get<std::string>());
    return p.is_absolute() ? p : dataset_root / p;
  };
  std::vector<AnnotationItemSpec> out;
  std::set<std::string> seen;
  for (const auto& rec : items) {
    AnnotationItemSpec s;
    try {
      s.id = rec.at("id").get<std::string>();
      if (!valid_id(s.id)) {
        throw AnnotationError(Kind::Io, "annotation manifest: id '" + s.id + "' must match [A-Za-z0-9._-]+");
      }
      if (!seen.insert(s.id).second) throw AnnotationError(Kind::Io, "annotation manifest: duplicate id " + s.id);
      s.rgb_path = resolve(rec, "rgb_path").value_or(fs::path());
      s.depth_path = resolve(rec, "depth_path");
      if (rec.contains("proposal")) s.proposal = parse_proposal_source(rec.at("proposal").get<std::string>());
      s.panoptic_path = resolve(rec, "panoptic_path");
      s.exclusions_path = resolve(rec, "exclusions_path");
      s.edges_path = resolve(rec, "edges_path");
    } catch (const json::exception& e) {
      throw AnnotationError(Kind::Io, std::string("annotation manifest: malformed record: ") + e.what());
    }
    out.push_back(std::move(s));
  }
  return out;
}

json to_json(const ItemInfo& info) {
  return {{"id", info.id},
          {"status", to_string(info.status)},
          {"proposal", to_string(info.proposal)},
          {"has_depth", info.has_depth},
          {"height", info.height},
          {"width", info.width},
          {"edge_count", info.edge_count},
          {"num_edits", info.num_edits}};
}

// ---------------------------------------------------------------------------
// Session

struct AnnotationSession::Item {
  AnnotationItemSpec spec;
  ProposalSource proposal = ProposalSource::Panoptic;
  EdgeMap initial;
  std::optional<DepthMap> depth;
  fs::path dir;

  std::mutex writer;
  std::atomic<ItemStatus> status{ItemStatus::Todo};
  // Published with std::atomic_load / std::atomic_store so readers never block.
  std::shared_ptr<const EdgeMap> current;
  std::shared_ptr<const std::vector<EdgeEdit>> edits;
  std::size_t snapshot_seq = 0;  // guarded by writer

  fs::path journal_path() const { return dir / "journal.jsonl"; }
  fs::path initial_path() const { return dir / "initial.png"; }
  fs::path snapshot_path() const { return dir / "snapshot.png"; }
  fs::path snapshot_meta_path() const { return dir / "snapshot.json"; }
};

namespace {

std::string read_text(const fs::path& p) {
  const Bytes b = read_file_bytes(p);
  return std::string(b.begin(), b.end());
}

void write_text(const fs::path& p, const std::string& s) {
  write_file_bytes(p, ByteView(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

void append_line(const fs::path& path, const std::string& line) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw AnnotationError(Kind::Io, "cannot open journal " + path.string() + ": " + std::strerror(errno));
  const char* p = line.data();
  std::size_t left = line.size();
  while (left > 0) {
    const ssize_t n = ::write(fd, p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      throw AnnotationError(Kind::Io, "journal append failed: " + std::string(std::strerror(err)));
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
}

// Reads complete, well-formed journal lines. A torn tail (crash mid-append) is
// cut off so later appends start on a clean line.
std::vector<EdgeEdit> recover_journal(const fs::path& path, int height, int width) {
  std::vector<EdgeEdit> edits;
  if (!fs::exists(path)) return edits;
  const std::string text = read_text(path);
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) break;
    try {
      const json j = json::parse(text.substr(pos, nl - pos));
      if (j.at("seq").get<std::size_t>() != edits.size()) break;
      EdgeEdit e = edge_edit_from_json(j);
      e.validate(height, width);
      edits.push_back(std::move(e));
    } catch (const std::exception&) {
      break;
    }
    pos = nl + 1;
  }
  if (pos < text.size()) fs::resize_file(path, pos);
  return edits;
}

EdgeMap load_initial_edges(const AnnotationItemSpec& s, ProposalSource source) {
  if (source == ProposalSource::Panoptic) {
    if (!s.panoptic_path) throw AnnotationError(Kind::Io, "item " + s.id + ": panoptic proposal needs panoptic_path");
    const std::string excl = s.exclusions_path ? read_text(*s.exclusions_path) : std::string();
    return gt_from_panoptic(read_panoptic(read_file_bytes(*s.panoptic_path), excl));
  }
  if (!s.edges_path) throw AnnotationError(Kind::Io, "item " + s.id + ": edge_map proposal needs edges_path");
  return read_edge_png8(read_file_bytes(*s.edges_path));
}

}  // namespace

std::unique_ptr<AnnotationSession> AnnotationSession::open(const fs::path& dataset_root,
                                                           ProposalSource default_source, SessionOptions options) {
  if (options.snapshot_every < 1) throw std::invalid_argument("snapshot_every must be >= 1");
  const fs::path manifest_path = dataset_root / "manifest.json";
  if (!fs::is_regular_file(manifest_path)) {
    throw AnnotationError(Kind::Io, "missing manifest " + manifest_path.string());
  }
  json manifest;
  try {
    manifest = json::parse(read_text(manifest_path));
  } catch (const json::exception& e) {
    throw AnnotationError(Kind::Io, "manifest " + manifest_path.string() + ": " + e.what());
  }

  std::unique_ptr<AnnotationSession> s(new AnnotationSession());
  s->root_ = dataset_root;
  s->options_ = options;
  s->state_dir_ = options.state_dir.value_or(dataset_root / ".annotation");
  fs::create_directories(s->state_dir_ / "items");

  json saved = json::object();
  const fs::path session_file = s->state_dir_ / "session.json";
  if (fs::exists(session_file)) {
    try {
      saved = json::parse(read_text(session_file)).value("items", json::object());
    } catch (const json::exception& e) {
      throw AnnotationError(Kind::Io, "session state " + session_file.string() + ": " + e.what());
    }
  }

  for (auto& spec : parse_annotation_manifest(manifest, dataset_root)) {
    auto item = std::make_unique<Item>();
    item->spec = std::move(spec);
    const std::string& id = item->spec.id;
    item->dir = s->state_dir_ / "items" / id;
    fs::create_directories(item->dir);
    const json* prev = saved.contains(id) ? &saved.at(id) : nullptr;
    try {
      if (prev && fs::exists(item->initial_path())) {
        item->proposal = parse_proposal_source(prev->value("proposal", to_string(default_source)));
        item->status = parse_item_status(prev->value("status", "todo"));
        item->initial = read_edge_png8(read_file_bytes(item->initial_path()));
      } else {
        item->proposal = item->spec.proposal.value_or(default_source);
        item->initial = load_initial_edges(item->spec, item->proposal);
        write_file_bytes(item->initial_path(), write_edge_png8(item->initial));
        fs::remove(item->journal_path());
        fs::remove(item->snapshot_path());
        fs::remove(item->snapshot_meta_path());
      }
      if (item->spec.depth_path) {
        item->depth = read_depth_any(read_file_bytes(*item->spec.depth_path));
        if (item->depth->height() != item->initial.height() || item->depth->width() != item->initial.width()) {
          throw AnnotationError(Kind::Io, "depth frame does not match edge frame");
        }
      }
    } catch (const AnnotationError&) {
      throw;
    } catch (const std::exception& e) {
      throw AnnotationError(Kind::Io, "item " + id + ": " + e.what());
    }

    const int h = item->initial.height();
    const int w = item->initial.width();
    auto edits = recover_journal(item->journal_path(), h, w);
    EdgeMap current = item->initial;
    std::size_t start = 0;
    if (fs::exists(item->snapshot_meta_path()) && fs::exists(item->snapshot_path())) {
      try {
        const auto seq = json::parse(read_text(item->snapshot_meta_path())).at("seq").get<std::size_t>();
        EdgeMap snap = read_edge_png8(read_file_bytes(item->snapshot_path()));
        if (seq <= edits.size() && snap.height() == h && snap.width() == w) {
          current = std::move(snap);
          start = seq;
          item->snapshot_seq = seq;
        }
      } catch (const std::exception&) {
        // Unusable snapshot: fall back to a full replay.
      }
    }
    for (std::size_t i = start; i < edits.size(); ++i) apply_edit_to(current, edits[i]);
    item->current = std::make_shared<const EdgeMap>(std::move(current));
    item->edits = std::make_shared<const std::vector<EdgeEdit>>(std::move(edits));
    if (item->status == ItemStatus::Done && item->snapshot_seq != item->edits->size()) {
      s->write_snapshot(*item, *item->current, item->edits->size());
    }
    s->by_id_[id] = item.get();
    s->items_.push_back(std::move(item));
  }
  s->save_session_file();
  return s;
}

AnnotationSession::~AnnotationSession() = default;

AnnotationSession::Item& AnnotationSession::find(const std::string& id) const {
  const auto it = by_id_.find(id);
  if (it == by_id_.end()) throw AnnotationError(Kind::NotFound, "unknown item '" + id + "'");
  return *it->second;
}

void AnnotationSession::write_snapshot(Item& item, const EdgeMap& edges, std::size_t seq) const {
  write_file_bytes(item.snapshot_path(), write_edge_png8(edges));
  write_text(item.snapshot_meta_path(), dump_json({{"seq", seq}}));
  item.snapshot_seq = seq;
}

void AnnotationSession::save_session_file() const {
  std::lock_guard lk(session_file_mutex_);
  json items = json::object();
  for (const auto& it : items_) {
    items[it->spec.id] = {{"status", to_string(it->status.load())}, {"proposal", to_string(it->proposal)}};
  }
  write_text(state_dir_ / "session.json", dump_json({{"dataset_root", root_.generic_string()}, {"items", items}}));
}

std::vector<ItemInfo> AnnotationSession::items() const {
  std::vector<ItemInfo> out;
  for (const auto& it : items_) out.push_back(info(it->spec.id));
  return out;
}

ItemInfo AnnotationSession::info(const std::string& id) const {
  const Item& it = find(id);
  const auto cur = std::atomic_load(&it.current);
  const auto edits = std::atomic_load(&it.edits);
  return {id, it.status.load(), it.proposal, it.depth.has_value(), cur->height(), cur->width(), cur->count(),
          edits->size()};
}

const AnnotationItemSpec& AnnotationSession::spec(const std::string& id) const { return find(id).spec; }

std::shared_ptr<const EdgeMap> AnnotationSession::edges(const std::string& id) const {
  return std::atomic_load(&find(id).current);
}

const EdgeMap& AnnotationSession::initial_edges(const std::string& id) const { return find(id).initial; }

const DepthMap& AnnotationSession::depth(const std::string& id) const {
  const Item& it = find(id);
  if (!it.depth) throw AnnotationError(Kind::NoDepth, "item " + id + " has no depth attached");
  return *it.depth;
}

std::vector<EdgeEdit> AnnotationSession::journal(const std::string& id) const {
  return *std::atomic_load(&find(id).edits);
}

EdgeMap AnnotationSession::apply_edit(const std::string& id, const EdgeEdit& edit) {
  Item& it = find(id);
  std::unique_lock lk(it.writer, std::try_to_lock);
  if (!lk.owns_lock()) throw AnnotationError(Kind::Conflict, "item " + id + " is being modified by another writer");

  const auto cur = std::atomic_load(&it.current);
  edit.validate(cur->height(), cur->width());
  EdgeMap next = *cur;
  apply_edit_to(next, edit);

  const auto prev = std::atomic_load(&it.edits);
  json line = to_json(edit);
  line["seq"] = prev->size();
  append_line(it.journal_path(), line.dump() + "\n");

  auto edits = std::make_shared<std::vector<EdgeEdit>>(*prev);
  edits->push_back(edit);
  const std::size_t seq = edits->size();
  std::atomic_store(&it.edits, std::shared_ptr<const std::vector<EdgeEdit>>(std::move(edits)));
  std::atomic_store(&it.current, std::make_shared<const EdgeMap>(next));

  if (seq - it.snapshot_seq >= static_cast<std::size_t>(options_.snapshot_every)) write_snapshot(it, next, seq);
  ItemStatus expected = ItemStatus::Todo;
  if (it.status.compare_exchange_strong(expected, ItemStatus::InProgress)) save_session_file();
  return next;
}

ProbeResult AnnotationSession::depth_probe(const std::string& id, Pixel p1, Pixel p2) const {
  const DepthMap& d = depth(id);
  auto sample = [&](Pixel p) {
    if (p.row < 0 || p.col < 0 || p.row >= d.height() || p.col >= d.width()) {
      throw AnnotationError(Kind::BadRequest, "probe pixel (" + std::to_string(p.row) + ", " +
                                                  std::to_string(p.col) + ") outside the frame");
    }
    if (!d.is_valid(p.row, p.col)) {
      throw AnnotationError(Kind::BadRequest, "probe pixel (" + std::to_string(p.row) + ", " +
                                                  std::to_string(p.col) + ") has no valid depth");
    }
    return d.at(p.row, p.col);
  };
  ProbeResult r;
  r.d1 = sample(p1);
  r.d2 = sample(p2);
  r.diff = std::abs(r.d1 - r.d2);
  r.exceeds_4m = r.diff >= kDepthStepGuideline;
  return r;
}

void AnnotationSession::set_status(const std::string& id, ItemStatus status) {
  Item& it = find(id);
  std::unique_lock lk(it.writer, std::try_to_lock);
  if (!lk.owns_lock()) throw AnnotationError(Kind::Conflict, "item " + id + " is being modified by another writer");
  if (status == ItemStatus::Done) {
    const auto edits = std::atomic_load(&it.edits);
    write_snapshot(it, *std::atomic_load(&it.current), edits->size());
  }
  it.status = status;
  save_session_file();
}

ExportResult AnnotationSession::export_gt(const fs::path& out_dir) const {
  std::vector<const Item*> done;
  for (const auto& it : items_) {
    if (it->status == ItemStatus::Done) done.push_back(it.get());
  }
  if (done.empty()) throw AnnotationError(Kind::NothingToExport, "no items are marked done");

  fs::create_directories(out_dir / "edges");
  ExportResult result;
  json manifest = json::array();
  for (const Item* it : done) {
    const std::string rel = "edges/" + it->spec.id + ".png";
    write_file_bytes(out_dir / rel, write_edge_png8(*std::atomic_load(&it->current)));
    const std::string depth = it->spec.depth_path ? fs::absolute(*it->spec.depth_path).generic_string() : "";
    // pred_depth_path starts as the GT depth; replace it with a model's output before evaluating.
    manifest.push_back({{"id", it->spec.id},
                        {"pred_depth_path", depth},
                        {"gt_depth_path", depth},
                        {"gt_edges_path", rel},
                        {"rgb_path", it->spec.rgb_path.empty() ? "" : fs::absolute(it->spec.rgb_path).generic_string()}});
    result.ids.push_back(it->spec.id);
  }
  result.manifest_path = out_dir / "manifest.json";
  write_text(result.manifest_path, dump_json(manifest));
  return result;
}

}  // namespace depthedge
