#include "depthedge/annotation_server.hpp"

#include "depthedge/image_io.hpp"
#include "depthedge/json_format.hpp"

#include <httplib.h>

namespace depthedge {

using nlohmann::json;
using Kind = AnnotationError::Kind;

namespace {

constexpr const char* kJson = "application/json";

void send_json(httplib::Response& res, const json& j, int status = 200) {
  res.status = status;
  res.set_content(dump_json(j), kJson);
}

void send_bytes(httplib::Response& res, const Bytes& bytes, const char* type) {
  res.status = 200;
  res.set_content(std::string(bytes.begin(), bytes.end()), type);
}

int status_for(Kind k) {
  switch (k) {
    case Kind::NotFound:
    case Kind::NoDepth: return 404;
    case Kind::BadRequest: return 400;
    case Kind::Conflict:
    case Kind::NothingToExport: return 409;
    case Kind::Io: return 500;
  }
  return 500;
}

const char* content_type_for(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  return "application/octet-stream";
}

Pixel parse_pixel(const json& j, const char* key) {
  const json& p = j.at(key);
  if (!p.is_array() || p.size() != 2) throw AnnotationError(Kind::BadRequest, std::string(key) + " must be [row, col]");
  return {p.at(0).get<int>(), p.at(1).get<int>()};
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw AnnotationError(Kind::BadRequest, std::string("request body is not JSON: ") + e.what());
  }
}

// Wraps a handler so every failure becomes a JSON error response.
httplib::Server::Handler guarded(std::function<void(const httplib::Request&, httplib::Response&)> fn) {
  return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const AnnotationError& e) {
      send_json(res, {{"error", e.what()}}, status_for(e.kind()));
    } catch (const json::exception& e) {
      send_json(res, {{"error", std::string("malformed request: ") + e.what()}}, 400);
    } catch (const std::exception& e) {
      send_json(res, {{"error", e.what()}}, 500);
    }
  };
}

}  // namespace

struct AnnotationServer::Impl {
  AnnotationSession& session;
  ServerOptions options;
  httplib::Server server;
  int bound_port = -1;

  Impl(AnnotationSession& s, ServerOptions o) : session(s), options(std::move(o)) {}

  void routes() {
    auto& sv = server;
    const std::string item = R"(/items/([A-Za-z0-9._\-]+))";

    sv.Get("/items", guarded([this](const httplib::Request&, httplib::Response& res) {
      json items = json::array();
      for (const auto& info : session.items()) items.push_back(to_json(info));
      send_json(res, {{"items", items}});
    }));

    sv.Get(item, guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      json j = to_json(session.info(id));
      const std::string base = "/items/" + id;
      j["links"] = {{"image", base + "/image"}, {"depth", base + "/depth"}, {"edges", base + "/edges"}};
      j["depth_step_guideline_m"] = kDepthStepGuideline;
      send_json(res, j);
    }));

    sv.Get(item + "/image", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto& path = session.spec(req.matches[1]).rgb_path;
      if (path.empty() || !std::filesystem::is_regular_file(path)) {
        throw AnnotationError(Kind::NotFound, "item has no image");
      }
      send_bytes(res, read_file_bytes(path), content_type_for(path));
    }));

    sv.Get(item + "/depth", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_bytes(res, write_pfm(session.depth(req.matches[1])), "image/x-portable-floatmap");
    }));

    sv.Get(item + "/edges", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_bytes(res, write_edge_png8(*session.edges(req.matches[1])), "image/png");
    }));

    sv.Get(item + "/journal", guarded([this](const httplib::Request& req, httplib::Response& res) {
      json edits = json::array();
      for (const auto& e : session.journal(req.matches[1])) edits.push_back(to_json(e));
      send_json(res, {{"edits", edits}});
    }));

    sv.Post(item + "/edits", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      const EdgeMap updated = session.apply_edit(id, edge_edit_from_json(parse_body(req)));
      const ItemInfo info = session.info(id);
      send_bytes(res, write_edge_png8(updated), "image/png");
      res.set_header("X-Num-Edits", std::to_string(info.num_edits));
      res.set_header("X-Edge-Count", std::to_string(updated.count()));
    }));

    sv.Post(item + "/probe", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      const ProbeResult r = session.depth_probe(req.matches[1], parse_pixel(body, "p1"), parse_pixel(body, "p2"));
      send_json(res, {{"d1", r.d1}, {"d2", r.d2}, {"diff", r.diff}, {"exceeds_4m", r.exceeds_4m}});
    }));

    sv.Post(item + "/status", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      session.set_status(id, parse_item_status(parse_body(req).at("status").get<std::string>()));
      send_json(res, to_json(session.info(id)));
    }));

    sv.Post("/export", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      std::filesystem::path out = options.export_dir.value_or(session.dataset_root() / "export");
      if (body.contains("out_dir")) out = body.at("out_dir").get<std::string>();
      const ExportResult r = session.export_gt(out);
      send_json(res, {{"manifest_path", r.manifest_path.generic_string()}, {"ids", r.ids}});
    }));

    sv.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    if (options.static_dir) {
      sv.set_mount_point("/ui", options.static_dir->string());
      sv.Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_redirect("/ui/"); });
    }

    sv.set_post_routing_handler([this](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", "http://localhost:" + std::to_string(bound_port));
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.set_header("Access-Control-Expose-Headers", "X-Num-Edits, X-Edge-Count");
      res.set_header("Vary", "Origin");
    });
  }
};

AnnotationServer::AnnotationServer(AnnotationSession& session, ServerOptions options)
    : impl_(std::make_unique<Impl>(session, std::move(options))) {
  impl_->routes();
}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::bind() {
  auto& o = impl_->options;
  if (o.port == 0) {
    impl_->bound_port = impl_->server.bind_to_any_port(o.host);
  } else {
    impl_->bound_port = impl_->server.bind_to_port(o.host, o.port) ? o.port : -1;
  }
  if (impl_->bound_port < 0) {
    throw std::runtime_error("cannot bind " + o.host + ":" + std::to_string(o.port));
  }
  return impl_->bound_port;
}

bool AnnotationServer::serve() { return impl_->server.listen_after_bind(); }

void AnnotationServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void AnnotationServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace depthedge
