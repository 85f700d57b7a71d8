#pragma once

#include "depthedge/annotation.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace depthedge {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8707;  // 0 picks a free port
  /// Built UI assets, served under /ui/.
  std::optional<std::filesystem::path> static_dir;
  /// Default target of POST /export; <dataset_root>/export when unset.
  std::optional<std::filesystem::path> export_dir;
};

/// HTTP + JSON front end for an AnnotationSession.
///
///   GET  /items                     item summaries
///   GET  /items/{id}                summary plus resource links
///   GET  /items/{id}/image          RGB file as stored
///   GET  /items/{id}/depth          PFM
///   GET  /items/{id}/edges          PNG8 (255 = edge)
///   GET  /items/{id}/journal        journaled edits
///   POST /items/{id}/edits          EdgeEdit JSON; responds with the updated PNG8
///   POST /items/{id}/probe          {"p1": [r, c], "p2": [r, c]}
///   POST /items/{id}/status         {"status": "todo" | "in_progress" | "done"}
///   POST /export                    {"out_dir": optional path}
///
/// Errors are {"error": message} with 400, 404, 409 or 500.
class AnnotationServer {
 public:
  AnnotationServer(AnnotationSession& session, ServerOptions options);
  ~AnnotationServer();

  /// Binds the socket; returns the bound port.
  int bind();
  /// Serves until stop(); call bind() first.
  bool serve();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace depthedge
