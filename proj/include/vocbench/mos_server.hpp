#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "vocbench/mos.hpp"

namespace vocbench::mos {

struct ServerOptions {
  std::string admin_token;
  std::filesystem::path ui_dir;  // served at "/" when set
};

/// HTTP front end of a MosStore:
///   POST /api/v1/session              -> {"session_id", "playlist"}
///   GET  /api/v1/stimulus/{id}/audio  -> audio/wav
///   POST /api/v1/rating               -> {"ok": true}
///   GET  /api/v1/admin/summary        -> [{"system", "n", "mos", "ci95"}]  (X-Admin-Token)
/// Nothing a rater can reach mentions a system name.
class MosServer {
 public:
  MosServer(MosStore& store, ServerOptions options);
  ~MosServer();

  /// Binds and returns the chosen port (pass 0 for an ephemeral port).
  int bind(const std::string& host, int port);
  /// Blocks serving requests until stop().
  void listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Copy of a RIFF/WAVE file with every chunk except fmt and data removed.
std::string strip_wav_metadata(const std::string& bytes);

}  // namespace vocbench::mos
