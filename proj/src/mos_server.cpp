#include "vocbench/mos_server.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <httplib.h>
#include <json.hpp>
#include <sstream>

#include "vocbench/error.hpp"

using nlohmann::json;

namespace vocbench::mos {

std::string strip_wav_metadata(const std::string& bytes) {
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0) {
    throw Error(ErrorCode::CorruptHeader, "stimulus is not a RIFF/WAVE file");
  }
  std::string body;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    std::uint32_t size;
    std::memcpy(&size, bytes.data() + pos + 4, 4);
    const std::string id = bytes.substr(pos, 4);
    const std::size_t avail = std::min<std::size_t>(size, bytes.size() - pos - 8);
    if (id == "fmt " || id == "data") {
      std::string chunk = bytes.substr(pos, 8 + avail);
      const auto real = static_cast<std::uint32_t>(avail);
      std::memcpy(chunk.data() + 4, &real, 4);
      if (avail & 1) chunk.push_back('\0');
      body += chunk;
    }
    pos += 8 + size + (size & 1);
  }
  std::string out = "RIFF";
  const auto riff_size = static_cast<std::uint32_t>(4 + body.size());
  out.append(reinterpret_cast<const char*>(&riff_size), 4);
  out += "WAVE";
  return out + body;
}

namespace {

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownSession:
    case ErrorCode::UnknownStimulus:
      return 404;
    default:
      return 400;
  }
}

// Error bodies carry only the code; messages could echo stimulus metadata.
void send_error(httplib::Response& res, const Error& e) {
  res.status = status_for(e.code());
  res.set_content(json{{"ok", false}, {"error", std::string(to_string(e.code()))}}.dump(),
                  "application/json");
}

}  // namespace

constexpr std::size_t kWorkerThreads = 32;

struct MosServer::Impl {
  MosStore& store;
  ServerOptions options;
  httplib::Server server;

  Impl(MosStore& s, ServerOptions o) : store(s), options(std::move(o)) {
    server.new_task_queue = [] { return new httplib::ThreadPool(kWorkerThreads); };
    routes();
  }

  void routes() {
    server.Post("/api/v1/session", [this](const httplib::Request& req, httplib::Response& res) {
      try {
        std::optional<std::string> resume;
        if (!req.body.empty()) {
          const json body = json::parse(req.body, nullptr, false);
          if (body.is_object() && body.contains("session_id") && body["session_id"].is_string()) {
            resume = body["session_id"].get<std::string>();
          }
        }
        const Session s = store.create_session(resume);
        res.set_content(json{{"session_id", s.id}, {"playlist", s.playlist}}.dump(),
                        "application/json");
      } catch (const Error& e) {
        send_error(res, e);
      }
    });

    server.Get(R"(/api/v1/stimulus/([0-9a-f]+)/audio)",
               [this](const httplib::Request& req, httplib::Response& res) {
                 const Stimulus* s = store.find_stimulus(req.matches[1]);
                 if (!s) {
                   send_error(res, Error(ErrorCode::UnknownStimulus, req.matches[1]));
                   return;
                 }
                 std::ifstream in(s->audio_path, std::ios::binary);
                 std::stringstream ss;
                 ss << in.rdbuf();
                 try {
                   res.set_content(strip_wav_metadata(ss.str()), "audio/wav");
                 } catch (const Error& e) {
                   send_error(res, e);
                 }
               });

    server.Post("/api/v1/rating", [this](const httplib::Request& req, httplib::Response& res) {
      const json body = json::parse(req.body, nullptr, false);
      if (!body.is_object() || !body.contains("session_id") || !body.contains("stimulus_id") ||
          !body.contains("score") || !body["score"].is_number_integer()) {
        send_error(res, Error(ErrorCode::SchemaMismatch, "rating body"));
        return;
      }
      try {
        store.submit({body["session_id"].get<std::string>(), body["stimulus_id"].get<std::string>(),
                      body["score"].get<int>(), std::chrono::system_clock::now()});
        res.set_content(R"({"ok":true})", "application/json");
      } catch (const Error& e) {
        send_error(res, e);
      } catch (const json::exception&) {
        send_error(res, Error(ErrorCode::SchemaMismatch, "rating body"));
      }
    });

    server.Get("/api/v1/admin/summary", [this](const httplib::Request& req, httplib::Response& res) {
      if (options.admin_token.empty() ||
          req.get_header_value("X-Admin-Token") != options.admin_token) {
        res.status = 403;
        res.set_content(R"({"ok":false,"error":"Forbidden"})", "application/json");
        return;
      }
      json out = json::array();
      try {
        for (const auto& s : store.summary()) {
          out.push_back({{"system", s.system},
                         {"n", s.n},
                         {"mos", s.mean},
                         {"ci95", s.ci95_half_width ? json(*s.ci95_half_width) : json(nullptr)}});
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoRatings) throw;
      }
      res.set_content(out.dump(), "application/json");
    });

    if (!options.ui_dir.empty()) server.set_mount_point("/", options.ui_dir.string());
  }
};

MosServer::MosServer(MosStore& store, ServerOptions options)
    : impl_(std::make_unique<Impl>(store, std::move(options))) {}

MosServer::~MosServer() { stop(); }

int MosServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

void MosServer::listen_after_bind() { impl_->server.listen_after_bind(); }

void MosServer::stop() { impl_->server.stop(); }

void MosServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace vocbench::mos
