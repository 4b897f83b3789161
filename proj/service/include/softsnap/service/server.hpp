#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace httplib {
class Server;
}

namespace softsnap::service {

class SessionStore;

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path data_dir;
  std::optional<std::filesystem::path> static_dir;  // served under /
};

/// Local HTTP front end for the handlers and the session store.
///
///   POST /api/v1/solve
///   POST /api/v1/sweep                 newline-delimited JSON, one row per step
///   POST /api/v1/design
///   GET  /api/v1/default-config
///   GET  /api/v1/sessions              POST creates
///   GET  /api/v1/sessions/{id}
///   POST /api/v1/sessions/{id}/history
///   POST /api/v1/sessions/{id}/patterns
///
/// solve, sweep and design accept "session_id" and then append the query and
/// result to that session's history.
class Server {
 public:
  explicit Server(ServerOptions options);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds the socket; returns the bound port. Throws on failure.
  int bind();
  /// Serves until stop(). bind() first.
  void run();
  void stop();

  int port() const { return port_; }
  SessionStore& sessions() { return *store_; }

 private:
  void routes();

  ServerOptions options_;
  std::unique_ptr<SessionStore> store_;
  std::unique_ptr<httplib::Server> http_;
  int port_ = -1;
};

}  // namespace softsnap::service
