#include "softsnap/service/server.hpp"

#include <httplib.h>

#include <atomic>
#include <stdexcept>

#include "softsnap/forward_solver.hpp"
#include "softsnap/serialization.hpp"
#include "softsnap/service/handlers.hpp"
#include "softsnap/service/session_store.hpp"

namespace softsnap::service {
namespace {

constexpr const char* kJson = "application/json";

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

// Runs fn(body) with errors mapped onto HTTP statuses.
template <typename Fn>
void guarded(const httplib::Request& req, httplib::Response& res, Fn&& fn) {
  try {
    json body = req.body.empty() ? json::object() : json::parse(req.body);
    fn(body);
  } catch (const json::parse_error& e) {
    reply(res, 400, error_body("malformed_json", e.what()));
  } catch (const ConvergenceError& e) {
    json body = error_body(e.code(), e.what());
    body["error"]["best"] = solution_to_json(e.best());
    reply(res, http_status(e.code()), body);
  } catch (const Error& e) {
    reply(res, http_status(e.code()), error_body(e.code(), e.what()));
  } catch (const json::exception& e) {
    reply(res, 400, error_body("invalid_argument", e.what()));
  } catch (const std::exception& e) {
    reply(res, 500, error_body("internal", e.what()));
  }
}

std::string session_of(const json& body) {
  if (!body.is_object() || !body.contains("session_id")) return {};
  if (!body["session_id"].is_string()) {
    throw Error(ErrorCode::invalid_argument, "session_id must be a string");
  }
  return body["session_id"].get<std::string>();
}

json without_session(json body) {
  if (body.is_object()) body.erase("session_id");
  return body;
}

}  // namespace

Server::Server(ServerOptions options)
    : options_(std::move(options)),
      store_(std::make_unique<SessionStore>(options_.data_dir.empty() ? default_data_dir()
                                                                      : options_.data_dir)),
      http_(std::make_unique<httplib::Server>()) {
  routes();
}

Server::~Server() { stop(); }

int Server::bind() {
  port_ = options_.port == 0 ? http_->bind_to_any_port(options_.host)
                             : (http_->bind_to_port(options_.host, options_.port) ? options_.port
                                                                                   : -1);
  if (port_ < 0) {
    throw std::runtime_error("cannot bind " + options_.host + ":" + std::to_string(options_.port));
  }
  return port_;
}

void Server::run() { http_->listen_after_bind(); }

void Server::stop() {
  if (http_) http_->stop();
}

void Server::routes() {
  httplib::Server& s = *http_;
  SessionStore& store = *store_;

  if (options_.static_dir) s.set_mount_point("/", options_.static_dir->string());

  s.Get("/api/v1/default-config", [](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, default_config());
  });

  s.Post("/api/v1/solve", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(req, res, [&](const json& body) {
      const std::string session = session_of(body);
      if (!session.empty()) store.get(session);
      const json result = solve(without_session(body));
      if (!session.empty()) store.append(session, "solve", without_session(body), result);
      reply(res, 200, result);
    });
  });

  s.Post("/api/v1/design", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(req, res, [&](const json& body) {
      const std::string session = session_of(body);
      if (!session.empty()) store.get(session);
      const json result = design(without_session(body));
      if (!session.empty()) store.append(session, "design", without_session(body), result);
      reply(res, 200, result);
    });
  });

  s.Post("/api/v1/sweep", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(req, res, [&](const json& body) {
      const std::string session = session_of(body);
      if (!session.empty()) store.get(session);
      const json request = without_session(body);
      // Bad requests get a plain JSON error before any row is streamed.
      check_sweep_request(request);
      res.status = 200;
      res.set_chunked_content_provider(
          "application/x-ndjson",
          [request, session, &store](std::size_t, httplib::DataSink& sink) {
            std::size_t rows = 0;
            json trailer;
            try {
              trailer = sweep(request, [&](const json& row) {
                const std::string line = row.dump() + "\n";
                ++rows;
                // write fails once the client has gone; that cancels the sweep
                return sink.is_writable() && sink.write(line.data(), line.size());
              });
            } catch (const Error& e) {
              trailer = error_body(e.code(), e.what());
            } catch (const std::exception& e) {
              trailer = error_body("internal", e.what());
            }
            if (trailer.value("cancelled", false)) {
              sink.done();
              return false;
            }
            if (!session.empty()) {
              try {
                store.append(session, "sweep", request, trailer);
              } catch (const std::exception&) {
              }
            }
            const std::string line = trailer.dump() + "\n";
            sink.write(line.data(), line.size());
            sink.done();
            return true;
          });
    });
  });

  s.Get("/api/v1/sessions", [&store](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, {{"schema", kSchemaVersion}, {"sessions", store.list()}});
  });

  s.Post("/api/v1/sessions", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(req, res, [&](const json& body) {
      if (!body.is_object()) throw Error(ErrorCode::invalid_argument, "body must be an object");
      const json config = body.contains("config") ? body["config"] : json::object();
      const std::string name = body.contains("name") ? body["name"].get<std::string>() : "";
      reply(res, 201, store.create(config, name));
    });
  });

  s.Get(R"(/api/v1/sessions/([0-9a-f]+))", [&store](const httplib::Request& req,
                                                   httplib::Response& res) {
    guarded(req, res, [&](const json&) { reply(res, 200, store.get(req.matches[1].str())); });
  });

  s.Post(R"(/api/v1/sessions/([0-9a-f]+)/history)", [&store](const httplib::Request& req,
                                                            httplib::Response& res) {
    guarded(req, res, [&](const json& body) {
      if (!body.is_object() || !body.contains("query") || !body.contains("result")) {
        throw Error(ErrorCode::invalid_argument, "history records need 'query' and 'result'");
      }
      const std::string kind = body.contains("kind") ? body["kind"].get<std::string>() : "note";
      reply(res, 201, store.append(req.matches[1].str(), kind, body["query"], body["result"]));
    });
  });

  s.Post(R"(/api/v1/sessions/([0-9a-f]+)/patterns)", [&store](const httplib::Request& req,
                                                             httplib::Response& res) {
    guarded(req, res, [&](const json& body) {
      if (!body.is_object() || !body.contains("name") || !body["name"].is_string() ||
          !body.contains("pattern")) {
        throw Error(ErrorCode::invalid_argument, "need 'name' (string) and 'pattern'");
      }
      reply(res, 200,
            {{"saved_patterns",
              store.save_pattern(req.matches[1].str(), body["name"].get<std::string>(),
                                 body["pattern"])}});
    });
  });

  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      res.set_content(error_body(res.status == 404 ? "not_found" : "http_error",
                                 "HTTP " + std::to_string(res.status))
                          .dump(),
                      kJson);
    }
  });
}

}  // namespace softsnap::service
