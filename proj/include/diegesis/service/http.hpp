#pragma once

#include <memory>
#include <optional>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "diegesis/graph/build.hpp"
#include "diegesis/graph/io.hpp"
#include "diegesis/ingest/bundle_io.hpp"
#include "diegesis/ingest/validate.hpp"
#include "diegesis/remote/sse.hpp"
#include "diegesis/service/service.hpp"

namespace diegesis {

// Profiles and timeline labels for the novel view. When t is given, each
// profile keeps only the drive in force at t, so nothing later leaks.
inline nlohmann::json novel_summary(const std::string& novel_id, const DiegeticGraph& graph,
                                    std::optional<Ordinal> t) {
  nlohmann::json profiles = nlohmann::json::array();
  for (auto p : graph.profiles()) {
    if (t) {
      const Drive* d = p.drive_at(*t);
      p.drives = d ? std::vector<Drive>{*d} : std::vector<Drive>{};
    }
    profiles.push_back(p);
  }
  nlohmann::json timeline = nlohmann::json::array();
  for (const auto& st : graph.timeline()) timeline.push_back({{"ordinal", st.ordinal}, {"label", st.label}});
  nlohmann::json out = {{"novel_id", novel_id},
                        {"profiles", profiles},
                        {"timeline", timeline},
                        {"node_count", graph.nodes().size()},
                        {"edge_count", graph.edges().size()}};
  if (t) out["t"] = *t;
  return out;
}

// Accepts a serialized graph or an extraction bundle. Bundles are validated
// and built; a bundle with errors is rejected with the validator's report.
inline DiegeticGraph graph_from_upload(std::string_view body) {
  const auto j = parse_json(body, "upload");
  if (looks_like_graph(j)) return graph_from_json(j);
  const auto bundle = decode_json<ExtractionBundle>(j, "bundle");
  const auto report = validate_bundle(bundle);
  if (!report.ok()) {
    fail(ErrorKind::invalid_argument, "bundle failed validation: " + nlohmann::json(report).dump());
  }
  return build_graph(bundle);
}

namespace detail {

inline void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, const Error& e) {
  send_json(res, e.http_status(), {{"error", {{"kind", to_string(e.kind())}, {"message", e.what()}}}});
}

inline Ordinal parse_ordinal(const std::string& text, const char* what) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || text.front() == '-') {
    fail(ErrorKind::invalid_argument, std::string(what) + " must be a non-negative integer");
  }
  return static_cast<Ordinal>(v);
}

inline nlohmann::json body_json(const httplib::Request& req) {
  const auto j = parse_json(req.body, "request body");
  if (!j.is_object()) fail(ErrorKind::invalid_argument, "request body must be a JSON object");
  return j;
}

// Runs fn and maps exceptions onto JSON error responses.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    send_error(res, e);
  } catch (const nlohmann::json::exception& e) {
    send_error(res, Error(ErrorKind::invalid_argument, e.what()));
  } catch (const std::exception& e) {
    send_error(res, Error(ErrorKind::io, e.what()));
  }
}

}  // namespace detail

// HTTP front end over a Service. Responses are JSON; message posts answer
// with a text/event-stream of "delta", "done" and "error" events.
class HttpServer {
 public:
  explicit HttpServer(Service& service) : service_(service) {
    // No SO_REUSEPORT: a second server on a busy port must fail to bind.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof yes);
    });
    routes();
  }

  ~HttpServer() { stop(); }

  // Binds host:port (port 0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port) {
    const bool ok = port == 0 ? (port_ = server_.bind_to_any_port(host)) > 0 : server_.bind_to_port(host, port);
    if (!ok) fail(ErrorKind::io, "cannot bind " + host + ":" + std::to_string(port) + " (port in use?)");
    if (port != 0) port_ = port;
    return port_;
  }

  // Blocks until stop().
  void run() { server_.listen_after_bind(); }

  void start() {
    thread_ = std::thread([this] { run(); });
    server_.wait_until_ready();
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }

 private:
  void routes() {
    using httplib::Request;
    using httplib::Response;
    server_.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                 {"Access-Control-Allow-Headers", "Content-Type"},
                                 {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server_.Options(R"(/.*)", [](const Request&, Response& res) { res.status = 204; });

    server_.Get("/health", [](const Request&, Response& res) { detail::send_json(res, 200, {{"status", "ok"}}); });

    server_.Get("/api/novels", [this](const Request&, Response& res) {
      detail::guarded(res, [&] { detail::send_json(res, 200, {{"novels", service_.novel_ids()}}); });
    });

    server_.Post("/api/novels", [this](const Request& req, Response& res) {
      detail::guarded(res, [&] {
        const std::string id = service_.add_novel(graph_from_upload(req.body));
        detail::send_json(res, 201, novel_summary(id, *service_.novel(id), std::nullopt));
      });
    });

    server_.Get(R"(/api/novels/([^/]+))", [this](const Request& req, Response& res) {
      detail::guarded(res, [&] {
        const std::string id = req.matches[1];
        const auto graph = service_.novel(id);
        std::optional<Ordinal> t;
        if (req.has_param("t")) {
          t = detail::parse_ordinal(req.get_param_value("t"), "t");
          if (!graph->valid_time(*t)) fail(ErrorKind::invalid_argument, "t is outside the timeline");
        }
        detail::send_json(res, 200, novel_summary(id, *graph, t));
      });
    });

    server_.Post("/api/sessions", [this](const Request& req, Response& res) {
      detail::guarded(res, [&] {
        const auto j = detail::body_json(req);
        const auto s = service_.create_session(j.at("novel_id").get<std::string>(),
                                               j.at("characters").get<std::vector<std::string>>(),
                                               j.value("t0", Ordinal{0}));
        detail::send_json(res, 201, s);
      });
    });

    server_.Get(R"(/api/sessions/([^/]+))", [this](const Request& req, Response& res) {
      detail::guarded(res, [&] { detail::send_json(res, 200, service_.get_session(req.matches[1])); });
    });

    server_.Post(R"(/api/sessions/([^/]+)/timeline)", [this](const Request& req, Response& res) {
      detail::guarded(res, [&] {
        const auto j = detail::body_json(req);
        detail::send_json(res, 200, service_.set_timeline(req.matches[1], j.at("t").get<Ordinal>()));
      });
    });

    server_.Get(R"(/api/sessions/([^/]+)/history)", [this](const Request& req, Response& res) {
      detail::guarded(res, [&] {
        const Ordinal page = req.has_param("page") ? detail::parse_ordinal(req.get_param_value("page"), "page") : 0;
        const Ordinal size =
            req.has_param("page_size") ? detail::parse_ordinal(req.get_param_value("page_size"), "page_size") : 0;
        detail::send_json(res, 200, service_.get_history(req.matches[1], page, size));
      });
    });

    server_.Post(R"(/api/sessions/([^/]+)/messages)", [this](const Request& req, Response& res) {
      detail::guarded(res, [&] {
        auto turn = decode_json<TurnRequest>(detail::body_json(req), "turn request");
        turn.session_id = req.matches[1];
        service_.validate_turn(turn);
        res.status = 200;
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider("text/event-stream", [this, turn](std::size_t, httplib::DataSink& sink) {
          auto emit = [&](const StreamEvent& ev) {
            const std::string frame = remote::format_sse(ev.event, ev.data.dump());
            sink.write(frame.data(), frame.size());
          };
          try {
            service_.post_message(turn, emit);
          } catch (const Error& e) {
            emit({"error", {{"kind", to_string(e.kind())}, {"message", e.what()}}});
          } catch (const std::exception& e) {
            emit({"error", {{"kind", "io"}, {"message", e.what()}}});
          }
          sink.done();
          return true;
        });
      });
    });
  }

  Service& service_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace diegesis
