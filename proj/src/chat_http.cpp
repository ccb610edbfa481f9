#include "pabst/chat_http.hpp"

namespace pabst {

namespace {

constexpr const char* kJson = "application/json; charset=utf-8";

void send(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, int status, const std::string& code,
                const std::string& detail) {
  if (status == 409) res.set_header("Retry-After", "1");
  send(res, status, Json{{"error", code}, {"detail", detail}});
}

Json parse_body(const httplib::Request& req) {
  if (req.body.find_first_not_of(" \t\r\n") == std::string::npos) return Json::object();
  try {
    return Json::parse(req.body);
  } catch (const Json::exception& e) {
    throw ServiceError(400, "invalid_json", e.what());
  }
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      send(res, 200, fn(req));
    } catch (const ServiceError& e) {
      send_error(res, e.status(), e.code(), e.what());
    } catch (const ValidationError& e) {
      send_error(res, 400, "invalid_request", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

}  // namespace

void install_routes(httplib::Server& server, ChatService& service, const std::string& static_dir) {
  server.set_payload_max_length(1 << 20);
  server.Post("/sessions", guarded([&service](const httplib::Request& req) {
                return service.create_session(parse_body(req));
              }));
  server.Post(R"(/sessions/([^/]+)/messages)", guarded([&service](const httplib::Request& req) {
                return service.post_message(req.matches[1], parse_body(req));
              }));
  server.Get(R"(/sessions/([^/]+))", guarded([&service](const httplib::Request& req) {
               return service.get_session(req.matches[1]);
             }));
  server.Get("/healthz", guarded([&service](const httplib::Request&) { return service.health(); }));
  if (!static_dir.empty() && !server.set_mount_point("/", static_dir)) {
    throw ValidationError("static directory not found: " + static_dir);
  }
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      send_error(res, res.status, res.status == 404 ? "not_found" : "http_error",
                 httplib::status_message(res.status));
    }
  });
}

}  // namespace pabst
