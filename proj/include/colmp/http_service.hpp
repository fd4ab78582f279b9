#pragma once

// Eigen must come before httplib: <resolv.h> defines a `_res` macro that
// collides with Eigen parameter names.
#include "colmp/service.hpp"

#include <httplib.h>

#include <string>

namespace colmp {

inline constexpr int kDefaultPort = 8080;

/// Registers the JSON API on `server`. The registry must outlive the server;
/// handlers only read it, so concurrent requests need no locking.
inline void register_routes(httplib::Server& server, const Registry& reg) {
  auto handler = [&reg](const httplib::Request& req, httplib::Response& res) {
    const auto r = dispatch(req.method, req.path, req.body, reg);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  server.Get("/api/v1/health", handler);
  server.Get("/api/v1/models", handler);
  server.Post("/api/v1/predict", handler);
  server.Post("/api/v1/classify", handler);
  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    res.set_content(error_body(res.status == 404 ? "NotFound" : "HttpError",
                               req.method + " " + req.path + " failed with status " + std::to_string(res.status)),
                    "application/json");
  });
}

}  // namespace colmp
