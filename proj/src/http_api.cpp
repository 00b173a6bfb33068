#include "crowdqc/http_api.hpp"

#include <httplib.h>
#include <json.hpp>

#include "crowdqc/config_json.hpp"
#include "crowdqc/markdown.hpp"
#include "crowdqc/report_io.hpp"
#include "json_reader.hpp"

namespace crowdqc {

namespace {

using detail::json;
using nlohmann::ordered_json;

constexpr const char* kJson = "application/json";

void send_json(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump() + "\n", kJson);
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message,
                const std::vector<std::string>& details = {}) {
  ordered_json err = ordered_json::object();
  err["code"] = std::string(to_string(code));
  err["message"] = message;
  err["details"] = details;
  send_json(res, http_status_for(code), ordered_json{{"error", std::move(err)}});
}

json body_json(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  auto j = detail::parse_json_text(req.body, ErrorCode::malformed_payload);
  if (!j.is_object()) throw Error(ErrorCode::malformed_payload, "request body must be a JSON object");
  return j;
}

std::string param(const httplib::Request& req, const json& body, std::initializer_list<const char*> names) {
  for (const char* n : names) {
    if (req.has_param(n)) return req.get_param_value(n);
  }
  for (const char* n : names) {
    auto it = body.find(n);
    if (it != body.end() && it->is_string()) return it->get<std::string>();
  }
  return {};
}

bool is_csv(const httplib::Request& req) {
  if (req.has_param("format")) return req.get_param_value("format") == "csv";
  auto type = req.get_header_value("Content-Type");
  return type.find("csv") != std::string::npos;
}

/// Wraps a handler so every Error and stray exception becomes a coded body.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f = std::move(f)](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what(), e.details());
    } catch (const json::exception& e) {
      send_error(res, ErrorCode::malformed_payload, e.what());
    } catch (const std::exception& e) {
      send_error(res, ErrorCode::storage, e.what());
    }
  };
}

void install_routes(httplib::Server& srv, Service& svc) {
  const std::string project = R"(/api/v1/projects/([^/]+))";

  srv.Get("/api/v1/health", guarded([](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, {{"status", "ok"}});
          }));

  srv.Get("/api/v1/plan/payment", guarded([](const httplib::Request& req, httplib::Response& res) {
            PaymentInputs in;
            try {
              if (req.has_param("minutes")) in.estimated_minutes_per_unit = std::stod(req.get_param_value("minutes"));
              if (req.has_param("rate")) in.hourly_rate_cents = std::stoll(req.get_param_value("rate"));
            } catch (const std::exception&) {
              throw Error(ErrorCode::malformed_payload, "minutes and rate must be numbers");
            }
            if (!(in.estimated_minutes_per_unit > 0) || in.hourly_rate_cents <= 0) {
              throw Error(ErrorCode::precondition, "minutes and rate must be positive");
            }
            ordered_json j = ordered_json::object();
            j["estimated_minutes_per_unit"] = in.estimated_minutes_per_unit;
            j["hourly_rate_cents"] = in.hourly_rate_cents;
            j["suggested_payment_cents_per_unit"] = suggest_payment(in);
            send_json(res, 200, j);
          }));

  srv.Post("/api/v1/config/lint", guarded([](const httplib::Request& req, httplib::Response& res) {
             ordered_json j = ordered_json::object();
             try {
               auto config = parse_config(req.body);
               j["valid"] = true;
               j["violations"] = ordered_json::array();
               j["findings"] = lint_to_json(lint_clarity(config));
             } catch (const Error& e) {
               if (e.code() != ErrorCode::invariant_violation) throw;
               j["valid"] = false;
               j["violations"] = e.details();
               j["findings"] = ordered_json::array();
             }
             send_json(res, 200, j);
           }));

  srv.Post("/api/v1/markdown/render", guarded([](const httplib::Request& req, httplib::Response& res) {
             auto body = body_json(req);
             auto it = body.find("text");
             if (it == body.end() || !it->is_string()) throw Error(ErrorCode::malformed_payload, "text is required");
             auto tree = markdown::render(it->get<std::string>());
             ordered_json j = ordered_json::object();
             j["tree"] = markdown::to_json(tree);
             j["html"] = markdown::to_html(tree);
             send_json(res, 200, j);
           }));

  srv.Get("/api/v1/projects", guarded([&svc](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, {{"projects", svc.project_ids()}});
          }));

  srv.Post("/api/v1/projects", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             TaskConfig config;
             try {
               config = parse_config(req.body);
             } catch (const Error& e) {
               if (e.code() == ErrorCode::invariant_violation) {
                 throw Error(ErrorCode::invalid_config, e.what(), e.details());
               }
               throw;
             }
             auto created = svc.create_project(config);
             ordered_json j = ordered_json::object();
             j["project_id"] = created.project_id;
             j["state"] = "draft";
             j["findings"] = lint_to_json(created.lint);
             send_json(res, 201, j);
           }));

  srv.Get(project, guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, status_to_json(svc.status(req.matches[1])));
          }));

  for (bool golden : {false, true}) {
    srv.Post(project + (golden ? "/golden" : "/items"),
             guarded([&svc, golden](const httplib::Request& req, httplib::Response& res) {
               auto r = svc.upload_items(req.matches[1], req.body, is_csv(req) ? UploadFormat::csv : UploadFormat::json,
                                         golden);
               ordered_json rejected = ordered_json::array();
               for (const auto& rr : r.rejected) rejected.push_back({{"row", rr.row}, {"reason", rr.reason}});
               ordered_json j = ordered_json::object();
               j["accepted"] = r.accepted;
               j["rejected_count"] = rejected.size();
               j["rejected"] = std::move(rejected);
               send_json(res, 200, j);
             }));
  }

  srv.Post(project + "/launch", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             auto body = body_json(req);
             auto mode = param(req, body, {"mode"});
             LaunchMode m;
             if (mode.empty() || mode == "full") {
               m = LaunchMode::full;
             } else if (mode == "pilot") {
               m = LaunchMode::pilot;
             } else {
               throw Error(ErrorCode::malformed_payload, "mode must be 'pilot' or 'full'");
             }
             send_json(res, 200, launch_result_to_json(svc.launch(req.matches[1], m)));
           }));

  srv.Post(project + "/close", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             svc.close(req.matches[1]);
             send_json(res, 200, {{"state", "closed"}});
           }));

  srv.Post(project + "/claim", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             auto body = body_json(req);
             std::string id = req.matches[1];
             auto worker = param(req, body, {"worker_id", "workerId"});
             auto view = svc.claim_next_unit(id, worker);
             send_json(res, 200, worker_view_to_json(view, svc.config_of(id)));
           }));

  srv.Post(project + "/submit", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             auto body = body_json(req);
             SubmitRequest s;
             {
               detail::ObjectReader r(body, "", nullptr, ErrorCode::malformed_payload);
               s.unit_id = r.string("unit_id");
               s.answers = r.array("answers");
               if (const auto* per = r.array_or_null("per_slot_ms")) {
                 for (std::size_t i = 0; i < per->size(); ++i) {
                   s.per_slot_ms.push_back(r.as_integer((*per)[i], "/per_slot_ms/" + std::to_string(i)));
                 }
               }
               if (const auto* fb = r.find("feedback")) s.feedback = r.as_string(*fb, "/feedback");
               s.consent_acknowledged = r.boolean_or("consent_acknowledged", false);
             }
             s.worker_id = param(req, body, {"worker_id", "workerId"});
             if (s.worker_id.empty()) throw Error(ErrorCode::malformed_payload, "worker_id is required");
             auto r = svc.submit(req.matches[1], s);
             ordered_json j = ordered_json::object();
             j["submission_id"] = r.submission_id;
             j["total_ms"] = r.total_ms;
             j["total_seconds"] = static_cast<double>(r.total_ms) / 1000.0;
             send_json(res, 201, j);
           }));

  srv.Post(project + "/dialog", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             auto body = body_json(req);
             auto worker = param(req, body, {"worker_id", "workerId"});
             auto session = param(req, body, {"session_id"});
             auto it = body.find("utterance");
             if (it == body.end() || !it->is_string()) {
               throw Error(ErrorCode::malformed_payload, "utterance is required");
             }
             auto r = svc.dialog_relay(req.matches[1], worker, session, it->get<std::string>());
             ordered_json j = ordered_json::object();
             j["reply"] = r.reply;
             j["turn"] = {{"role", "agent"}, {"text", r.reply}};
             j["transcript_length"] = r.transcript_length;
             send_json(res, 200, j);
           }));

  srv.Get(project + "/report", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            auto report = svc.get_report(req.matches[1]);
            if (req.has_param("format") && req.get_param_value("format") == "markdown") {
              res.status = 200;
              res.set_content(report_to_markdown(report), "text/markdown; charset=utf-8");
              return;
            }
            res.status = 200;
            res.set_content(report_json_text(report), kJson);
          }));

  srv.Get(project + "/export", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            auto format = req.has_param("format") ? req.get_param_value("format") : std::string("json");
            if (format != "json" && format != "csv") {
              throw Error(ErrorCode::malformed_payload, "format must be 'json' or 'csv'");
            }
            auto e = svc.export_project(req.matches[1]);
            res.status = 200;
            if (format == "csv") {
              res.set_content(export_csv(e), "text/csv; charset=utf-8");
            } else {
              res.set_content(export_json(e), kJson);
            }
          }));

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    if (res.status == 404) {
      ordered_json err = {{"code", "not-found"}, {"message", "no such route"}, {"details", ordered_json::array()}};
      send_json(res, 404, ordered_json{{"error", err}});
    }
  });
}

}  // namespace

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::malformed_document:
    case ErrorCode::unknown_field:
    case ErrorCode::malformed_payload:
    case ErrorCode::malformed_export:
      return 400;
    case ErrorCode::unknown_project:
      return 404;
    case ErrorCode::wrong_state:
    case ErrorCode::wrong_template:
    case ErrorCode::no_claim:
    case ErrorCode::none_available:
    case ErrorCode::no_submissions:
      return 409;
    case ErrorCode::agent_unreachable:
      return 502;
    case ErrorCode::storage:
      return 500;
    default:
      return 422;
  }
}

struct HttpServer::Impl {
  httplib::Server server;
  int port = -1;
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>()) {
  // httplib's default adds SO_REUSEPORT, which would let a second instance
  // share the port instead of failing.
  impl_->server.set_socket_options([](int sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  install_routes(impl_->server, service);
}

HttpServer::~HttpServer() { stop(); }

bool HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port(host);
    return impl_->port > 0;
  }
  if (!impl_->server.bind_to_port(host, port)) return false;
  impl_->port = port;
  return true;
}

int HttpServer::port() const { return impl_->port; }

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace crowdqc
