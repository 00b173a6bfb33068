#include "crowdqc/dialog.hpp"

#include <httplib.h>
#include <json.hpp>

#include "crowdqc/error.hpp"

namespace crowdqc {

std::string ask_agent(const std::string& endpoint, const std::string& session_id, const std::string& utterance,
                      std::chrono::milliseconds timeout) {
  if (endpoint == kEchoAgentEndpoint) return utterance;

  auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::agent_unreachable, "agent endpoint is not a URL: " + endpoint);
  }
  auto path_start = endpoint.find('/', scheme_end + 3);
  std::string origin = endpoint.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : endpoint.substr(path_start);

  httplib::Client client(origin);
  if (!client.is_valid()) throw Error(ErrorCode::agent_unreachable, "unsupported agent endpoint " + endpoint);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  nlohmann::json body = {{"session_id", session_id}, {"utterance", utterance}};
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::agent_unreachable, "agent " + endpoint + " unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::agent_unreachable, "agent " + endpoint + " answered HTTP " + std::to_string(res->status));
  }
  try {
    auto reply = nlohmann::json::parse(res->body);
    if (!reply.is_object() || !reply.contains("reply") || !reply["reply"].is_string()) {
      throw Error(ErrorCode::agent_unreachable, "agent reply lacks a string 'reply' field");
    }
    return reply["reply"].get<std::string>();
  } catch (const nlohmann::json::parse_error&) {
    throw Error(ErrorCode::agent_unreachable, "agent reply is not JSON");
  }
}

}  // namespace crowdqc
