#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace crowdqc {

/// Agent endpoint value served in-process: replies with the utterance itself.
inline constexpr std::string_view kEchoAgentEndpoint = "builtin:echo";

/// Sends one utterance to a dialog agent: POST {session_id, utterance} and
/// expects {reply}. Throws Error(agent_unreachable) on transport failure,
/// timeout, non-2xx status or a malformed reply.
std::string ask_agent(const std::string& endpoint, const std::string& session_id, const std::string& utterance,
                      std::chrono::milliseconds timeout = std::chrono::seconds(10));

}  // namespace crowdqc
