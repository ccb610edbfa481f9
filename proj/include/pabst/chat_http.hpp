#ifndef PABST_CHAT_HTTP_HPP_
#define PABST_CHAT_HTTP_HPP_

#include <string>

// Eigen headers must come before httplib.h.
#include "pabst/chat_service.hpp"
#include "httplib.h"

namespace pabst {

// POST /sessions, POST /sessions/{id}/messages, GET /sessions/{id},
// GET /healthz, and static files under GET / when static_dir is set.
void install_routes(httplib::Server& server, ChatService& service,
                    const std::string& static_dir = "");

}  // namespace pabst

#endif  // PABST_CHAT_HTTP_HPP_
