#pragma once

#include <memory>
#include <string>

#include "sentipipe/model.hpp"

namespace httplib {
class Server;
}

namespace sentipipe {

// HTTP inference endpoint over one immutable loaded model.
//   GET  /health     -> 200 "ok"
//   POST /sentiment  {"text": ...} -> {"label": ..., "probabilities": {...}}
// Missing or non-string `text` answers 400; bodies above max_body answer 413.
std::unique_ptr<httplib::Server> make_sentiment_server(const Model& model,
                                                       size_t max_body = 64 * 1024);

// Blocking variant for the CLI; returns when the server stops.
int run_sentiment_server(const Model& model, const std::string& host, int port);

}  // namespace sentipipe
