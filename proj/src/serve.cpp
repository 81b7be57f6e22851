#include "sentipipe/serve.hpp"

#include <httplib.h>
#include <json.hpp>

namespace sentipipe {

std::unique_ptr<httplib::Server> make_sentiment_server(const Model& model, size_t max_body) {
    auto server = std::make_unique<httplib::Server>();
    server->set_payload_max_length(max_body);

    server->Get("/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("ok", "text/plain");
    });

    server->Post("/sentiment", [&model](const httplib::Request& req, httplib::Response& res) {
        auto bad_request = [&res](const std::string& msg) {
            nlohmann::ordered_json err;
            err["error"] = msg;
            res.status = 400;
            res.set_content(err.dump(), "application/json");
        };
        nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
        if (body.is_discarded()) return bad_request("invalid JSON body");
        if (!body.contains("text") || !body["text"].is_string())
            return bad_request("missing field: text");

        const Prediction pred = predict(model, body["text"].get<std::string>());
        nlohmann::ordered_json out;
        out["label"] = to_string(pred.label);
        out["probabilities"] = {{"negative", pred.probs[0]},
                                {"neutral", pred.probs[1]},
                                {"positive", pred.probs[2]}};
        res.set_content(out.dump(), "application/json");
    });
    return server;
}

int run_sentiment_server(const Model& model, const std::string& host, int port) {
    auto server = make_sentiment_server(model);
    return server->listen(host, port) ? 0 : 1;
}

}  // namespace sentipipe
