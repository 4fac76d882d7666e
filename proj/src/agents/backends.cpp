#include <cstdlib>
#include <fstream>
#include <semaphore>

#include "httplib.h"

#include "alphalogics/agents.hpp"
#include "alphalogics/error.hpp"

namespace alphalogics::agents {

// ---- scripted ----

ScriptedBackend::ScriptedBackend(const Json& fixture_doc) { load(fixture_doc); }

Json ScriptedBackend::read_fixture_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open fixture file " + path.string());
    Json doc = Json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw SchemaError("fixture file " + path.string() + " is not valid JSON");
    return doc;
}

ScriptedBackend ScriptedBackend::from_file(const std::filesystem::path& path) {
    return ScriptedBackend(read_fixture_file(path));
}

void ScriptedBackend::add(Fixture f) {
    if (f.responses.empty()) throw SchemaError("fixture for " + f.agent + " has no responses");
    std::lock_guard lock(mu_);
    fixtures_.push_back(std::move(f));
}

void ScriptedBackend::load(const Json& doc) {
    if (!doc.is_object() || !doc.contains("fixtures") || !doc["fixtures"].is_array())
        throw SchemaError("fixture document needs a \"fixtures\" array");
    for (const Json& e : doc["fixtures"]) {
        try {
            Fixture f;
            f.agent = e.at("agent").get<std::string>();
            find_template(f.agent);
            if (e.contains("fingerprint")) f.fingerprint = e["fingerprint"].get<std::string>();
            if (e.contains("match"))
                for (const auto& [ptr, value] : e["match"].items()) f.match.emplace_back(Json::json_pointer(ptr), value);
            f.is_default = e.value("default", false);
            f.sequence = e.value("sequence", false);
            if (!f.fingerprint && f.match.empty() && !f.is_default)
                throw SchemaError("fixture for " + f.agent + " has no selector");
            for (const Json& r : e.at("responses")) f.responses.push_back(r.is_string() ? r.get<std::string>() : r.dump());
            add(std::move(f));
        } catch (const Json::exception& ex) {
            throw SchemaError(std::string("malformed fixture entry: ") + ex.what());
        } catch (const PreconditionError& ex) {
            throw SchemaError(std::string("fixture names ") + ex.what());
        }
    }
}

std::string ScriptedBackend::complete(const CompletionRequest& request) {
    const std::string fp = fingerprint(request.payload);
    std::lock_guard lock(mu_);
    Fixture* hit = nullptr;
    for (Fixture& f : fixtures_)
        if (f.agent == request.agent && f.fingerprint == fp) {
            hit = &f;
            break;
        }
    if (!hit) {
        std::size_t best = 0;
        for (Fixture& f : fixtures_) {
            if (f.agent != request.agent || f.match.empty() || f.match.size() <= best) continue;
            bool all = true;
            for (const auto& [ptr, value] : f.match)
                all = all && request.payload.contains(ptr) && request.payload.at(ptr) == value;
            if (all) {
                hit = &f;
                best = f.match.size();
            }
        }
    }
    if (!hit)
        for (Fixture& f : fixtures_)
            if (f.agent == request.agent && f.is_default) {
                hit = &f;
                break;
            }
    if (!hit) throw AgentError(request.agent, "no scripted fixture for payload " + fp);
    const std::size_t index = hit->sequence ? hit->hits : static_cast<std::size_t>(std::max(request.attempt, 0));
    ++hit->hits;
    const std::size_t k = std::min(index, hit->responses.size() - 1);
    const std::string& out = hit->responses[k];
    log_.push_back({request.agent, request.payload, request.attempt, out});
    return out;
}

std::vector<ScriptedBackend::LogEntry> ScriptedBackend::log() const {
    std::lock_guard lock(mu_);
    return log_;
}

std::size_t ScriptedBackend::calls(std::string_view agent) const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (const LogEntry& e : log_) n += e.agent == agent;
    return n;
}

// ---- http ----

struct HttpBackend::Impl {
    explicit Impl(HttpConfig c) : config(std::move(c)), slots(std::max(1, config.max_concurrency)) {}
    HttpConfig config;
    std::counting_semaphore<1024> slots;
};

HttpBackend::HttpBackend(HttpConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {
    if (impl_->config.max_concurrency < 1 || impl_->config.max_concurrency > 1024)
        throw PreconditionError("max_concurrency must be in [1, 1024]");
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::complete(const CompletionRequest& request) {
    const HttpConfig& c = impl_->config;
    std::string base = c.base_url, path = "/v1/chat/completions";
    // a base URL that already ends in /v1 keeps its prefix
    if (base.size() >= 3 && base.compare(base.size() - 3, 3, "/v1") == 0) {
        base.resize(base.size() - 3);
    }
    const std::size_t scheme = base.find("://");
    const std::size_t slash = base.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (slash != std::string::npos) {
        path = base.substr(slash) + path;
        base.resize(slash);
    }

    Json body = {{"model", c.model},
                       {"temperature", c.temperature},
                       {"messages", Json::array({{{"role", "system"}, {"content", request.system}},
                                                 {{"role", "user"}, {"content", request.user}}})}};
    if (c.seed) body["seed"] = *c.seed;
    httplib::Headers headers;
    if (const char* key = std::getenv(c.api_key_env.c_str()); key && *key)
        headers.emplace("Authorization", std::string("Bearer ") + key);

    impl_->slots.acquire();
    httplib::Result res;
    try {
        httplib::Client client(base);
        const auto secs = static_cast<time_t>(c.timeout_seconds);
        client.set_connection_timeout(secs, 0);
        client.set_read_timeout(secs, 0);
        client.set_write_timeout(secs, 0);
        res = client.Post(path, headers, body.dump(), "application/json");
    } catch (...) {
        impl_->slots.release();
        throw;
    }
    impl_->slots.release();

    if (!res) throw AgentError(request.agent, "HTTP transport failure: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw AgentError(request.agent, "HTTP status " + std::to_string(res->status) + ": " + res->body.substr(0, 300));
    const Json reply = Json::parse(res->body, nullptr, false);
    if (reply.is_discarded()) throw AgentError(request.agent, "endpoint returned non-JSON body");
    try {
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const Json::exception&) {
        throw AgentError(request.agent, "endpoint reply has no choices[0].message.content");
    }
}

} // namespace alphalogics::agents
