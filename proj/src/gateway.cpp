#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "hsdef/gateway.hpp"

#include "hsdef/prompt.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <thread>

namespace hsdef {

namespace {

bool is_alnum(char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

struct TemplateMarkers {
    std::string before;  // text preceding [TEXT]
    std::string after;   // text following [TEXT]
};

const TemplateMarkers& markers() {
    static const TemplateMarkers m = [] {
        const auto& body = PromptTemplates::builtin().body(TemplateKind::WithoutDefinition);
        auto at = body.find(kTextPlaceholder);
        return TemplateMarkers{body.substr(0, at), body.substr(at + kTextPlaceholder.size())};
    }();
    return m;
}

bool is_transient_status(int status) { return status == 429 || status >= 500; }

} // namespace

void ModelConfig::validate() const {
    if (id.empty()) throw ConfigError("model id must not be empty");
    if (parallelism < 1) throw ConfigError("model " + id + ": parallelism must be >= 1");
    if (max_retries < 0) throw ConfigError("model " + id + ": max_retries must be >= 0");
    if (max_tokens < 1) throw ConfigError("model " + id + ": max_tokens must be >= 1");
    if (backend == BackendKind::Http) {
        if (base_url.empty()) throw ConfigError("model " + id + ": base_url is required for http backends");
        if (model.empty()) throw ConfigError("model " + id + ": model name is required for http backends");
    }
}

std::string_view to_string(Label l) {
    switch (l) {
    case Label::HS: return "HS";
    case Label::NHS: return "NHS";
    case Label::Refusal: return "Refusal";
    }
    return "?";
}

std::optional<Label> parse_label_name(std::string_view s) {
    if (s == "HS") return Label::HS;
    if (s == "NHS") return Label::NHS;
    if (s == "Refusal") return Label::Refusal;
    return std::nullopt;
}

Label parse_label(std::string_view text) {
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c != '0' && c != '1') continue;
        const bool left_ok = i == 0 || !is_alnum(text[i - 1]);
        const bool right_ok = i + 1 == text.size() || !is_alnum(text[i + 1]);
        if (left_ok && right_ok) return c == '1' ? Label::HS : Label::NHS;
    }
    return Label::Refusal;
}

std::string_view to_string(GatewayError::Kind k) {
    switch (k) {
    case GatewayError::Kind::BackendUnreachable: return "BackendUnreachable";
    case GatewayError::Kind::ExhaustedRetries: return "ExhaustedRetries";
    case GatewayError::Kind::AuthFailure: return "AuthFailure";
    case GatewayError::Kind::ProtocolError: return "ProtocolError";
    }
    return "?";
}

nlohmann::json build_request_body(const ModelConfig& config, std::string_view prompt) {
    nlohmann::json body;
    body["model"] = config.model;
    if (config.api == ApiStyle::Chat) {
        body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", std::string(prompt)}}});
    } else {
        body["prompt"] = std::string(prompt);
    }
    body["temperature"] = config.effective_temperature();
    body["max_tokens"] = config.max_tokens;
    if (config.constrained && config.guided_choice) body["guided_choice"] = {"0", "1"};
    return body;
}

RawResponse parse_response_body(const ModelConfig& config, std::string_view body) {
    RawResponse raw;
    try {
        auto doc = nlohmann::json::parse(body);
        const auto& choice = doc.at("choices").at(0);
        if (config.api == ApiStyle::Chat) {
            const auto& content = choice.at("message").at("content");
            raw.text = content.is_null() ? std::string() : content.get<std::string>();
        } else {
            raw.text = choice.at("text").get<std::string>();
        }
        if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
            raw.finish_reason = choice["finish_reason"].get<std::string>();
        }
    } catch (const nlohmann::json::exception& ex) {
        throw GatewayError(GatewayError::Kind::ProtocolError, std::string("malformed completion body: ") + ex.what(),
                           1);
    }
    return raw;
}

std::string_view extract_sample_text(std::string_view prompt) {
    const auto& m = markers();
    auto start = prompt.find(m.before);
    auto end = prompt.rfind(m.after);
    if (start == std::string_view::npos || end == std::string_view::npos || end < start + m.before.size()) {
        return prompt;
    }
    start += m.before.size();
    return prompt.substr(start, end - start);
}

bool MockBackend::flipped(const RequestContext& context) const {
    const std::string scoped = context.sample_id + "@" + std::to_string(context.run);
    return std::any_of(settings_.flips.begin(), settings_.flips.end(),
                       [&](const std::string& f) { return f == context.sample_id || f == scoped; });
}

RawResponse MockBackend::complete(std::string_view prompt, const RequestContext& context) {
    const auto text = lower(extract_sample_text(prompt));
    bool hateful = std::any_of(settings_.keywords.begin(), settings_.keywords.end(), [&](const std::string& k) {
        return !k.empty() && text.find(lower(k)) != std::string::npos;
    });
    if (flipped(context)) hateful = !hateful;
    RawResponse raw;
    raw.text = hateful ? "1" : "0";
    raw.status = 200;
    raw.finish_reason = "stop";
    return raw;
}

HttpBackend::HttpBackend(ModelConfig config) : config_(std::move(config)) {
    const std::string& url = config_.base_url;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("base_url needs a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    scheme_host_port_ = url.substr(0, path_start);
    if (path_start != std::string::npos) path_prefix_ = url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();

    if (!config_.api_key_env.empty()) {
        const char* token = std::getenv(config_.api_key_env.c_str());
        if (token == nullptr) {
            throw ConfigError("model " + config_.id + ": environment variable " + config_.api_key_env + " is not set");
        }
        token_ = token;
    }
}

RawResponse HttpBackend::complete(std::string_view prompt, const RequestContext&) {
    const std::string path =
        path_prefix_ + (config_.api == ApiStyle::Chat ? "/v1/chat/completions" : "/v1/completions");
    const std::string body = build_request_body(config_, prompt).dump();
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

    const auto timeout = config_.timeout;
    const int max_attempts = config_.max_retries + 1;
    bool ever_connected = false;
    std::string last_problem;

    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(config_.retry_base_delay * (1 << std::min(attempt - 2, 16)));
        }
        httplib::Client client(scheme_host_port_);
        client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
        client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
        client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

        const auto started = std::chrono::steady_clock::now();
        auto result = client.Post(path, headers, body, "application/json");
        const auto latency =
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);

        if (!result) {
            last_problem = httplib::to_string(result.error());
            if (result.error() != httplib::Error::Connection) ever_connected = true;
            continue;
        }
        ever_connected = true;
        const int status = result->status;
        if (status == 401 || status == 403) {
            throw GatewayError(GatewayError::Kind::AuthFailure,
                               "AuthFailure: " + config_.id + " returned HTTP " + std::to_string(status), attempt);
        }
        if (is_transient_status(status)) {
            last_problem = "HTTP " + std::to_string(status);
            continue;
        }
        if (status < 200 || status >= 300) {
            throw GatewayError(GatewayError::Kind::ProtocolError,
                               "ProtocolError: " + config_.id + " returned HTTP " + std::to_string(status), attempt);
        }
        RawResponse raw;
        try {
            raw = parse_response_body(config_, result->body);
        } catch (const GatewayError& ex) {
            throw GatewayError(ex.kind(), ex.what(), attempt);
        }
        raw.status = status;
        raw.attempts = attempt;
        raw.latency = latency;
        return raw;
    }
    if (!ever_connected) {
        throw GatewayError(GatewayError::Kind::BackendUnreachable,
                           "BackendUnreachable: " + config_.base_url + " (" + last_problem + ") after " +
                               std::to_string(max_attempts) + " attempts",
                           max_attempts);
    }
    throw GatewayError(GatewayError::Kind::ExhaustedRetries,
                       "ExhaustedRetries: " + config_.id + " (" + last_problem + ") after " +
                           std::to_string(max_attempts) + " attempts",
                       max_attempts);
}

Gateway::Gateway(ModelConfig config) : config_(std::move(config)) {
    config_.validate();
    if (config_.backend == BackendKind::Mock) {
        backend_ = std::make_unique<MockBackend>(config_.mock);
    } else {
        backend_ = std::make_unique<HttpBackend>(config_);
    }
}

Gateway::Gateway(ModelConfig config, std::unique_ptr<Backend> backend)
    : config_(std::move(config)), backend_(std::move(backend)) {
    config_.validate();
}

RawResponse Gateway::classify(std::string_view prompt, const RequestContext& context) {
    calls_.fetch_add(1);
    return backend_->complete(prompt, context);
}

} // namespace hsdef
