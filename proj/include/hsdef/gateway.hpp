#pragma once

#include "hsdef/errors.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hsdef {

enum class BackendKind { Http, Mock };

// Wire format of an HTTP endpoint: chat-completions with one user message,
// or plain completions for models served without a chat template.
enum class ApiStyle { Chat, Completions };

struct MockSettings {
    std::vector<std::string> keywords;
    // "id" flips the label of that sample in every run, "id@r" only in run r.
    std::vector<std::string> flips;
};

inline constexpr double kDefaultTemperature = 0.95;
inline constexpr double kConstrainedTemperature = 0.7;
inline constexpr int kDefaultMaxTokens = 8;

struct ModelConfig {
    std::string id;
    BackendKind backend = BackendKind::Mock;
    std::string base_url;
    std::string model;
    std::optional<double> temperature;
    int max_tokens = kDefaultMaxTokens;
    bool constrained = false;
    // The endpoint accepts a "guided_choice" field restricting output.
    bool guided_choice = false;
    ApiStyle api = ApiStyle::Chat;
    std::chrono::milliseconds timeout{60'000};
    int max_retries = 3;
    std::chrono::milliseconds retry_base_delay{500};
    int parallelism = 1;
    std::string api_key_env;
    MockSettings mock;

    double effective_temperature() const {
        return temperature.value_or(constrained ? kConstrainedTemperature : kDefaultTemperature);
    }
    /// Throws ConfigError on an unusable configuration.
    void validate() const;
};

struct RawResponse {
    std::string text;
    std::chrono::milliseconds latency{0};
    int attempts = 1;
    int status = 0;
    std::string finish_reason;
};

enum class Label { HS, NHS, Refusal };

std::string_view to_string(Label l);
std::optional<Label> parse_label_name(std::string_view s);

/// First standalone '1' or '0' decides; neither present means Refusal.
Label parse_label(std::string_view text);
inline Label parse_label(const RawResponse& raw) { return parse_label(raw.text); }

class GatewayError : public Error {
public:
    enum class Kind { BackendUnreachable, ExhaustedRetries, AuthFailure, ProtocolError };

    GatewayError(Kind kind, const std::string& message, int attempts)
        : Error(message), kind_(kind), attempts_(attempts) {}
    bool is_config_error() const noexcept override { return false; }
    Kind kind() const { return kind_; }
    int attempts() const { return attempts_; }

private:
    Kind kind_;
    int attempts_;
};

std::string_view to_string(GatewayError::Kind k);

// Identifies the request for the mock backend's flip list.
struct RequestContext {
    std::string sample_id;
    int run = 0;
};

/// Request body for the configured endpoint.
nlohmann::json build_request_body(const ModelConfig& config, std::string_view prompt);

/// Completion text and finish reason from an endpoint response body.
RawResponse parse_response_body(const ModelConfig& config, std::string_view body);

/// Portion of a rendered prompt between the instruction and the answer
/// request, i.e. the sample text. The whole prompt if markers are missing.
std::string_view extract_sample_text(std::string_view prompt);

class Backend {
public:
    virtual ~Backend() = default;
    virtual RawResponse complete(std::string_view prompt, const RequestContext& context) = 0;
};

class MockBackend final : public Backend {
public:
    explicit MockBackend(MockSettings settings) : settings_(std::move(settings)) {}
    RawResponse complete(std::string_view prompt, const RequestContext& context) override;

private:
    bool flipped(const RequestContext& context) const;
    MockSettings settings_;
};

class HttpBackend final : public Backend {
public:
    explicit HttpBackend(ModelConfig config);
    RawResponse complete(std::string_view prompt, const RequestContext& context) override;

private:
    ModelConfig config_;
    std::string scheme_host_port_;
    std::string path_prefix_;
    std::string token_;
};

// Uniform classification client. Thread-safe: backends hold no mutable state
// besides the call counter.
class Gateway {
public:
    explicit Gateway(ModelConfig config);
    Gateway(ModelConfig config, std::unique_ptr<Backend> backend);

    RawResponse classify(std::string_view prompt, const RequestContext& context = {});

    const ModelConfig& config() const { return config_; }
    std::uint64_t backend_calls() const { return calls_.load(); }

private:
    ModelConfig config_;
    std::unique_ptr<Backend> backend_;
    std::atomic<std::uint64_t> calls_{0};
};

} // namespace hsdef
