#pragma once

#include <chrono>
#include <cstddef>
#include <string>

#include <json.hpp>

#include "toxictrap/encoder.hpp"
#include "toxictrap/victim.hpp"

namespace toxictrap {

inline constexpr const char* kApiTokenEnv = "TOXICTRAP_API_TOKEN";

struct RemoteConfig {
  std::string base_url;  // http://host:port[/prefix]
  std::string bearer_token;
  std::size_t max_batch = 32;
  int attempts = 3;
  std::chrono::milliseconds backoff{100};  // doubled after each failed attempt
  std::chrono::seconds timeout{30};

  // Token from TOXICTRAP_API_TOKEN, empty when unset.
  static std::string token_from_env();
};

// JSON-over-HTTP transport shared by the remote victim, MLM and encoder.
// Connection failures, 429 and 5xx are retried; any other non-200 answer
// fails immediately. Exhausted retries raise TransportError.
class RemoteClient {
 public:
  explicit RemoteClient(RemoteConfig config);

  const RemoteConfig& config() const noexcept { return config_; }
  nlohmann::json get(const std::string& path) const;
  nlohmann::json post(const std::string& path, const nlohmann::json& body) const;

 private:
  nlohmann::json request(const std::string& method, const std::string& path,
                         const nlohmann::json* body) const;

  RemoteConfig config_;
  std::string host_;    // scheme://host:port
  std::string prefix_;  // path prefix without trailing slash
};

// Victim served over /v1/predict. The task and label order come from
// /healthz at construction. No gradients.
class RemoteVictim final : public VictimModel {
 public:
  explicit RemoteVictim(RemoteConfig config);

  const TaskSpec& task() const override { return task_; }
  VictimOutput predict(std::span<const std::string> texts) const override;

 private:
  RemoteClient client_;
  TaskSpec task_;
};

class RemoteMaskedLm final : public MaskedLanguageModel {
 public:
  explicit RemoteMaskedLm(RemoteConfig config) : client_(std::move(config)) {}
  std::vector<std::string> fill_mask(const std::string& masked_text, std::size_t mask_index,
                                     std::size_t top_k) const override;

 private:
  RemoteClient client_;
};

class RemoteSentenceEncoder final : public SentenceEncoder {
 public:
  explicit RemoteSentenceEncoder(RemoteConfig config) : client_(std::move(config)) {}
  std::vector<std::optional<SentenceVector>> encode(std::span<const std::string> texts) const override;

 private:
  RemoteClient client_;
};

}  // namespace toxictrap
