#include "toxictrap/remote.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "toxictrap/error.hpp"

namespace toxictrap {
namespace {

bool retryable(int status) { return status == 429 || status >= 500; }

std::string error_message(const std::string& body) {
  try {
    const auto j = nlohmann::json::parse(body);
    if (j.is_object() && j.contains("error") && j["error"].is_string()) return j["error"].get<std::string>();
  } catch (const nlohmann::json::exception&) {
  }
  return body;
}

void expect(bool ok, const std::string& what, const nlohmann::json& response) {
  if (!ok) throw TransportError("malformed response: " + what, response.dump());
}

}  // namespace

std::string RemoteConfig::token_from_env() {
  const char* v = std::getenv(kApiTokenEnv);
  return v ? std::string(v) : std::string();
}

RemoteClient::RemoteClient(RemoteConfig config) : config_(std::move(config)) {
  const auto& url = config_.base_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos || url.substr(0, scheme_end) != "http") {
    throw ConfigError("remote URL must start with http://: '" + url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  host_ = url.substr(0, path_start);
  if (host_.size() <= scheme_end + 3) throw ConfigError("remote URL has no host: '" + url + "'");
  prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  if (config_.max_batch == 0) throw ConfigError("remote max_batch must be >= 1");
  if (config_.attempts < 1) throw ConfigError("remote attempts must be >= 1");
}

nlohmann::json RemoteClient::get(const std::string& path) const { return request("GET", path, nullptr); }

nlohmann::json RemoteClient::post(const std::string& path, const nlohmann::json& body) const {
  return request("POST", path, &body);
}

nlohmann::json RemoteClient::request(const std::string& method, const std::string& path,
                                     const nlohmann::json* body) const {
  const std::string full_path = prefix_ + path;
  httplib::Headers headers;
  if (!config_.bearer_token.empty()) headers.emplace("Authorization", "Bearer " + config_.bearer_token);
  const std::string payload = body ? body->dump() : std::string();

  std::string last_error;
  std::string last_body;
  auto delay = config_.backoff;
  for (int attempt = 0; attempt < config_.attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    httplib::Client cli(host_);
    cli.set_connection_timeout(config_.timeout);
    cli.set_read_timeout(config_.timeout);
    cli.set_write_timeout(config_.timeout);
    auto res = method == "GET" ? cli.Get(full_path, headers)
                               : cli.Post(full_path, headers, payload, "application/json");
    if (!res) {
      last_error = method + " " + full_path + ": " + httplib::to_string(res.error());
      last_body.clear();
      continue;
    }
    if (res->status == 200) {
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception& e) {
        throw TransportError(method + " " + full_path + ": invalid JSON: " + e.what(), res->body);
      }
    }
    last_error = method + " " + full_path + ": HTTP " + std::to_string(res->status) + ": " +
                 error_message(res->body);
    last_body = res->body;
    if (!retryable(res->status)) throw TransportError(last_error, last_body);
  }
  throw TransportError(last_error + " (after " + std::to_string(config_.attempts) + " attempts)", last_body);
}

// ------------------------------------------------------------------ victim

RemoteVictim::RemoteVictim(RemoteConfig config) : client_(std::move(config)) {
  const auto health = client_.get("/healthz");
  expect(health.is_object() && health.contains("task") && health["task"].is_string() &&
             health.contains("labels") && health["labels"].is_array(),
         "/healthz needs task and labels", health);
  try {
    task_.kind = parse_task_kind(health["task"].get<std::string>());
    task_.labels = health["labels"].get<std::vector<std::string>>();
    task_.validate();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("malformed /healthz: ") + e.what(), health.dump());
  } catch (const Error& e) {
    throw TransportError(std::string("malformed /healthz: ") + e.what(), health.dump());
  }
}

VictimOutput RemoteVictim::predict(std::span<const std::string> texts) const {
  VictimOutput out;
  out.probs.reserve(texts.size());
  const std::size_t cap = client_.config().max_batch;
  for (std::size_t start = 0; start < texts.size(); start += cap) {
    const auto batch = texts.subspan(start, std::min(cap, texts.size() - start));
    nlohmann::json body;
    body["texts"] = std::vector<std::string>(batch.begin(), batch.end());
    const auto res = client_.post("/v1/predict", body);
    expect(res.is_object() && res.contains("probs") && res["probs"].is_array(), "missing probs", res);
    expect(res["probs"].size() == batch.size(), "probs row count differs from texts", res);
    if (res.contains("labels")) {
      expect(res["labels"] == nlohmann::json(task_.labels), "labels differ from /healthz", res);
    }
    for (const auto& row : res["probs"]) {
      expect(row.is_array() && row.size() == task_.num_labels(), "probability row arity", res);
      ProbRow p;
      for (const auto& v : row) {
        expect(v.is_number(), "non-numeric probability", res);
        p.push_back(v.get<double>());
      }
      expect(valid_output_row(task_, p), "probability row invalid for task", res);
      out.probs.push_back(std::move(p));
    }
  }
  return out;
}

// ------------------------------------------------------------- MLM, encode

std::vector<std::string> RemoteMaskedLm::fill_mask(const std::string& masked_text, std::size_t mask_index,
                                                   std::size_t top_k) const {
  nlohmann::json body{{"text", masked_text}, {"mask_index", mask_index}, {"top_k", top_k}};
  const auto res = client_.post("/v1/mlm", body);
  expect(res.is_object() && res.contains("candidates") && res["candidates"].is_array(), "missing candidates",
         res);
  std::vector<std::string> out;
  for (const auto& c : res["candidates"]) {
    expect(c.is_string(), "non-string candidate", res);
    out.push_back(c.get<std::string>());
  }
  return out;
}

std::vector<std::optional<SentenceVector>> RemoteSentenceEncoder::encode(std::span<const std::string> texts) const {
  std::vector<std::optional<SentenceVector>> out;
  out.reserve(texts.size());
  const std::size_t cap = client_.config().max_batch;
  std::optional<std::size_t> dim;
  for (std::size_t start = 0; start < texts.size(); start += cap) {
    const auto batch = texts.subspan(start, std::min(cap, texts.size() - start));
    nlohmann::json body;
    body["texts"] = std::vector<std::string>(batch.begin(), batch.end());
    const auto res = client_.post("/v1/encode", body);
    expect(res.is_object() && res.contains("vectors") && res["vectors"].is_array(), "missing vectors", res);
    expect(res["vectors"].size() == batch.size(), "vector count differs from texts", res);
    for (const auto& row : res["vectors"]) {
      expect(row.is_array() && !row.empty(), "empty vector", res);
      if (!dim) dim = row.size();
      expect(row.size() == *dim, "inconsistent vector dimension", res);
      SentenceVector v;
      for (const auto& x : row) {
        expect(x.is_number() && std::isfinite(x.get<double>()), "non-finite vector entry", res);
        v.push_back(x.get<double>());
      }
      out.emplace_back(std::move(v));
    }
  }
  return out;
}

}  // namespace toxictrap
