#include "selfroute/llm.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "selfroute/errors.hpp"
#include "selfroute/text.hpp"

namespace selfroute {

void ProviderConfig::validate() const {
  if (trim(base_url).empty()) throw ConfigError("provider base_url is required");
  if (trim(model).empty()) throw ConfigError("provider model is required");
  if (trim(api_key_env).empty()) throw ConfigError("provider api_key_env is required");
  if (max_retries < 0 || max_retries > 10)
    throw ConfigError("max_retries must be in [0, 10]");
  if (request_timeout.count() <= 0) throw ConfigError("request_timeout must be positive");
  if (max_concurrent < 1) throw ConfigError("max_concurrent must be >= 1");
  if (retry_base_delay.count() < 0) throw ConfigError("retry_base_delay must be >= 0");
}

namespace {

// Just enough TOML for provider files: `key = value` lines where value is a
// quoted string or an integer, '#' comments, and bare [section] headers
// (accepted and ignored so files can group keys).
std::map<std::string, std::string> parse_toml_lines(std::istream& in,
                                                    const std::string& origin) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
      continue;
    }
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (!value.empty() && value.front() == '"') {
      const std::size_t close = value.find('"', 1);
      if (close == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated string");
      std::string rest = trim(value.substr(close + 1));
      if (!rest.empty() && rest[0] != '#')
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": trailing characters");
      value = value.substr(1, close - 1);
    } else {
      // strip a trailing comment from bare values
      const std::size_t hash = value.find('#');
      if (hash != std::string::npos) value = trim(value.substr(0, hash));
      if (value.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty value");
    }
    if (kv.count(key))
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key " + key);
    kv[key] = value;
  }
  return kv;
}

long long to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("provider config: " + key + " must be an integer, got '" + value + "'");
  }
}

}  // namespace

ProviderConfig ProviderConfig::from_toml_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open provider config: " + path.string());
  const std::map<std::string, std::string> kv = parse_toml_lines(in, path.string());

  ProviderConfig cfg;
  for (const auto& [key, value] : kv) {
    if (key == "base_url") cfg.base_url = value;
    else if (key == "model") cfg.model = value;
    else if (key == "api_key_env") cfg.api_key_env = value;
    else if (key == "max_retries") cfg.max_retries = static_cast<int>(to_int(key, value));
    else if (key == "request_timeout_ms")
      cfg.request_timeout = std::chrono::milliseconds(to_int(key, value));
    else if (key == "max_concurrent")
      cfg.max_concurrent = static_cast<std::size_t>(to_int(key, value));
    else if (key == "retry_base_ms")
      cfg.retry_base_delay = std::chrono::milliseconds(to_int(key, value));
    else if (key == "embed_model")
      cfg.embed_model = value;
    else if (key == "embed_base_url")
      cfg.embed_base_url = value;
    else
      throw ConfigError("provider config: unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

Completion generate(LlmProvider& provider, const std::string& prompt) {
  if (trim(prompt).empty()) throw Error("refusing to send an empty prompt");
  return provider.generate(prompt);
}

std::chrono::milliseconds backoff_delay(int attempt, std::chrono::milliseconds base,
                                        double jitter_unit) {
  if (attempt < 1) throw std::invalid_argument("attempt counts from 1");
  if (jitter_unit < 0.0 || jitter_unit >= 1.0)
    throw std::invalid_argument("jitter_unit must be in [0, 1)");
  const double scale = std::ldexp(1.0, attempt - 1);  // 2^(attempt-1)
  const double ms = static_cast<double>(base.count()) * scale +
                    static_cast<double>(base.count()) * jitter_unit;
  return std::chrono::milliseconds(static_cast<long long>(ms));
}

ScriptedMockLlm::ScriptedMockLlm(std::string default_response)
    : default_response_(std::move(default_response)) {}

void ScriptedMockLlm::add_exact(std::string prompt, std::string response) {
  std::lock_guard<std::mutex> lock(mu_);
  exact_[std::move(prompt)] = std::move(response);
}

void ScriptedMockLlm::add_substring(std::string pattern, std::string response) {
  std::lock_guard<std::mutex> lock(mu_);
  substrings_.emplace_back(std::move(pattern), std::move(response));
}

void ScriptedMockLlm::set_default_response(std::string response) {
  std::lock_guard<std::mutex> lock(mu_);
  default_response_ = std::move(response);
}

void ScriptedMockLlm::set_context_window(std::size_t max_prompt_words) {
  std::lock_guard<std::mutex> lock(mu_);
  max_prompt_words_ = max_prompt_words;
}

void ScriptedMockLlm::set_max_concurrent(std::size_t n) {
  std::lock_guard<std::mutex> lock(mu_);
  max_concurrent_ = n < 1 ? 1 : n;
}

Completion ScriptedMockLlm::generate(const std::string& prompt) {
  std::lock_guard<std::mutex> lock(mu_);
  calls_.push_back(prompt);

  if (max_prompt_words_ > 0 && count_words(prompt) > max_prompt_words_)
    throw ContextOverflowError("mock context window of " +
                               std::to_string(max_prompt_words_) + " words exceeded");

  const std::string* response = nullptr;
  if (auto it = exact_.find(prompt); it != exact_.end()) {
    response = &it->second;
  } else {
    std::size_t hits = 0;
    for (const auto& [pattern, resp] : substrings_) {
      if (prompt.find(pattern) != std::string::npos) {
        ++hits;
        response = &resp;
      }
    }
    if (hits == 0) response = &default_response_;
    if (hits >= 2) throw AmbiguousMatchError(hits);
  }

  Completion c;
  c.text = *response;
  c.input_tokens = count_tokens(prompt);
  c.output_tokens = count_tokens(*response);
  return c;
}

std::string ScriptedMockLlm::id() const {
  std::lock_guard<std::mutex> lock(mu_);
  // Hash the script so runs against different fixtures get different ids.
  std::string blob = "default\x1f" + default_response_ + "\x1e";
  for (const auto& [k, v] : exact_) blob += "exact\x1f" + k + "\x1f" + v + "\x1e";
  for (const auto& [k, v] : substrings_) blob += "sub\x1f" + k + "\x1f" + v + "\x1e";
  blob += "window\x1f" + std::to_string(max_prompt_words_);
  return "mock:" + fnv1a64_hex(blob);
}

std::size_t ScriptedMockLlm::max_concurrent() const {
  std::lock_guard<std::mutex> lock(mu_);
  return max_concurrent_;
}

std::vector<std::string> ScriptedMockLlm::call_log() const {
  std::lock_guard<std::mutex> lock(mu_);
  return calls_;
}

std::size_t ScriptedMockLlm::call_count() const {
  std::lock_guard<std::mutex> lock(mu_);
  return calls_.size();
}

std::unique_ptr<ScriptedMockLlm> ScriptedMockLlm::from_fixture_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mock fixture: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("mock fixture " + path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("mock fixture must be a JSON object");

  auto mock = std::make_unique<ScriptedMockLlm>();
  for (const auto& [key, value] : doc.items()) {
    if (key == "__max_prompt_words__") {
      if (!value.is_number_unsigned())
        throw ConfigError("mock fixture: __max_prompt_words__ must be a non-negative integer");
      mock->set_context_window(value.get<std::size_t>());
      continue;
    }
    if (!value.is_string())
      throw ConfigError("mock fixture: response for '" + key + "' must be a string");
    if (key == "*")
      mock->set_default_response(value.get<std::string>());
    else
      mock->add_substring(key, value.get<std::string>());
  }
  return mock;
}

}  // namespace selfroute
