#include "vulnpipe/scoring.hpp"

#include <algorithm>
#include <cstdint>
#include <set>

#include <fmt/format.h>
#include <httplib.h>

#include "vulnpipe/error.hpp"
#include "vulnpipe/tokenizer.hpp"

namespace vulnpipe::scoring {

using nlohmann::json;

json to_json(const ScoreRequest& req) {
  json items = json::array();
  for (const ScoreItem& it : req.items) items.push_back({{"id", it.id}, {"text", it.text}});
  return {{"items", std::move(items)}};
}

json to_json(const ScoreResponse& resp) {
  json items = json::array();
  for (const ScoredItem& it : resp.items) {
    items.push_back({{"id", it.id}, {"p_vulnerable", it.p_vulnerable}});
  }
  return {{"items", std::move(items)}};
}

namespace {

const json& items_of(const json& j) {
  if (!j.is_object()) throw ProtocolError("expected a JSON object");
  auto it = j.find("items");
  if (it == j.end() || !it->is_array()) throw ProtocolError("missing 'items' array");
  return *it;
}

std::string string_field(const json& item, const char* key, std::size_t index) {
  auto it = item.find(key);
  if (it == item.end() || !it->is_string()) {
    throw ProtocolError(fmt::format("items[{}]: missing string field '{}'", index, key));
  }
  return it->get<std::string>();
}

}  // namespace

ScoreRequest request_from_json(const json& j) {
  ScoreRequest req;
  const json& items = items_of(j);
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!items[i].is_object()) throw ProtocolError(fmt::format("items[{}]: expected an object", i));
    req.items.push_back({string_field(items[i], "id", i), string_field(items[i], "text", i)});
  }
  return req;
}

ScoreResponse response_from_json(const json& j) {
  ScoreResponse resp;
  const json& items = items_of(j);
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!items[i].is_object()) throw ProtocolError(fmt::format("items[{}]: expected an object", i));
    auto p = items[i].find("p_vulnerable");
    if (p == items[i].end() || !p->is_number()) {
      throw ProtocolError(fmt::format("items[{}]: missing numeric field 'p_vulnerable'", i));
    }
    resp.items.push_back({string_field(items[i], "id", i), p->get<double>()});
  }
  return resp;
}

void validate(const ScoreRequest& req) {
  if (req.items.empty()) throw ProtocolError("request has no items");
  std::set<std::string_view> ids;
  for (const ScoreItem& it : req.items) {
    if (!ids.insert(it.id).second) throw ProtocolError("duplicate request id '" + it.id + "'");
  }
}

std::map<std::string, double> match_response(const ScoreRequest& req, const ScoreResponse& resp) {
  std::map<std::string, double> scores;
  std::set<std::string_view> wanted;
  for (const ScoreItem& it : req.items) wanted.insert(it.id);
  for (const ScoredItem& it : resp.items) {
    if (!wanted.contains(it.id)) throw ProtocolError("response has unknown id '" + it.id + "'");
    if (!(it.p_vulnerable >= 0.0 && it.p_vulnerable <= 1.0)) {
      throw ProtocolError(fmt::format("id '{}': probability {} outside [0, 1]", it.id, it.p_vulnerable));
    }
    if (!scores.emplace(it.id, it.p_vulnerable).second) {
      throw ProtocolError("response repeats id '" + it.id + "'");
    }
  }
  for (std::string_view id : wanted) {
    if (!scores.contains(std::string(id))) {
      throw ProtocolError(fmt::format("response is missing id '{}'", id));
    }
  }
  return scores;
}

// ---------------------------------------------------------------------------
// Stub

double stub_score(std::string_view text, const StubConfig& cfg) {
  const std::vector<std::string> tokens = extraction::tokenize(text);
  if (tokens.empty()) return 0.0;
  for (const std::string& tok : tokens) {
    if (std::find(cfg.markers.begin(), cfg.markers.end(), tok) != cfg.markers.end()) return 0.95;
  }
  // FNV-1a over the token texts, 0xff between tokens (never valid UTF-8).
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](unsigned char b) {
    h ^= b;
    h *= 0x100000001b3ULL;
  };
  for (const std::string& tok : tokens) {
    for (char c : tok) feed(static_cast<unsigned char>(c));
    feed(0xff);
  }
  constexpr std::uint64_t kSteps = 1'000'000;
  return 0.4 * static_cast<double>(h % (kSteps + 1)) / static_cast<double>(kSteps);
}

ScoreResponse StubScorer::score_batch(const ScoreRequest& req) {
  validate(req);
  ScoreResponse resp;
  resp.items.reserve(req.items.size());
  for (const ScoreItem& it : req.items) resp.items.push_back({it.id, stub_score(it.text, cfg_)});
  return resp;
}

// ---------------------------------------------------------------------------
// HTTP client

HttpScorer::HttpScorer(HttpScorerConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.batch_size == 0) throw UsageError("scorer batch_size must be >= 1");
  std::string_view url = cfg_.url;
  if (!url.starts_with("http://")) {
    throw UsageError("scorer URL must start with http:// (got '" + cfg_.url + "')");
  }
  const auto slash = url.find('/', 7);
  host_ = std::string(url.substr(0, slash));
  std::string prefix = slash == std::string_view::npos ? "" : std::string(url.substr(slash));
  while (prefix.ends_with('/')) prefix.pop_back();
  path_ = prefix + "/score";
}

ScoreResponse HttpScorer::post_chunk(const ScoreRequest& chunk) {
  httplib::Client client(host_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  if (!cfg_.bearer_token.empty()) client.set_bearer_token_auth(cfg_.bearer_token);

  const std::string body = to_json(chunk).dump();
  httplib::Result res;
  for (int attempt = 0; attempt <= std::max(0, cfg_.retries); ++attempt) {
    res = client.Post(path_, body, "application/json");
    if (res) break;
  }
  if (!res) {
    throw TransportError(fmt::format("POST {}{} failed: {}", host_, path_, httplib::to_string(res.error())));
  }
  if (res->status != 200) {
    std::string detail = res->body;
    try {
      const json err = json::parse(res->body);
      if (err.contains("error") && err["error"].is_string()) detail = err["error"].get<std::string>();
    } catch (const json::exception&) {
    }
    throw ScoringError(fmt::format("scorer returned HTTP {}: {}", res->status, detail));
  }
  json doc;
  try {
    doc = json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw ProtocolError(fmt::format("scorer response is not JSON (byte {})", e.byte));
  }
  return response_from_json(doc);
}

ScoreResponse HttpScorer::score_batch(const ScoreRequest& req) {
  validate(req);
  std::map<std::string, double> merged;
  for (std::size_t begin = 0; begin < req.items.size(); begin += cfg_.batch_size) {
    const std::size_t end = std::min(req.items.size(), begin + cfg_.batch_size);
    ScoreRequest chunk{{req.items.begin() + static_cast<std::ptrdiff_t>(begin),
                        req.items.begin() + static_cast<std::ptrdiff_t>(end)}};
    const auto scores = match_response(chunk, post_chunk(chunk));
    merged.insert(scores.begin(), scores.end());
  }
  ScoreResponse resp;
  for (const ScoreItem& it : req.items) resp.items.push_back({it.id, merged.at(it.id)});
  return resp;
}

std::unique_ptr<Scorer> make_scorer(std::string_view spec, const StubConfig& stub,
                                    HttpScorerConfig http) {
  if (spec == "stub") return std::make_unique<StubScorer>(stub);
  http.url = std::string(spec);
  return std::make_unique<HttpScorer>(std::move(http));
}

HttpReply handle_score_request(Scorer& backend, std::string_view body) {
  auto error = [](int status, std::string_view msg) {
    return HttpReply{status, json{{"error", msg}}.dump()};
  };
  ScoreRequest req;
  try {
    req = request_from_json(json::parse(body));
    validate(req);
  } catch (const json::parse_error& e) {
    return error(400, fmt::format("malformed JSON at byte {}", e.byte));
  } catch (const ProtocolError& e) {
    return error(400, e.what());
  }
  try {
    return {200, to_json(backend.score_batch(req)).dump()};
  } catch (const std::exception& e) {
    return error(500, e.what());
  }
}

}  // namespace vulnpipe::scoring
