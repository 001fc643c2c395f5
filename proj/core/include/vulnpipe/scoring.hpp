#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace vulnpipe::scoring {

/// Environment variables consulted when no scorer is given on the command line.
inline constexpr const char* kScorerUrlEnv = "VULNPIPE_SCORER_URL";
inline constexpr const char* kScorerTokenEnv = "VULNPIPE_SCORER_TOKEN";

struct ScoreItem {
  std::string id;
  std::string text;

  friend bool operator==(const ScoreItem&, const ScoreItem&) = default;
};

struct ScoreRequest {
  std::vector<ScoreItem> items;

  friend bool operator==(const ScoreRequest&, const ScoreRequest&) = default;
};

struct ScoredItem {
  std::string id;
  double p_vulnerable = 0.0;

  friend bool operator==(const ScoredItem&, const ScoredItem&) = default;
};

struct ScoreResponse {
  std::vector<ScoredItem> items;

  friend bool operator==(const ScoreResponse&, const ScoreResponse&) = default;
};

// Wire format (POST /score):
//   request  {"items":[{"id":"...","text":"..."}]}
//   response {"items":[{"id":"...","p_vulnerable":0.0}]}
//   failure  non-200 status with {"error":"..."}
nlohmann::json to_json(const ScoreRequest& req);
nlohmann::json to_json(const ScoreResponse& resp);
/// Both throw ProtocolError on a document that does not follow the schema.
ScoreRequest request_from_json(const nlohmann::json& j);
ScoreResponse response_from_json(const nlohmann::json& j);

/// Non-empty, unique ids. Throws ProtocolError.
void validate(const ScoreRequest& req);

/// Pairs a response with its request by id, in any order. Throws
/// ProtocolError on a missing, duplicate or unknown id, or a probability
/// outside [0, 1].
std::map<std::string, double> match_response(const ScoreRequest& req, const ScoreResponse& resp);

/// A classifier backend.
class Scorer {
 public:
  virtual ~Scorer() = default;
  /// Response covers every request id exactly once.
  virtual ScoreResponse score_batch(const ScoreRequest& req) = 0;
};

struct StubConfig {
  std::vector<std::string> markers{"VULN_MARKER"};
};

/// Deterministic stand-in model: 0.0 for text without tokens, 0.95 when a
/// marker token is present, otherwise a hash of the token sequence mapped
/// into [0, 0.4].
double stub_score(std::string_view text, const StubConfig& cfg = {});

class StubScorer final : public Scorer {
 public:
  explicit StubScorer(StubConfig cfg = {}) : cfg_(std::move(cfg)) {}
  ScoreResponse score_batch(const ScoreRequest& req) override;

 private:
  StubConfig cfg_;
};

struct HttpScorerConfig {
  std::string url;  // http://host[:port][/prefix]; requests go to <prefix>/score
  std::string bearer_token;
  std::size_t batch_size = 64;
  std::chrono::milliseconds timeout{30'000};
  int retries = 1;  // extra attempts after a transport failure
};

/// Client for a remote backend. Requests larger than `batch_size` are sent
/// in chunks; scoring is idempotent, so transport failures are retried.
/// Throws TransportError, ScoringError (non-200) or ProtocolError.
class HttpScorer final : public Scorer {
 public:
  explicit HttpScorer(HttpScorerConfig cfg);
  ScoreResponse score_batch(const ScoreRequest& req) override;

 private:
  ScoreResponse post_chunk(const ScoreRequest& chunk);

  HttpScorerConfig cfg_;
  std::string host_;
  std::string path_;
};

/// "stub" selects StubScorer; anything else is treated as a backend URL.
std::unique_ptr<Scorer> make_scorer(std::string_view spec, const StubConfig& stub = {},
                                    HttpScorerConfig http = {});

struct HttpReply {
  int status = 200;
  std::string body;
};

/// Server-side handler for POST /score bodies. Protocol violations give 400,
/// backend failures 500, both with an {"error": ...} body.
HttpReply handle_score_request(Scorer& backend, std::string_view body);

}  // namespace vulnpipe::scoring
