#include <gtest/gtest.h>

#include <atomic>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

#include <vulnpipe/error.hpp>
#include <vulnpipe/io.hpp>
#include <vulnpipe/random.hpp>
#include <vulnpipe/scoring.hpp>

#include "generators.hpp"

namespace {

using namespace vulnpipe::scoring;
using nlohmann::json;
using vulnpipe::ProtocolError;
using vulnpipe::ScoringError;
using vulnpipe::TransportError;

json fixture(const std::string& name) {
  return json::parse(vulnpipe::io::read_file(vulnpipe::testing::fixtures_dir() / "scoring" / name));
}

std::string fixture_text(const std::string& name) {
  return vulnpipe::io::read_file(vulnpipe::testing::fixtures_dir() / "scoring" / name);
}

// Backend answering from the mock table fixture, in reverse request order.
class TableScorer final : public Scorer {
 public:
  TableScorer() {
    const json doc = fixture("mock_table.json");
    for (const json& it : doc.at("items")) {
      table_[it.at("id").get<std::string>()] = it.at("p_vulnerable").get<double>();
    }
  }
  ScoreResponse score_batch(const ScoreRequest& req) override {
    validate(req);
    ScoreResponse resp;
    for (auto it = req.items.rbegin(); it != req.items.rend(); ++it) {
      auto hit = table_.find(it->id);
      if (hit == table_.end()) throw ScoringError("unknown id " + it->id);
      resp.items.push_back({it->id, hit->second});
    }
    return resp;
  }
  std::map<std::string, double> table_;
};

ScoreRequest mock_request() {
  ScoreRequest req;
  const json doc = fixture("mock_table.json");
  for (const json& it : doc.at("items")) {
    req.items.push_back({it.at("id").get<std::string>(), it.at("text").get<std::string>()});
  }
  return req;
}

// In-process HTTP backend on an ephemeral port.
class MockServer {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  explicit MockServer(Handler handler) {
    server_.Post("/v1/score", [this, handler](const httplib::Request& req, httplib::Response& res) {
      {
        std::lock_guard lock(mutex_);
        ++hits_;
        last_auth_ = req.get_header_value("Authorization");
      }
      handler(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    thread_.join();
  }

  [[nodiscard]] std::string url() const { return fmt::format("http://127.0.0.1:{}/v1", port_); }
  int hits() {
    std::lock_guard lock(mutex_);
    return hits_;
  }
  std::string last_auth() {
    std::lock_guard lock(mutex_);
    return last_auth_;
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mutex_;
  int hits_ = 0;
  std::string last_auth_;
};

MockServer::Handler serving(Scorer& backend) {
  return [&backend](const httplib::Request& req, httplib::Response& res) {
    const HttpReply reply = handle_score_request(backend, req.body);
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  };
}

HttpScorerConfig config_for(const MockServer& s, std::size_t batch = 64) {
  HttpScorerConfig cfg;
  cfg.url = s.url();
  cfg.batch_size = batch;
  cfg.timeout = std::chrono::milliseconds(5000);
  return cfg;
}

// ---------------------------------------------------------------------------

TEST(Protocol, RoundTrip) {
  const ScoreRequest req = request_from_json(fixture("request_valid.json"));
  EXPECT_EQ(request_from_json(to_json(req)), req);
  const ScoreResponse resp = response_from_json(fixture("response_valid_shuffled.json"));
  EXPECT_EQ(response_from_json(to_json(resp)), resp);
  EXPECT_EQ(to_json(req), fixture("request_valid.json"));
}

TEST(Protocol, RequestConformance) {
  EXPECT_NO_THROW(validate(request_from_json(fixture("request_valid.json"))));
  EXPECT_THROW(validate(request_from_json(fixture("request_empty.json"))), ProtocolError);
  EXPECT_THROW(validate(request_from_json(fixture("request_duplicate_id.json"))), ProtocolError);
  EXPECT_THROW(request_from_json(fixture("request_missing_text.json")), ProtocolError);
  EXPECT_THROW(request_from_json(fixture("request_not_object.json")), ProtocolError);
}

TEST(Protocol, ResponseConformance) {
  const ScoreRequest req = request_from_json(fixture("request_valid.json"));
  const auto scores = match_response(req, response_from_json(fixture("response_valid_shuffled.json")));
  EXPECT_EQ(scores, (std::map<std::string, double>{{"a", 0.25}, {"b", 0.95}, {"c", 0.0}}));
  for (const char* bad : {"response_missing_id.json", "response_unknown_id.json",
                          "response_duplicate_id.json", "response_out_of_range.json"}) {
    EXPECT_THROW(match_response(req, response_from_json(fixture(bad))), ProtocolError) << bad;
  }
  EXPECT_THROW(response_from_json(fixture("response_non_numeric.json")), ProtocolError);
}

TEST(Protocol, ServerHandlerStatusCodes) {
  StubScorer stub;
  EXPECT_EQ(handle_score_request(stub, fixture_text("request_valid.json")).status, 200);
  for (const char* bad : {"request_empty.json", "request_duplicate_id.json",
                          "request_missing_text.json", "request_not_object.json",
                          "request_malformed.txt"}) {
    const HttpReply r = handle_score_request(stub, fixture_text(bad));
    EXPECT_EQ(r.status, 400) << bad;
    EXPECT_TRUE(json::parse(r.body).at("error").is_string());
  }
  TableScorer table;  // does not know ids a/b/c
  const HttpReply r = handle_score_request(table, fixture_text("request_valid.json"));
  EXPECT_EQ(r.status, 500);
}

TEST(Stub, Rules) {
  EXPECT_EQ(stub_score(""), 0.0);
  EXPECT_EQ(stub_score("  // only a comment\n"), 0.0);
  EXPECT_EQ(stub_score("$x = VULN_MARKER;"), 0.95);
  EXPECT_EQ(stub_score("$x = VULN_MARKER_NOT;") == 0.95, false);
  EXPECT_EQ(stub_score("foo()", {{"foo"}}), 0.95);
  const char* text = "function f($a) { return $a * 2; }";
  EXPECT_EQ(stub_score(text), stub_score(text));
  // Comments do not change the token sequence, so they do not change the score.
  EXPECT_EQ(stub_score(text), stub_score("function f($a) { /* c */ return $a * 2; }"));
}

TEST(Stub, RangeOnRandomTexts) {
  vulnpipe::Rng rng(12);
  const char* words[] = {"$a", "return", "(", ")", "VULN_MARKER", "if", "42", "'s'", ";", "{", "}"};
  for (int i = 0; i < 100; ++i) {
    std::string text;
    for (std::size_t k = rng.below(30); k > 0; --k) {
      text += words[rng.below(std::size(words))];
      text += ' ';
    }
    const double s = stub_score(text);
    EXPECT_TRUE((s >= 0.0 && s <= 0.4) || s == 0.95) << text << " -> " << s;
  }
}

TEST(Stub, BatchCoversEveryId) {
  StubScorer stub;
  const ScoreRequest req = request_from_json(fixture("request_valid.json"));
  const auto scores = match_response(req, stub.score_batch(req));
  EXPECT_EQ(scores.at("b"), 0.95);
  EXPECT_EQ(scores.at("c"), 0.0);
}

TEST(HttpScorer, MockTable) {
  TableScorer backend;
  MockServer server(serving(backend));
  HttpScorer client(config_for(server));
  const ScoreRequest req = mock_request();
  const auto scores = match_response(req, client.score_batch(req));
  EXPECT_EQ(scores, backend.table_);
  EXPECT_EQ(server.hits(), 1);
}

TEST(HttpScorer, ResponseFollowsRequestOrder) {
  TableScorer backend;
  MockServer server(serving(backend));
  HttpScorer client(config_for(server));
  const ScoreRequest req = mock_request();
  const ScoreResponse resp = client.score_batch(req);
  ASSERT_EQ(resp.items.size(), req.items.size());
  for (std::size_t i = 0; i < req.items.size(); ++i) EXPECT_EQ(resp.items[i].id, req.items[i].id);
}

TEST(HttpScorer, ChunksLargeRequests) {
  TableScorer backend;
  MockServer server(serving(backend));
  HttpScorer client(config_for(server, 2));
  const ScoreRequest req = mock_request();
  EXPECT_EQ(match_response(req, client.score_batch(req)), backend.table_);
  EXPECT_EQ(server.hits(), 3);
}

TEST(HttpScorer, BearerToken) {
  StubScorer backend;
  MockServer server(serving(backend));
  HttpScorerConfig cfg = config_for(server);
  cfg.bearer_token = "s3cret";
  HttpScorer client(cfg);
  client.score_batch(request_from_json(fixture("request_valid.json")));
  EXPECT_EQ(server.last_auth(), "Bearer s3cret");
}

TEST(HttpScorer, ServerErrorIsScoringError) {
  MockServer server([](const httplib::Request&, httplib::Response& res) {
    res.status = 503;
    res.set_content(R"({"error": "model not loaded"})", "application/json");
  });
  HttpScorer client(config_for(server));
  try {
    client.score_batch(mock_request());
    FAIL() << "expected ScoringError";
  } catch (const ScoringError& e) {
    EXPECT_NE(std::string(e.what()).find("model not loaded"), std::string::npos);
  }
}

TEST(HttpScorer, MalformedReplyIsProtocolError) {
  MockServer garbage([](const httplib::Request&, httplib::Response& res) {
    res.set_content("not json", "text/plain");
  });
  EXPECT_THROW(HttpScorer(config_for(garbage)).score_batch(mock_request()), ProtocolError);

  MockServer out_of_range([](const httplib::Request& req, httplib::Response& res) {
    json items = json::array();
    for (const json& it : json::parse(req.body).at("items")) items.push_back({{"id", it["id"]}, {"p_vulnerable", 2.0}});
    res.set_content(json{{"items", items}}.dump(), "application/json");
  });
  EXPECT_THROW(HttpScorer(config_for(out_of_range)).score_batch(mock_request()), ProtocolError);

  MockServer missing([](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"items": []})", "application/json");
  });
  EXPECT_THROW(HttpScorer(config_for(missing)).score_batch(mock_request()), ProtocolError);
}

TEST(HttpScorer, UnreachableIsTransportError) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }  // closed again: nothing listens there now
  HttpScorerConfig cfg;
  cfg.url = fmt::format("http://127.0.0.1:{}", port);
  cfg.timeout = std::chrono::milliseconds(500);
  EXPECT_THROW(HttpScorer(cfg).score_batch(mock_request()), TransportError);
}

TEST(HttpScorer, RejectsUnsupportedUrls) {
  auto config = [](std::string url, std::size_t batch = 64) {
    HttpScorerConfig cfg;
    cfg.url = std::move(url);
    cfg.batch_size = batch;
    return cfg;
  };
  EXPECT_THROW(HttpScorer(config("https://example.org")), vulnpipe::UsageError);
  EXPECT_THROW(HttpScorer(config("example.org")), vulnpipe::UsageError);
  EXPECT_THROW(HttpScorer(config("http://x", 0)), vulnpipe::UsageError);
}

TEST(MakeScorer, Dispatch) {
  EXPECT_NE(dynamic_cast<StubScorer*>(make_scorer("stub").get()), nullptr);
  EXPECT_NE(dynamic_cast<HttpScorer*>(make_scorer("http://127.0.0.1:9").get()), nullptr);
}

}  // namespace
