#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "llmbandit/gateway.hpp"
#include "support.hpp"

using namespace llmbandit;
using namespace std::chrono_literals;
using testing_support::ok_reply;
using testing_support::ScriptedTransport;
using testing_support::StubServer;
using testing_support::TempDir;

namespace {

struct SleepLog {
  std::vector<std::chrono::milliseconds> calls;
  std::function<void(std::chrono::milliseconds)> fn() {
    return [this](std::chrono::milliseconds d) { calls.push_back(d); };
  }
};

ClientConfig quiet_config(SleepLog& sleeps, int max_tries = 5) {
  ClientConfig c;
  c.api_key = "test-key";
  c.max_tries = max_tries;
  c.backoff_base = 100ms;
  c.sleep = sleeps.fn();
  return c;
}

}  // namespace

TEST_CASE("live client against a loopback stub") {
  StubServer server([](const std::string&, const nlohmann::json&) { return std::make_pair(200, std::string("#1.0#")); });
  SleepLog sleeps;
  ChatClient client(std::make_shared<HttplibTransport>(server.base_url()), quiet_config(sleeps));
  const auto r = client.complete(make_user_request("m", "hello", 0.0));
  CHECK(r.text == "#1.0#");
  CHECK(r.attempts == 1);
  CHECK(server.requests() == 1);
  CHECK(server.last_auth() == "Bearer test-key");
}

TEST_CASE("request body shape") {
  const auto body = nlohmann::json::parse(request_body(make_user_request("gpt-x", "prompt text", 0.7, 32)));
  CHECK(body.at("model") == "gpt-x");
  CHECK(body.at("temperature") == 0.7);
  CHECK(body.at("max_tokens") == 32);
  CHECK(body.at("messages").size() == 1);
  CHECK(body.at("messages")[0].at("role") == "user");
  CHECK(body.at("messages")[0].at("content") == "prompt text");
}

TEST_CASE("429 is retried with backoff") {
  auto t = std::make_shared<ScriptedTransport>();
  t->script = {{429, "slow down", ""}, ok_reply("#0.5#")};
  SleepLog sleeps;
  ChatClient client(t, quiet_config(sleeps));
  const auto r = client.complete(make_user_request("m", "p", 0.0));
  CHECK(r.text == "#0.5#");
  CHECK(r.attempts == 2);
  CHECK(t->operations() == 2);
  REQUIRE(sleeps.calls.size() == 1);
  CHECK(sleeps.calls[0] == 100ms);
  REQUIRE(t->headers.size() == 2);
  CHECK(t->headers[0][0] == std::make_pair(std::string("Authorization"), std::string("Bearer test-key")));
}

TEST_CASE("backoff grows and persistent failures surface") {
  auto t = std::make_shared<ScriptedTransport>();
  t->script = {{429, "busy", ""}};
  SleepLog sleeps;
  ChatClient client(t, quiet_config(sleeps, 4));
  CHECK_THROWS_AS(client.complete(make_user_request("m", "p", 0.0)), RateLimitError);
  CHECK(t->operations() == 4);
  CHECK(sleeps.calls == std::vector<std::chrono::milliseconds>{100ms, 200ms, 400ms});

  auto down = std::make_shared<ScriptedTransport>();
  down->script = {{0, "", "connection refused"}, {503, "unavailable", ""}};
  ChatClient c2(down, quiet_config(sleeps, 2));
  CHECK_THROWS_AS(c2.complete(make_user_request("m", "p", 0.0)), GatewayError);
  CHECK(down->operations() == 2);
}

TEST_CASE("auth failures are not retried") {
  for (int status : {401, 403}) {
    auto t = std::make_shared<ScriptedTransport>();
    t->script = {{status, "nope", ""}, ok_reply("#1#")};
    SleepLog sleeps;
    ChatClient client(t, quiet_config(sleeps));
    CHECK_THROWS_AS(client.complete(make_user_request("m", "p", 0.0)), AuthError);
    CHECK(t->operations() == 1);
    CHECK(sleeps.calls.empty());
  }
}

TEST_CASE("other client errors fail without retry") {
  auto t = std::make_shared<ScriptedTransport>();
  t->script = {{400, "bad request", ""}};
  SleepLog sleeps;
  ChatClient client(t, quiet_config(sleeps));
  CHECK_THROWS_AS(client.complete(make_user_request("m", "p", 0.0)), GatewayError);
  CHECK(t->operations() == 1);
}

TEST_CASE("malformed envelopes") {
  CHECK_THROWS_AS(extract_content("not json"), GatewayError);
  CHECK_THROWS_AS(extract_content(R"({"choices": []})"), GatewayError);
  CHECK_THROWS_AS(extract_content(R"({"choices": [{"message": {}}]})"), GatewayError);
  CHECK(extract_content(ok_reply("x").body) == "x");
}

TEST_CASE("cache keys") {
  const ChatRequest base = make_user_request("m", "p", 0.5);
  CHECK(cache_key(base) == cache_key(make_user_request("m", "p", 0.5)));
  std::set<std::string> keys{cache_key(base)};
  ChatRequest r = base;
  r.model = "n";
  keys.insert(cache_key(r));
  r = base;
  r.temperature = 0.50000001;
  keys.insert(cache_key(r));
  r = base;
  r.messages[0].content = "q";
  keys.insert(cache_key(r));
  r = base;
  r.sample_index = 1;
  keys.insert(cache_key(r));
  r = base;
  r.attempt = 1;
  keys.insert(cache_key(r));
  r = base;
  r.max_tokens = 65;
  keys.insert(cache_key(r));
  CHECK(keys.size() == 7);
  CHECK(cache_key(base).size() == 64);
}

TEST_CASE("encoding known vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(base64_encode("") == "");
  CHECK(base64_encode("f") == "Zg==");
  CHECK(base64_encode("fo") == "Zm8=");
  CHECK(base64_encode("foobar") == "Zm9vYmFy");
  for (const std::string s : {"", "a", "ab", "abc", "line\nwith\ttabs"}) CHECK(base64_decode(base64_encode(s)) == s);
  const std::string binary("\x00\xff\x10 binary", 10);
  CHECK(base64_decode(base64_encode(binary)) == binary);
  CHECK_THROWS(base64_decode("abc"));
}

TEST_CASE("caching gateway") {
  TempDir tmp("gw");
  const auto log = tmp.path() / "replay.log";
  auto t = std::make_shared<ScriptedTransport>();
  t->script = {ok_reply("#0.25#\nsecond line")};
  SleepLog sleeps;
  auto client = std::make_shared<ChatClient>(t, quiet_config(sleeps));

  SUBCASE("identical requests hit the network once") {
    CachingGateway gw(GatewayMode::live, client);
    const auto req = make_user_request("m", "p", 0.0);
    CHECK_FALSE(gw.cached_complete(req).from_cache);
    CHECK(gw.cached_complete(req).from_cache);
    CHECK(t->operations() == 1);
    CHECK(gw.network_calls() == 1);
    CHECK_FALSE(std::filesystem::exists(log));
  }
  SUBCASE("record then replay offline") {
    {
      CachingGateway rec(GatewayMode::record, client, log);
      rec.cached_complete(make_user_request("m", "p", 0.0));
      rec.cached_complete(make_user_request("m", "p", 0.0));
    }
    const std::string contents = testing_support::slurp(log);
    CHECK(std::count(contents.begin(), contents.end(), '\n') == 1);
    CHECK(std::count(contents.begin(), contents.end(), '\t') == 2);

    auto watched = std::make_shared<ScriptedTransport>();
    CachingGateway rep(GatewayMode::replay, std::make_shared<ChatClient>(watched, quiet_config(sleeps)), log);
    const auto hit = rep.cached_complete(make_user_request("m", "p", 0.0));
    CHECK(hit.text == "#0.25#\nsecond line");
    CHECK(hit.from_cache);
    CHECK_THROWS_AS(rep.cached_complete(make_user_request("m", "other", 0.0)), ReplayMissError);
    CHECK(watched->operations() == 0);
  }
  SUBCASE("mode requirements") {
    CHECK_THROWS_AS(CachingGateway(GatewayMode::replay, nullptr, tmp.path() / "missing.log"), GatewayError);
    CHECK_THROWS(CachingGateway(GatewayMode::record, client));
    CHECK_THROWS(CachingGateway(GatewayMode::live, nullptr));
    CHECK(parse_gateway_mode("replay") == GatewayMode::replay);
    CHECK_THROWS(parse_gateway_mode("offline"));
  }
}

TEST_CASE("rate limiter sleeps once the bucket is empty") {
  SleepLog sleeps;
  RateLimiter limiter(120.0, sleeps.fn());
  for (int i = 0; i < 120; ++i) limiter.acquire();
  CHECK(sleeps.calls.empty());
  // The injected sleep does not advance the clock, so give it a real nap.
  std::vector<std::chrono::milliseconds> naps;
  RateLimiter slow(6000.0, [&](std::chrono::milliseconds d) {
    naps.push_back(d);
    std::this_thread::sleep_for(d);
  });
  for (int i = 0; i < 6000; ++i) slow.acquire();
  CHECK(naps.empty());
  slow.acquire();
  REQUIRE_FALSE(naps.empty());
  CHECK(naps[0].count() >= 1);
  CHECK(naps[0].count() <= 10);

  SleepLog never;
  RateLimiter off(0.0, never.fn());
  for (int i = 0; i < 1000; ++i) off.acquire();
  CHECK(never.calls.empty());
}

TEST_CASE("LLM predictor retries unparseable replies") {
  auto t = std::make_shared<ScriptedTransport>();
  t->script = {ok_reply("I think about 0.3"), ok_reply("#0.3#")};
  SleepLog sleeps;
  auto gw = std::make_shared<CachingGateway>(GatewayMode::live, std::make_shared<ChatClient>(t, quiet_config(sleeps)));
  LlmPredictor p(gw, {"m", 64, 3, {}, {}});
  History h(HistoryKind::reward);
  PredictionRequest r;
  r.history = &h;
  r.query_features = Eigen::Vector2d(0.1, 0.2);
  r.temperature = 0.5;
  Rng rng(0);
  const auto res = p.predict(r, rng);
  CHECK(res.value == 0.3);
  CHECK(res.attempts == 2);
  CHECK(res.raw_text == "#0.3#");
  const auto sent = nlohmann::json::parse(t->bodies[0]);
  CHECK(sent.at("messages")[0].at("content") == p.render(r));
  CHECK(sent.at("temperature") == 0.5);

  auto bad = std::make_shared<ScriptedTransport>();
  bad->script = {ok_reply("no number")};
  auto gw2 = std::make_shared<CachingGateway>(GatewayMode::live, std::make_shared<ChatClient>(bad, quiet_config(sleeps)));
  LlmPredictor p2(gw2, {"m", 64, 2, {}, {}});
  CHECK_THROWS_AS(p2.predict(r, rng), ParseError);
  CHECK(bad->operations() == 2);
}

TEST_CASE("LLM preference predictions are clamped") {
  auto t = std::make_shared<ScriptedTransport>();
  t->script = {ok_reply("#1.3#")};
  SleepLog sleeps;
  auto gw = std::make_shared<CachingGateway>(GatewayMode::live, std::make_shared<ChatClient>(t, quiet_config(sleeps)));
  LlmPredictor p(gw, {"m", 64, 1, {}, {}});
  History h(HistoryKind::preference);
  PredictionRequest r;
  r.history = &h;
  r.kind = PredictionKind::preference_probability;
  r.query_features = Eigen::Vector2d(0.1, 0.2);
  Rng rng(0);
  CHECK(p.predict(r, rng).value == 1.0);
}
