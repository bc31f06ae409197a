#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "simagent/llm_gateway.hpp"

using namespace simagent;
using json = nlohmann::json;

namespace {

// A local endpoint speaking the chat-completion and embedding JSON shapes.
class MockServer {
 public:
  MockServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++chat_calls;
      last_auth = req.get_header_value("Authorization");
      last_body = req.body;
      if (fail_first_with && chat_calls == 1) {
        res.status = fail_first_with;
        res.set_content(R"({"error":"slow down"})", "application/json");
        return;
      }
      if (always_fail_with) {
        res.status = always_fail_with;
        res.set_content("upstream exploded", "text/plain");
        return;
      }
      json body = json::parse(req.body);
      const std::string last = body["messages"].back()["content"];
      json out{{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", "echo: " + last}}}}})},
               {"usage", {{"prompt_tokens", 42}, {"completion_tokens", 7}}}};
      res.set_content(out.dump(), "application/json");
    });
    server_.Post("/v1/embeddings", [](const httplib::Request&, httplib::Response& res) {
      json out{{"data", json::array({{{"embedding", {3.0, 4.0}}}})}, {"usage", {{"prompt_tokens", 5}}}};
      res.set_content(out.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    thread_.join();
  }
  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

  std::atomic<int> chat_calls{0};
  int fail_first_with = 0;
  int always_fail_with = 0;
  std::string last_auth;
  std::string last_body;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

LiveProviderConfig config_for(const MockServer& s) {
  LiveProviderConfig c;
  c.url = s.url("/v1/chat/completions");
  c.api_key = "test-key";
  c.model = "mock-model";
  c.timeout_seconds = 5;
  return c;
}

}  // namespace

TEST_CASE("live provider speaks the chat-completion protocol") {
  MockServer server;
  LiveChatProvider p(config_for(server));
  const auto reply = p.chat({{Role::system, "sys"}, {Role::user, "hello"}}, ChatParams{});
  CHECK(reply.text == "echo: hello");
  CHECK(reply.usage.input_tokens == 42);
  CHECK(reply.usage.output_tokens == 7);
  CHECK(reply.usage.wall_time >= 0.0);
  CHECK(server.last_auth == "Bearer test-key");
  const json sent = json::parse(server.last_body);
  CHECK(sent["model"] == "mock-model");
  CHECK(sent["temperature"] == 0.0);
  REQUIRE(sent["messages"].size() == 2);
  CHECK(sent["messages"][0]["role"] == "system");
  CHECK(sent["messages"][1]["role"] == "user");
}

TEST_CASE("live provider retries once after 429") {
  MockServer server;
  server.fail_first_with = 429;
  LiveChatProvider p(config_for(server));
  CHECK(p.chat({{Role::user, "again"}}, {}).text == "echo: again");
  CHECK(server.chat_calls == 2);
}

TEST_CASE("live provider surfaces persistent failures with status and body") {
  MockServer server;
  server.always_fail_with = 503;
  auto cfg = config_for(server);
  cfg.retries = 0;
  LiveChatProvider p(cfg);
  try {
    p.chat({{Role::user, "x"}}, {});
    FAIL("expected ProviderError");
  } catch (const ProviderError& e) {
    CHECK(e.status() == 503);
    CHECK(e.body_excerpt().find("upstream exploded") != std::string::npos);
  }
}

TEST_CASE("live provider reports transport failures as status 0") {
  LiveProviderConfig c;
  c.url = "http://127.0.0.1:1/v1/chat/completions";
  c.timeout_seconds = 1;
  c.retries = 0;
  LiveChatProvider p(c);
  try {
    p.chat({{Role::user, "x"}}, {});
    FAIL("expected ProviderError");
  } catch (const ProviderError& e) {
    CHECK(e.status() == 0);
  }
  CHECK_THROWS_AS(LiveChatProvider(LiveProviderConfig{"no-scheme", "", "m", 1, 0}), std::invalid_argument);
}

TEST_CASE("live embedder normalizes and records usage") {
  MockServer server;
  LiveEmbedderConfig c;
  c.url = server.url("/v1/embeddings");
  c.dimension = 2;
  c.timeout_seconds = 5;
  CostLedger ledger;
  LiveEmbedder e(c, &ledger);
  const auto v = e.embed("some text");
  REQUIRE(v.dimension() == 2);
  CHECK(v.values[0] == doctest::Approx(0.6));
  CHECK(v.values[1] == doctest::Approx(0.8));
  REQUIRE(ledger.size() == 1);
  CHECK(ledger.records()[0].call_kind == CallKind::embed);
  CHECK(ledger.records()[0].input_tokens == 5);

  c.dimension = 3;
  LiveEmbedder wrong(c);
  CHECK_THROWS_AS(wrong.embed("x"), ProviderError);
}
