#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <thread>

#include "httplib.h"

#include "testutil.hpp"

#include "driveagent/datagen.hpp"
#include "driveagent/evalharness.hpp"

using namespace driveagent;

namespace {

/// Local scoring/proposal service for adapter tests.
struct LocalServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  LocalServer() {
    server.Post("/judge", [](const httplib::Request& req, httplib::Response& res) {
      Json request = Json::parse(req.body);
      REQUIRE(request.contains("prompt"));
      REQUIRE(request.contains("trace"));
      Json scores;
      double example[12] = {6.0, 6.5, 7.0, 7.5, 8.0, 7.0, 8.5, 7.5, 7.0, 8.5, 8.5, 7.0};
      const auto& metrics = eval::rubric_metrics();
      for (std::size_t i = 0; i < metrics.size(); ++i) scores[metrics[i]] = example[i];
      scores["Overall Score"] = 7.42;
      res.set_content(scores.dump(), "application/json");
    });
    server.Post("/propose", [](const httplib::Request& req, httplib::Response& res) {
      Json request = Json::parse(req.body);
      int n = request["n"].get<int>();
      const Catalog& catalog = Catalog::standard();
      OracleGenerator oracle(&catalog);
      Scene s0 = fixtures::scene_s0();
      const QAItem* qa = s0.find_qa(request["question_id"].get<std::string>());
      REQUIRE(qa != nullptr);
      Json traces = Json::array();
      for (const auto& t :
           oracle.propose(s0, *qa, n, request["seed"].get<uint64_t>())) {
        traces.push_back(trace_to_json(t));
      }
      res.set_content(Json{{"traces", std::move(traces)}}.dump(), "application/json");
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }

  ~LocalServer() {
    server.stop();
    thread.join();
  }

  std::string url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port) + path;
  }
};

}  // namespace

TEST_CASE("http judge posts the rubric and parses the 12-score reply") {
  LocalServer server;
  if (server.port <= 0) return;  // sandbox without loopback listeners

  eval::HttpJudge judge(server.url("/judge"));
  Scene s0 = fixtures::scene_s0();
  Trace t;
  t.scene_id = "s0";
  t.question_id = "s0-q1";
  t.final_answer = "A. car";

  eval::ScoreCard card = eval::judge_scorecard(judge, t, s0);
  CHECK(card.overall == doctest::Approx(7.42));
  CHECK(card.scores.size() == 12);
  CHECK(card.scores[0].first == "Faithfulness-Step");
  CHECK(card.scores[0].second == 6.0);
}

TEST_CASE("http generator round-trips proposals through the service") {
  LocalServer server;
  if (server.port <= 0) return;

  HttpGenerator generator(server.url("/propose"));
  Scene s0 = fixtures::scene_s0();
  auto traces = generator.propose(s0, s0.qa_items[0], 2, 9);
  REQUIRE(traces.size() == 2);
  CHECK(traces[0].question_id == "s0-q1");
  CHECK(traces[0].final_answer == "A. car");

  // proposals from the remote service still pass the local audit
  const Catalog& catalog = Catalog::standard();
  for (const auto& t : traces) {
    CHECK(audit_trace(t, s0, s0.qa_items[0], catalog).keep());
  }
}

TEST_CASE("judge rubric prompt carries every metric name") {
  const std::string& prompt = eval::rubric_prompt();
  for (const auto& metric : eval::rubric_metrics()) {
    CHECK(prompt.find(metric) != std::string::npos);
  }
  CHECK(prompt.find("Overall Score") != std::string::npos);
}
