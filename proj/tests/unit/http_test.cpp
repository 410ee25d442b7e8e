#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "gsp/error.hpp"
#include "gsp/render/audio.hpp"
#include "gsp/service/http_server.hpp"
#include "support.hpp"

using namespace gsp;
using namespace gsp::service;
using nlohmann::json;

namespace {

/// An experiment behind a live server on a free port, driven by a manual clock.
class Served : public ::testing::Test {
 protected:
  void start(ExperimentConfig config, ExperimentOptions options = {}) {
    clock_ms = to_millis(test::at(0));
    experiment = std::make_unique<Experiment>(config, test::at(0), options);
    ServerOptions so;
    so.port = 0;
    so.clock = [this] { return from_millis(clock_ms.load()); };
    server = std::make_unique<HttpServer>(*experiment, so);
    port = server->bind();
    thread = std::thread([this] { server->serve(); });
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
    // Wait for the listener.
    for (int i = 0; i < 200 && !client->Get("/api/admin/chains"); ++i) {
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }
  void TearDown() override {
    if (server) server->stop();
    if (thread.joinable()) thread.join();
  }
  void advance(double seconds) { clock_ms += static_cast<std::int64_t>(seconds * 1000); }

  std::string session(bool prescreened = true) {
    auto r = client->Get(prescreened ? "/api/session?prescreened=true" : "/api/session");
    EXPECT_EQ(r->status, 200);
    return json::parse(r->body).at("participant_token").get<std::string>();
  }
  httplib::Result post(const std::string& path, const json& body) {
    return client->Post(path, body.dump(), "application/json");
  }
  static std::string error_of(const httplib::Result& r) { return json::parse(r->body).at("error").get<std::string>(); }

  /// Answers slider trials until every chain is full.
  void fill_chains(int participants) {
    std::vector<std::string> people;
    for (int i = 0; i < participants; ++i) people.push_back(session());
    for (bool any = true; any && !experiment->state().terminated();) {
      any = false;
      for (const auto& p : people) {
        advance(1);
        auto r = client->Get("/api/trial?participant=" + p);
        if (r->status != 200) continue;
        any = true;
        const auto trial = json::parse(r->body);
        post("/api/response", {{"trial_id", trial.at("trial_id")}, {"slider_index", 12}});
      }
    }
  }

  std::atomic<std::int64_t> clock_ms{0};
  std::unique_ptr<Experiment> experiment;
  std::unique_ptr<HttpServer> server;
  std::thread thread;
  int port = 0;
  std::unique_ptr<httplib::Client> client;
};

ExperimentOptions no_render() {
  ExperimentOptions o;
  o.render_on_assign = false;
  return o;
}

}  // namespace

TEST(HttpStatus, ErrorCodesMapToStatuses) {
  EXPECT_EQ(http_status(Errc::auth), 403);
  EXPECT_EQ(http_status(Errc::not_found), 404);
  EXPECT_EQ(http_status(Errc::duplicate), 409);
  EXPECT_EQ(http_status(Errc::phase), 409);
  EXPECT_EQ(http_status(Errc::empty_experiment), 409);
  EXPECT_EQ(http_status(Errc::expired), 410);
  EXPECT_EQ(http_status(Errc::experiment_closed), 410);
  EXPECT_EQ(http_status(Errc::range), 400);
  EXPECT_EQ(http_status(Errc::batch), 502);
  EXPECT_EQ(http_status(Errc::io), 500);
}

TEST_F(Served, TrialCarriesThirtyTwoPlayableStimuli) {
  start(test::small_config());
  const auto pid = session();
  advance(1);
  auto r = client->Get("/api/trial?participant=" + pid);
  ASSERT_EQ(r->status, 200);
  const auto trial = json::parse(r->body);
  EXPECT_EQ(trial.at("participant_id"), pid);
  const auto urls = trial.at("stimuli");
  ASSERT_EQ(urls.size(), 32u);
  for (const std::size_t k : {0u, 12u, 31u}) {
    auto wav = client->Get(urls[k].get<std::string>());
    ASSERT_EQ(wav->status, 200);
    EXPECT_EQ(wav->get_header_value("Content-Type"), "audio/wav");
    const auto audio = render::decode_wav(std::vector<std::uint8_t>(wav->body.begin(), wav->body.end()));
    EXPECT_GT(audio.samples.size(), 1000u);
  }
  EXPECT_EQ(client->Get("/api/stimulus/00ff.wav")->status, 404);
}

TEST_F(Served, ResponseAdvancesTheChain) {
  start(test::small_config(), no_render());
  std::vector<int> chains;
  for (int i = 0; i < 3; ++i) {
    const auto pid = session();
    auto r = client->Get("/api/trial?participant=" + pid);
    ASSERT_EQ(r->status, 200);
    const auto trial = json::parse(r->body);
    chains.push_back(trial.at("chain_id").get<int>());
    auto ok = post("/api/response", {{"trial_id", trial.at("trial_id")}, {"slider_index", 20}});
    EXPECT_EQ(ok->status, 200);
    EXPECT_EQ(json::parse(ok->body).at("status"), "recorded");
  }
  // Fewest-outstanding order with nothing outstanding picks the first chain every time.
  EXPECT_EQ(chains, (std::vector<int>{0, 0, 0}));
  const auto summary = json::parse(client->Get("/api/admin/chains")->body);
  EXPECT_EQ(summary[0].at("iteration"), 1);
  EXPECT_EQ(summary[1].at("iteration"), 0);
}

TEST_F(Served, ParticipantErrors) {
  start(test::small_config(), no_render());
  EXPECT_EQ(client->Get("/api/trial")->status, 403);
  EXPECT_EQ(client->Get("/api/trial?participant=nobody")->status, 403);
  const auto unscreened = session(false);
  auto r = client->Get("/api/trial?participant=" + unscreened);
  EXPECT_EQ(r->status, 403);
  EXPECT_EQ(error_of(r), "auth");

  const auto pid = session();
  const auto trial = json::parse(client->Get("/api/trial?participant=" + pid)->body);
  const auto id = trial.at("trial_id");
  EXPECT_EQ(post("/api/response", {{"trial_id", id}, {"slider_index", 32}})->status, 400);
  EXPECT_EQ(post("/api/response", {{"trial_id", id}})->status, 400);
  EXPECT_EQ(client->Post("/api/response", "{not json", "application/json")->status, 400);
  EXPECT_EQ(post("/api/response", {{"trial_id", "t99999999"}, {"slider_index", 3}})->status, 404);
  EXPECT_EQ(post("/api/response", {{"trial_id", id}, {"slider_index", 3}})->status, 200);
  auto dup = post("/api/response", {{"trial_id", id}, {"slider_index", 3}});
  EXPECT_EQ(dup->status, 409);
  EXPECT_EQ(error_of(dup), "duplicate");
}

TEST_F(Served, LateResponseIsGone) {
  start(test::small_config(), no_render());
  const auto pid = session();
  const auto trial = json::parse(client->Get("/api/trial?participant=" + pid)->body);
  advance(experiment->config().assignment_timeout_s + 1);
  auto r = post("/api/response", {{"trial_id", trial.at("trial_id")}, {"slider_index", 3}});
  EXPECT_EQ(r->status, 410);
  EXPECT_EQ(error_of(r), "expired");
}

TEST_F(Served, NoOpenSlotGives204) {
  auto config = test::small_config();
  config.n_chains = 9;
  start(config, no_render());
  // One participant can hold one trial per chain iteration; after answering
  // all nine chains at iteration 0 nothing is left for them.
  const auto pid = session();
  for (int i = 0; i < 9; ++i) {
    const auto trial = json::parse(client->Get("/api/trial?participant=" + pid)->body);
    post("/api/response", {{"trial_id", trial.at("trial_id")}, {"slider_index", 1}});
  }
  EXPECT_EQ(client->Get("/api/trial?participant=" + pid)->status, 204);
}

TEST_F(Served, AdminTerminateThenRatingFlow) {
  start(test::small_config(2, 3), no_render());
  EXPECT_EQ(client->Get("/api/rating-trial?participant=" + session())->status, 409);
  fill_chains(3);
  auto t = post("/api/admin/terminate", json::object());
  ASSERT_EQ(t->status, 200);
  const auto body = json::parse(t->body);
  EXPECT_EQ(body.at("full_chains"), 9);
  EXPECT_EQ(body.at("reason"), "all-complete");

  const auto rater = session();
  auto r = client->Get("/api/rating-trial?participant=" + rater);
  ASSERT_EQ(r->status, 200);
  const auto offer = json::parse(r->body);
  EXPECT_EQ(offer.at("scale"), 4);
  auto wav = client->Get(offer.at("stimulus_url").get<std::string>());
  EXPECT_EQ(wav->status, 200);
  EXPECT_EQ(post("/api/rating", {{"rating_id", offer.at("rating_id")}, {"rating", 0}})->status, 400);
  EXPECT_EQ(post("/api/rating", {{"rating_id", offer.at("rating_id")}, {"rating", 4}})->status, 200);
  EXPECT_EQ(post("/api/rating", {{"rating_id", offer.at("rating_id")}, {"rating", 4}})->status, 409);
  EXPECT_EQ(client->Get("/api/trial?participant=" + rater)->status, 410);
}

TEST_F(Served, AdminTerminateMidRun) {
  start(test::small_config(), no_render());
  auto t = post("/api/admin/terminate", json::object());
  ASSERT_EQ(t->status, 200);
  EXPECT_EQ(json::parse(t->body).at("reason"), "admin");
  EXPECT_EQ(json::parse(t->body).at("full_chains"), 0);
  // No full chains means nothing to validate.
  auto r = client->Get("/api/rating-trial?participant=" + session());
  EXPECT_EQ(r->status, 409);
  EXPECT_EQ(error_of(r), "empty-experiment");
}

TEST_F(Served, ExportMatchesTheExperimentLog) {
  start(test::small_config(), no_render());
  session();
  auto r = client->Get("/api/admin/export");
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(r->body, experiment->export_log());
  EXPECT_EQ(format_log(parse_log(r->body)), r->body);
}
