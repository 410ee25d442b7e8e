#include <gtest/gtest.h>

#include <httplib.h>

#include <atomic>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "gsp/analysis/features.hpp"
#include "gsp/render/cache.hpp"
#include "gsp/render/digest.hpp"
#include "gsp/render/external.hpp"
#include "gsp/render/renderer.hpp"
#include "gsp/sampler.hpp"
#include "support.hpp"

using namespace gsp;
using namespace gsp::render;

namespace {

const SliderGrid kGrid = make_slider_grid(-0.24, 0.38, 32);
const SentenceRef kSentence{"S1", "The birch canoe slid on the smooth planks."};

LatentPoint origin() { return origin_point(kGrid, 10); }

BuiltinRenderer builtin() { return BuiltinRenderer(ProsodyMap::shipped(), kGrid); }

/// Synthesizes directly from parameters with a fixed noise seed.
AudioBuffer synth(const ProsodyParams& p) { return synthesize(p, score_sentence(kSentence), 42); }

/// Renderer that fails for chosen slider indices of dimension 0.
class FlakyRenderer final : public Renderer {
 public:
  std::set<int> always_fail;
  std::set<int> fail_once;
  std::atomic<int> calls{0};

  std::string backend_key() const override { return "flaky"; }
  int dimensions() const override { return 10; }
  const SliderGrid& grid() const override { return kGrid; }
  RenderOutput render(const LatentPoint& p, const SentenceRef&) override {
    ++calls;
    const int k = p.indices[0];
    if (always_fail.contains(k)) throw Error(Errc::render_backend, "boom");
    if (fail_once.erase(k)) throw Error(Errc::render_backend, "transient");
    AudioBuffer a;
    a.samples.assign(100, 0.01 * k);
    return {a, {static_cast<double>(k)}};
  }
};

ChainState chain_at_origin() {
  ExperimentConfig c;
  c.n_chains = 9;
  return init_experiment(c, gsp::test::t0()).chains[0];
}

}  // namespace

TEST(Digest, KnownSha256) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(digest_seed("abc"), digest_seed("abc"));
  EXPECT_NE(digest_seed("abc"), digest_seed("abd"));
}

TEST(ProsodyMap, ZeroWeightsGiveBaseline) {
  const auto& m = ProsodyMap::shipped();
  EXPECT_EQ(m.dimensions(), 10);
  const auto p = m.apply(std::vector<double>(10, 0.0));
  EXPECT_EQ(p, m.baseline());
  EXPECT_EQ(p.f0_mean, 180.0);
  EXPECT_EQ(p.f0_slope, 0.0);
  EXPECT_EQ(p.rate, 1.0);
  EXPECT_EQ(p.jitter_depth, 0.0);
  EXPECT_EQ(p.shimmer_depth, 0.0);
  EXPECT_EQ(p.vibrato_depth, 0.0);
}

TEST(ProsodyMap, ChangesFollowTheColumn) {
  const auto& m = ProsodyMap::shipped();
  for (int d = 0; d < 10; ++d) {
    LatentPoint a = origin();
    LatentPoint b = origin();
    a.indices[static_cast<std::size_t>(d)] = 14;
    b.indices[static_cast<std::size_t>(d)] = 17;
    const auto pa = map_latent_to_prosody(m, a, kGrid).to_array();
    const auto pb = map_latent_to_prosody(m, b, kGrid).to_array();
    for (std::size_t r = 0; r < ProsodyParams::kCount; ++r) {
      if (m.coefficient(r, d) == 0.0) {
        EXPECT_EQ(pa[r], pb[r]) << d << " " << r;
      } else {
        EXPECT_NE(pa[r], pb[r]) << d << " " << r;
      }
    }
  }
}

TEST(ProsodyMap, StrongestF0DimensionRaisesPitch) {
  const auto& m = ProsodyMap::shipped();
  const int d = m.strongest_f0_dimension();
  for (int k = 0; k < 10; ++k) EXPECT_LE(m.coefficient(0, k), m.coefficient(0, d));
  LatentPoint p = origin();
  p.indices[static_cast<std::size_t>(d)] = 31;
  EXPECT_GT(map_latent_to_prosody(m, p, kGrid).f0_mean, m.baseline().f0_mean);
}

TEST(ProsodyMap, ShapeAndClamp) {
  EXPECT_THROW(ProsodyMap::shipped().apply(std::vector<double>(9, 0.0)), Error);
  ProsodyParams wild;
  wild.f0_mean = 5000;
  wild.rate = 0.1;
  wild.jitter_depth = -1;
  const auto c = clamp(wild);
  EXPECT_EQ(c.f0_mean, 600.0);
  EXPECT_EQ(c.rate, 0.5);
  EXPECT_EQ(c.jitter_depth, 0.0);
}

TEST(ProsodyMap, ChecksumIsDigestOfText) {
  const std::string text = R"({"version": "t1",
    "baseline": [180, 0, 1, 0, 0, 0, 5, 0],
    "matrix": [[100], [0], [0], [0], [0], [0], [0], [0]]})";
  const auto m = ProsodyMap::parse(text);
  EXPECT_EQ(m.checksum(), sha256_hex(text));
  EXPECT_EQ(m.version(), "t1");
  EXPECT_EQ(m.dimensions(), 1);
  EXPECT_NEAR(m.apply(std::vector<double>{0.1}).f0_mean, 190.0, 1e-12);
}

TEST(Sentence, ScoreAndValidation) {
  const auto s = score_sentence(kSentence);
  EXPECT_GE(s.syllables.size(), 8u);
  for (const auto& syl : s.syllables) EXPECT_GT(syl.base_duration, 0.0);
  EXPECT_THROW(score_sentence({"x", "tsk psst"}), Error);
}

TEST(Synth, DeterministicAndValid) {
  auto r = builtin();
  const auto a = r.render(origin(), kSentence);
  const auto b = r.render(origin(), kSentence);
  EXPECT_EQ(a.audio, b.audio);
  EXPECT_EQ(encode_wav(a.audio), encode_wav(b.audio));
  EXPECT_TRUE(a.audio.valid());
  EXPECT_EQ(a.audio.sample_rate, 22050);
  EXPECT_LE(a.audio.peak(), 1.0);
}

TEST(Synth, NoiselessParamsMeasureClean) {
  ProsodyParams p;
  const auto f = analysis::extract_features(synth(p));
  ASSERT_TRUE(f.jitter_ddp && f.shimmer_local);
  EXPECT_LT(*f.jitter_ddp, 0.005);
  EXPECT_LT(*f.shimmer_local, 0.01);
}

TEST(Synth, RateHalvesDuration) {
  ProsodyParams slow;
  ProsodyParams fast;
  fast.rate = 2.0;
  const double a = analysis::trimmed_duration(synth(slow));
  const double b = analysis::trimmed_duration(synth(fast));
  EXPECT_NEAR(b / a, 0.5, 0.02);
}

TEST(Synth, JitterAndShimmerGrowWithDepth) {
  ProsodyParams p;
  p.jitter_depth = 0.01;
  p.shimmer_depth = 0.08;
  const auto noisy = analysis::extract_features(synth(p));
  const auto clean = analysis::extract_features(synth(ProsodyParams{}));
  EXPECT_GT(*noisy.jitter_ddp, 2 * *clean.jitter_ddp);
  EXPECT_GT(*noisy.shimmer_local, 2 * *clean.shimmer_local);
}

TEST(Synth, NoClippingAtCorners) {
  auto r = builtin();
  for (int d = 0; d < 10; ++d) {
    for (int hi : {0, 1}) {
      LatentPoint p;
      for (int k = 0; k < 10; ++k) p.indices.push_back((k == d) == (hi == 1) ? 31 : 0);
      const auto out = r.render(p, kSentence);
      EXPECT_TRUE(out.audio.valid());
      EXPECT_LE(out.audio.peak(), 1.0);
    }
  }
}

TEST(Wav, RoundTrip) {
  AudioBuffer a;
  for (int i = 0; i < 1000; ++i) a.samples.push_back(std::sin(i * 0.05) * 0.9);
  const auto bytes = encode_wav(a);
  EXPECT_EQ(bytes.size(), 44u + 2000u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "RIFF");
  const auto back = decode_wav(bytes);
  EXPECT_EQ(back, quantize16(a));
  for (std::size_t i = 0; i < a.samples.size(); ++i) EXPECT_NEAR(back.samples[i], a.samples[i], 1.0 / 32767);
  EXPECT_THROW(decode_wav(std::vector<std::uint8_t>{1, 2, 3}), Error);
}

TEST(Renderer, StimulusIdsAreContentAddressed) {
  auto r = builtin();
  std::set<std::string> ids;
  for (int k = 0; k < 32; ++k) {
    LatentPoint p = origin();
    p.indices[0] = k;
    ids.insert(r.stimulus_id(p, kSentence));
  }
  EXPECT_EQ(ids.size(), 32u);
  EXPECT_EQ(r.stimulus_id(origin(), kSentence).size(), 32u);
  EXPECT_NE(r.stimulus_id(origin(), kSentence), r.stimulus_id(origin(), {"S2", kSentence.text}));
}

TEST(Renderer, WeightsOnGridMatchPointRender) {
  auto r = builtin();
  const auto a = r.render_weights(std::vector<double>(10, 0.0), kSentence);
  const auto b = r.render(origin(), kSentence);
  EXPECT_EQ(a.audio, b.audio);
  std::vector<double> off(10, 0.0);
  off[0] = 0.011;
  EXPECT_NE(r.render_weights(off, kSentence).audio, b.audio);
}

TEST(Renderer, MakeRendererChecksDimensions) {
  ExperimentConfig c;
  c.dimensions = 4;
  try {
    make_renderer(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::shape);
  }
}

TEST(SliderBatch, OriginBatchContainsInitialStimulus) {
  auto r = builtin();
  StimulusStore store(r);
  const auto chain = chain_at_origin();
  const auto ids = render_slider_batch(chain, kGrid, kSentence, store);
  ASSERT_EQ(ids.size(), 32u);
  EXPECT_EQ(std::set<std::string>(ids.begin(), ids.end()).size(), 32u);
  EXPECT_EQ(ids[12], r.stimulus_id(origin(), kSentence));
  EXPECT_EQ(store.renders(), 32u);
  EXPECT_EQ(render_slider_batch(chain, kGrid, kSentence, store), ids);
  EXPECT_EQ(store.renders(), 32u);
  const auto wav = store.wav(ids[12]);
  ASSERT_TRUE(wav);
  EXPECT_EQ(decode_wav(*wav), quantize16(r.render(origin(), kSentence).audio));
}

TEST(SliderBatch, TransientFailureIsRetried) {
  FlakyRenderer r;
  r.fail_once = {3, 7};
  StimulusStore store(r);
  EXPECT_EQ(render_slider_batch(chain_at_origin(), kGrid, kSentence, store).size(), 32u);
}

TEST(SliderBatch, PersistentFailureNamesIndices) {
  FlakyRenderer r;
  r.always_fail = {5, 30};
  StimulusStore store(r);
  try {
    render_slider_batch(chain_at_origin(), kGrid, kSentence, store);
    FAIL();
  } catch (const BatchError& e) {
    EXPECT_EQ(e.failed_indices(), (std::vector<int>{5, 30}));
  }
}

TEST(Cache, ConcurrentEnsureRendersOnce) {
  FlakyRenderer r;
  StimulusStore store(r);
  std::vector<std::thread> threads;
  std::vector<std::string> ids(8);
  for (std::size_t t = 0; t < ids.size(); ++t) {
    threads.emplace_back([&, t] { ids[t] = store.ensure(origin(), kSentence); });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(std::set<std::string>(ids.begin(), ids.end()).size(), 1u);
  EXPECT_EQ(r.calls.load(), 1);
  EXPECT_EQ(store.renders(), 1u);
}

TEST(Cache, DiskAndDiscardRetention) {
  const auto dir = gsp::test::scratch_dir("cache");
  auto r = builtin();
  StimulusStore disk(r, Retention::disk, dir);
  const auto id = disk.ensure(origin(), kSentence);
  EXPECT_TRUE(std::filesystem::exists(dir / (id + ".wav")));
  StimulusStore discard(r, Retention::discard);
  const auto id2 = discard.ensure(origin(), kSentence);
  EXPECT_EQ(id, id2);
  EXPECT_EQ(discard.embedding(id2)->size(), ProsodyParams::kCount);
  EXPECT_EQ(*discard.wav(id2), *disk.wav(id));
  EXPECT_FALSE(discard.wav("0123"));
}

TEST(Cache, ReservedIdsRenderLazily) {
  FlakyRenderer r;
  StimulusStore store(r);
  const auto id = store.reserve(origin(), kSentence);
  EXPECT_TRUE(store.contains(id));
  EXPECT_EQ(r.calls.load(), 0);
  EXPECT_TRUE(store.audio(id));
  EXPECT_EQ(r.calls.load(), 1);
}

namespace {

/// In-process stand-in for a neural renderer.
class FakeService {
 public:
  std::atomic<int> busy_replies{0};
  std::atomic<int> requests{0};
  std::string mode = "ok";
  nlohmann::json last_body;

  FakeService() {
    server_.Post("/render", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests;
      last_body = nlohmann::json::parse(req.body);
      if (busy_replies > 0) {
        --busy_replies;
        res.status = 503;
        return;
      }
      if (mode == "bad") {
        res.status = 400;
        return;
      }
      if (mode == "text") {
        res.set_content("not audio", "text/plain");
        return;
      }
      AudioBuffer a;
      a.samples.assign(mode == "short" ? 10 : 2205, 0.0);
      const auto wav = encode_wav(a);
      res.set_header("X-Style-Embedding", "0.5,-1.25,3");
      res.set_content(std::string(wav.begin(), wav.end()), "audio/wav");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeService() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

ExternalRenderer client(const FakeService& s) {
  ExternalOptions o;
  o.timeout_s = 5;
  o.retry_delay_s = 0.05;
  return ExternalRenderer(s.url(), kGrid, 10, o);
}

}  // namespace

TEST(External, WireFormatAndCache) {
  FakeService s;
  auto r = client(s);
  const std::vector<double> w(10, 0.1);
  const auto out = r.render_weights(w, "hello there");
  EXPECT_EQ(out.audio.samples.size(), 2205u);
  EXPECT_EQ(out.style_embedding, (std::vector<double>{0.5, -1.25, 3.0}));
  EXPECT_EQ(s.last_body.at("text"), "hello there");
  EXPECT_EQ(s.last_body.at("sample_rate"), 22050);
  EXPECT_EQ(s.last_body.at("weights").size(), 10u);
  r.render_weights(w, "hello there");
  EXPECT_EQ(r.requests_sent(), 1u);
  EXPECT_EQ(s.requests.load(), 1);
}

TEST(External, WrongLengthRejectedLocally) {
  FakeService s;
  auto r = client(s);
  try {
    r.render_weights(std::vector<double>(9, 0.0), "x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::shape);
  }
  EXPECT_EQ(r.requests_sent(), 0u);
}

TEST(External, ShortSilentClipAccepted) {
  FakeService s;
  s.mode = "short";
  auto r = client(s);
  EXPECT_EQ(r.render_weights(std::vector<double>(10, 0.0), "x").audio.samples.size(), 10u);
}

TEST(External, BusyIsRetriedOnce) {
  FakeService s;
  s.busy_replies = 1;
  auto r = client(s);
  EXPECT_NO_THROW(r.render_weights(std::vector<double>(10, 0.0), "x"));
  EXPECT_EQ(r.requests_sent(), 2u);
  s.busy_replies = 2;
  try {
    r.render_weights(std::vector<double>(10, 0.02), "x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::render_backend);
  }
  EXPECT_EQ(r.requests_sent(), 4u);
}

TEST(External, BadStatusAndPayload) {
  FakeService s;
  auto r = client(s);
  for (const char* mode : {"bad", "text"}) {
    s.mode = mode;
    try {
      r.render_weights(std::vector<double>(10, mode[0] == 'b' ? 0.1 : 0.2), "x");
      FAIL() << mode;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::render_backend);
    }
  }
}

TEST(External, UnreachableServiceIsBackendError) {
  ExternalOptions o;
  o.timeout_s = 1;
  ExternalRenderer r("http://127.0.0.1:1", kGrid, 10, o);
  EXPECT_THROW(r.render(origin(), kSentence), Error);
}

TEST(External, PointRenderSendsGridWeights) {
  FakeService s;
  auto r = client(s);
  LatentPoint p = origin();
  p.indices[3] = 31;
  r.render(p, kSentence);
  EXPECT_EQ(s.last_body.at("weights")[3].get<double>(), 0.38);
  EXPECT_EQ(s.last_body.at("weights")[0].get<double>(), 0.0);
  EXPECT_EQ(s.last_body.at("text"), kSentence.text);
}
