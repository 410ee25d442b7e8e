#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "gsp/error.hpp"
#include "gsp/events.hpp"
#include "gsp/service/event_log.hpp"
#include "gsp/service/experiment.hpp"
#include "gsp/service/ratings.hpp"
#include "support.hpp"

using namespace gsp;
using namespace gsp::service;
using gsp::test::at;
using gsp::test::small_config;

namespace {

ExperimentOptions quiet() {
  ExperimentOptions o;
  o.render_on_assign = false;
  return o;
}

/// Three participants answer round-robin until nothing is offered.
/// Answers follow a fixed pattern so the run is reproducible.
void drive(Experiment& x, double& clock, int max_rounds = 1000) {
  std::vector<std::string> people;
  for (int i = 0; i < 3; ++i) people.push_back(x.register_participant(true, at(clock)));
  for (int round = 0; round < max_rounds; ++round) {
    bool any = false;
    for (std::size_t i = 0; i < people.size(); ++i) {
      clock += 1.0;
      if (x.poll(at(clock)).terminated) return;
      auto offer = x.request_trial(people[i], at(clock));
      if (!offer) continue;
      any = true;
      const int pick = (offer->assignment.chain_id * 7 + offer->assignment.iteration * 3 + static_cast<int>(i) * 5) % 32;
      x.submit_response(offer->assignment.trial_id, pick, at(clock + 0.5));
    }
    if (!any) break;
  }
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string line; std::getline(ss, line);) out.push_back(line);
  return out;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

template <class F>
std::uint64_t corrupt_seq(F&& f) {
  try {
    f();
  } catch (const CorruptLogError& e) {
    return e.seq();
  }
  return 0;
}

}  // namespace

TEST(EventLogCodec, LineRoundTripsAndCarriesChecksumFooter) {
  const Event e{7, at(3), ResponseRecorded{"t00000003", 17}};
  const std::string line = encode_line(e);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  EXPECT_NE(line.find("\"crc32\":\""), std::string::npos);
  const Event back = decode_line(line, 7);
  EXPECT_EQ(encode_line(back), line);
  EXPECT_EQ(back.seq, 7u);
  EXPECT_EQ(back.at, e.at);
  EXPECT_EQ(std::get<ResponseRecorded>(back.payload).slider_index, 17);
}

TEST(EventLogCodec, SingleFlippedDigitIsRejectedWithItsSequence) {
  std::string line = encode_line(Event{4, at(1), ResponseRecorded{"t00000001", 17}});
  const auto pos = line.find("17");
  ASSERT_NE(pos, std::string::npos);
  line[pos] = '2';
  EXPECT_EQ(corrupt_seq([&] { decode_line(line, 4); }), 4u);
}

TEST(EventLogCodec, MissingFooterAndGarbageAreCorrupt) {
  EXPECT_EQ(corrupt_seq([] { decode_line(R"({"seq":1,"type":"ResponseRecorded"})", 1); }), 1u);
  EXPECT_EQ(corrupt_seq([] { decode_line("not json at all", 9); }), 9u);
  EXPECT_EQ(corrupt_seq([] { decode_line("", 2); }), 2u);
}

TEST(EventLogCodec, SequenceGapNamesTheExpectedSeq) {
  Experiment x(small_config(), at(0), quiet());
  x.register_participant(true, at(1));
  x.register_participant(true, at(2));
  auto lines = lines_of(x.export_log());
  ASSERT_EQ(lines.size(), 3u);
  lines.erase(lines.begin() + 1);
  EXPECT_EQ(corrupt_seq([&] { parse_log(join_lines(lines)); }), 2u);
}

TEST(EventLogCodec, FormatParseRoundTripIsByteExact) {
  Experiment x(small_config(), at(0), quiet());
  double clock = 1;
  drive(x, clock, 5);
  const std::string text = x.export_log();
  const auto events = parse_log(text);
  EXPECT_EQ(events.size(), x.events().size());
  EXPECT_EQ(format_log(events), text);
}

TEST(EventLogFile, AppendsAreVisibleToReadLog) {
  const auto dir = gsp::test::scratch_dir("eventlog-file");
  const auto path = dir / "events.log";
  Experiment x(small_config(), at(0), quiet());
  x.register_participant(true, at(1));
  {
    EventLog log(path);
    for (const auto& e : x.events()) log.append(e);
  }
  EXPECT_EQ(read_file(path), x.export_log());
  EXPECT_EQ(format_log(read_log(path)), x.export_log());
}

TEST(Snapshot, RoundTripsAndRejectsDamage) {
  const auto dir = gsp::test::scratch_dir("snapshot");
  Experiment x(small_config(), at(0), quiet());
  double clock = 1;
  drive(x, clock, 4);
  const auto state = x.state();
  const auto path = dir / "s.snapshot";
  write_snapshot(path, state);
  const auto snap = read_snapshot(path);
  ASSERT_TRUE(snap);
  EXPECT_EQ(snap->seq, state.last_seq);
  EXPECT_EQ(to_json(snap->state).dump(), to_json(state).dump());

  std::string text = read_file(path);
  const std::string key = "iteration\\\":";
  const auto pos = text.find(key);
  ASSERT_NE(pos, std::string::npos);
  char& digit = text[pos + key.size()];
  digit = digit == '1' ? '2' : '1';
  write_file(path, text);
  EXPECT_FALSE(read_snapshot(path));
  EXPECT_FALSE(read_snapshot(dir / "missing.snapshot"));
}

TEST(Snapshot, ReplayFromSnapshotMatchesFullReplay) {
  Experiment x(small_config(), at(0), quiet());
  double clock = 1;
  drive(x, clock, 6);
  const auto events = x.events();
  ASSERT_GT(events.size(), 20u);
  const std::vector<Event> prefix(events.begin(), events.begin() + 20);
  const Snapshot snap{20, replay(prefix)};
  const auto full = replay(events);
  EXPECT_EQ(to_json(replay_with_snapshot(events, snap)).dump(), to_json(full).dump());
  // A snapshot that does not describe a prefix is ignored.
  Snapshot stale = snap;
  stale.seq = events.size() + 5;
  EXPECT_EQ(to_json(replay_with_snapshot(events, stale)).dump(), to_json(full).dump());
  EXPECT_EQ(to_json(replay_with_snapshot(events, std::nullopt)).dump(), to_json(full).dump());
}

TEST(Experiment, LiveStateEqualsReplayOfItsLog) {
  Experiment x(small_config(), at(0), quiet());
  double clock = 1;
  drive(x, clock);
  const auto live = x.state();
  EXPECT_EQ(live.full_chains(), 9);
  EXPECT_TRUE(live.terminated());
  EXPECT_EQ(to_json(replay(parse_log(x.export_log()))).dump(), to_json(live).dump());
}

TEST(Experiment, EveryLogPrefixReplaysToAValidState) {
  Experiment x(small_config(3, 3), at(0), quiet());
  double clock = 1;
  drive(x, clock);
  const auto events = x.events();
  for (std::size_t n = 1; n <= events.size(); ++n) {
    const std::vector<Event> prefix(events.begin(), events.begin() + static_cast<std::ptrdiff_t>(n));
    const auto s = replay(prefix);
    EXPECT_EQ(s.last_seq, n);
    for (const auto& c : s.chains) {
      EXPECT_EQ(c.history.size(), static_cast<std::size_t>(c.iteration) + 1);
      EXPECT_LE(static_cast<int>(c.responses.size()), c.spec.participants_per_iteration);
    }
  }
}

TEST(Experiment, IdenticalCommandsGiveIdenticalLogs) {
  Experiment a(small_config(), at(0), quiet());
  Experiment b(small_config(), at(0), quiet());
  double ca = 1, cb = 1;
  drive(a, ca);
  drive(b, cb);
  EXPECT_EQ(a.export_log(), b.export_log());
}

TEST(Experiment, ConstructorRefusesAnExistingLog) {
  const auto dir = gsp::test::scratch_dir("refuse");
  ExperimentOptions o = quiet();
  o.log_path = dir / "events.log";
  { Experiment x(small_config(), at(0), o); }
  try {
    Experiment again(small_config(), at(0), o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::io);
  }
}

TEST(Experiment, OpenResumesWhereTheRunStopped) {
  const auto dir = gsp::test::scratch_dir("resume");
  ExperimentOptions o = quiet();
  o.log_path = dir / "events.log";
  std::string before;
  {
    Experiment x(small_config(), at(0), o);
    double clock = 1;
    drive(x, clock, 7);
    before = to_json(x.state()).dump();
  }
  auto x = Experiment::open(dir / "events.log", at(500), quiet());
  EXPECT_EQ(to_json(x->state()).dump(), before);
  double clock = 500;
  drive(*x, clock);
  EXPECT_EQ(x->state().full_chains(), 9);
  EXPECT_EQ(format_log(read_log(dir / "events.log")), x->export_log());
}

TEST(Experiment, OpenFinishesACommandCutShortAfterAggregation) {
  Experiment x(small_config(), at(0), quiet());
  double clock = 1;
  drive(x, clock, 3);
  auto events = x.events();
  std::size_t cut = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (std::holds_alternative<IterationAggregated>(events[i].payload)) cut = i + 1;
  }
  ASSERT_GT(cut, 0u);
  ASSERT_TRUE(std::holds_alternative<ChainAdvanced>(events[cut].payload));
  const auto expected_advance = std::get<ChainAdvanced>(events[cut].payload);
  events.resize(cut);

  const auto dir = gsp::test::scratch_dir("followups");
  write_file(dir / "events.log", format_log(events));
  auto resumed = Experiment::open(dir / "events.log", at(900), quiet());
  const auto tail = resumed->events();
  ASSERT_EQ(tail.size(), cut + 1);
  const auto& adv = std::get<ChainAdvanced>(tail.back().payload);
  EXPECT_EQ(adv.chain_id, expected_advance.chain_id);
  EXPECT_EQ(adv.iteration, expected_advance.iteration);
  EXPECT_EQ(adv.index, expected_advance.index);
  EXPECT_EQ(read_log(dir / "events.log").size(), cut + 1);
  EXPECT_FALSE(resumed->state().chain(adv.chain_id).aggregated_index);
}

TEST(Experiment, OpenRejectsACorruptLine) {
  const auto dir = gsp::test::scratch_dir("corrupt");
  Experiment x(small_config(), at(0), quiet());
  double clock = 1;
  drive(x, clock, 2);
  auto lines = lines_of(x.export_log());
  ASSERT_GT(lines.size(), 6u);
  lines[5] = lines[5].substr(0, lines[5].size() / 2);
  write_file(dir / "events.log", join_lines(lines));
  try {
    Experiment::open(dir / "events.log", at(100), quiet());
    FAIL();
  } catch (const CorruptLogError& e) {
    EXPECT_EQ(e.seq(), 6u);
  }
}

TEST(Experiment, OpenRejectsADifferentProsodyMapping) {
  Experiment x(small_config(), at(0), quiet());
  auto events = x.events();
  std::get<ExperimentInitialized>(events.front().payload).mapping_checksum = std::string(64, '0');
  const auto dir = gsp::test::scratch_dir("mapping");
  write_file(dir / "events.log", format_log(events));
  try {
    Experiment::open(dir / "events.log", at(1), quiet());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::config);
  }
}

TEST(Experiment, SnapshotsAreWrittenAndUsedOnOpen) {
  const auto dir = gsp::test::scratch_dir("snapshots-live");
  auto config = small_config();
  config.snapshot_interval = 10;
  ExperimentOptions o = quiet();
  o.log_path = dir / "events.log";
  std::string live;
  {
    Experiment x(config, at(0), o);
    double clock = 1;
    drive(x, clock);
    live = to_json(x.state()).dump();
  }
  const auto snap = read_snapshot(snapshot_path(dir / "events.log"));
  ASSERT_TRUE(snap);
  EXPECT_EQ(snap->seq % 10, 0u);
  EXPECT_EQ(to_json(Experiment::open(dir / "events.log", at(1e4), quiet())->state()).dump(), live);
}

TEST(Experiment, TrialOfferCoversTheWholeSlider) {
  ExperimentOptions o;
  o.discard_audio = true;
  Experiment x(small_config(), at(0), o);
  const auto pid = x.register_participant(true, at(1));
  const auto offer = x.request_trial(pid, at(2));
  ASSERT_TRUE(offer);
  ASSERT_EQ(offer->stimulus_ids.size(), 32u);
  EXPECT_EQ(std::set<std::string>(offer->stimulus_ids.begin(), offer->stimulus_ids.end()).size(), 32u);
  EXPECT_EQ(offer->point.dimensions(), 10u);
  // The same participant asking again gets the same trial back.
  EXPECT_EQ(x.request_trial(pid, at(3))->assignment.trial_id, offer->assignment.trial_id);
}

TEST(Experiment, UnscreenedParticipantsAreRefused) {
  Experiment x(small_config(), at(0), quiet());
  const auto pid = x.register_participant(false, at(1));
  try {
    x.request_trial(pid, at(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::auth);
  }
}

TEST(Experiment, DeadlineTerminatesOnPoll) {
  auto config = small_config();
  config.duration_hours = 1.0;
  Experiment x(config, at(0), quiet());
  EXPECT_FALSE(x.poll(at(3599)).terminated);
  const auto t = x.poll(at(3600));
  EXPECT_TRUE(t.terminated);
  EXPECT_EQ(t.reason, TerminationReason::deadline);
  EXPECT_TRUE(std::holds_alternative<ExperimentTerminated>(x.events().back().payload));
  const auto pid = x.register_participant(true, at(3601));
  try {
    x.request_trial(pid, at(3602));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::experiment_closed);
  }
}

namespace {

/// A terminated run with its validation set built: 9 chains, 4 iterations,
/// 3 random and 4 transfer sentences.
std::unique_ptr<Experiment> validated(int rating_target) {
  auto config = small_config();
  config.rating_target = rating_target;
  auto x = std::make_unique<Experiment>(config, at(0), quiet());
  double clock = 1;
  drive(*x, clock);
  x->build_validation(at(clock + 1));
  return x;
}

}  // namespace

TEST(Validation, SetIsBuiltOnceWithTheExpectedComposition) {
  auto x = validated(2);
  const auto items = x->build_validation(at(1e4));
  std::map<StimulusKind, int> kinds;
  for (const auto& i : items) kinds[i.kind]++;
  EXPECT_EQ(kinds[StimulusKind::trajectory], 9 * 5);
  EXPECT_EQ(kinds[StimulusKind::random], 3);
  EXPECT_EQ(kinds[StimulusKind::transfer], 9 * static_cast<int>(x->config().novel_sentences.size()));
  const auto n = x->events().size();
  x->build_validation(at(2e4));
  EXPECT_EQ(x->events().size(), n);
}

TEST(Ratings, PhaseErrorBeforeValidation) {
  Experiment x(small_config(), at(0), quiet());
  const auto pid = x.register_participant(true, at(1));
  try {
    x.request_rating(pid, at(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::phase);
  }
}

TEST(Ratings, EveryPairReachesTheTargetAndNoMore) {
  const int target = 3;
  auto x = validated(target);
  const auto n_items = x->state().validation->items.size();
  std::vector<std::string> raters;
  for (int i = 0; i < 6; ++i) raters.push_back(x->register_participant(true, at(2e4)));
  double clock = 2e4;
  for (bool any = true; any;) {
    any = false;
    for (const auto& r : raters) {
      clock += 1;
      auto offer = x->request_rating(r, at(clock));
      if (!offer) continue;
      any = true;
      x->submit_rating(offer->assignment.rating_id, 1 + static_cast<int>(clock) % 4, at(clock));
    }
  }
  const auto s = x->state();
  EXPECT_TRUE(ratings_complete(s));
  EXPECT_EQ(s.validation->ratings.size(), n_items * 3 * target);
  for (const auto& p : s.validation->pairs) EXPECT_EQ(p.collected, target);
  // Nobody rates the same (item, emotion) pair twice.
  std::set<std::tuple<std::string, std::string, Emotion>> seen;
  for (const auto& [id, r] : s.validation->ratings) {
    EXPECT_TRUE(seen.insert({r.participant_id, r.item_id, r.probed_emotion}).second);
  }
  EXPECT_FALSE(x->request_rating(raters.front(), at(clock + 1)));
}

TEST(Ratings, FirstOfferIsAnUnratedPair) {
  auto x = validated(2);
  const auto pid = x->register_participant(true, at(2e4));
  const auto offer = next_rating_trial(x->state(), pid, at(2e4));
  ASSERT_TRUE(offer);
  const auto state = x->state();
  const auto& v = *state.validation;
  const auto pair = v.item_index.at(offer->item_id) * 3 +
                    static_cast<std::size_t>(std::find(x->config().emotions.begin(), x->config().emotions.end(),
                                                       offer->probed_emotion) -
                                             x->config().emotions.begin());
  EXPECT_EQ(v.pairs[pair].collected, 0);
}

TEST(Ratings, SubmissionErrors) {
  auto x = validated(2);
  const auto pid = x->register_participant(true, at(2e4));
  const auto offer = x->request_rating(pid, at(2e4 + 1));
  ASSERT_TRUE(offer);
  const auto& id = offer->assignment.rating_id;
  auto code_of = [&](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::io;
  };
  EXPECT_EQ(code_of([&] { x->submit_rating(id, 0, at(2e4 + 2)); }), Errc::range);
  EXPECT_EQ(code_of([&] { x->submit_rating(id, 5, at(2e4 + 2)); }), Errc::range);
  EXPECT_EQ(code_of([&] { x->submit_rating("r99999999", 2, at(2e4 + 2)); }), Errc::not_found);
  EXPECT_EQ(code_of([&] { x->submit_rating(id, 2, at(2e4 + 1e4)); }), Errc::expired);
  x->submit_rating(id, 2, at(2e4 + 3));
  EXPECT_EQ(code_of([&] { x->submit_rating(id, 3, at(2e4 + 4)); }), Errc::duplicate);
  EXPECT_EQ(code_of([&] { x->request_rating("nobody", at(2e4 + 5)); }), Errc::auth);
}

TEST(Ratings, ExpiredAssignmentsAreReissued) {
  auto x = validated(1);
  const auto a = x->register_participant(true, at(2e4));
  const auto b = x->register_participant(true, at(2e4));
  const auto first = x->request_rating(a, at(2e4));
  ASSERT_TRUE(first);
  // Participant a never answers. Once the hold expires the pair goes to b.
  const double later = 2e4 + x->config().assignment_timeout_s + 1;
  std::set<std::pair<std::string, Emotion>> offered_to_b;
  for (int i = 0; i < 2000; ++i) {
    auto offer = x->request_rating(b, at(later + i));
    if (!offer) break;
    offered_to_b.insert({offer->assignment.item_id, offer->assignment.probed_emotion});
    x->submit_rating(offer->assignment.rating_id, 2, at(later + i));
  }
  EXPECT_TRUE(offered_to_b.contains({first->assignment.item_id, first->assignment.probed_emotion}));
  EXPECT_TRUE(ratings_complete(x->state()));
}
