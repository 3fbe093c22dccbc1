#include <doctest.h>

#include <httplib.h>

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <thread>

#include "synth_speech.hpp"
#include "vocbench/error.hpp"
#include "vocbench/mos.hpp"
#include "vocbench/mos_server.hpp"

using namespace vocbench;
using namespace vocbench::mos;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected vocbench::Error");
  return ErrorCode::Usage;
}

RatingRecord rating(const std::string& session, const std::string& stimulus, int score) {
  return {session, stimulus, score, std::chrono::system_clock::now()};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Serves a store on an ephemeral port for the lifetime of the object.
struct RunningServer {
  MosServer server;
  std::thread thread;
  int port;
  RunningServer(MosStore& store, ServerOptions options)
      : server(store, std::move(options)), port(server.bind("127.0.0.1", 0)) {
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~RunningServer() {
    server.stop();
    thread.join();
  }
  httplib::Client client() const { return httplib::Client("127.0.0.1", port); }
};

}  // namespace

TEST_CASE("t quantiles") {
  // Table values are printed to four decimals.
  CHECK(std::abs(t_quantile_975(1) - 12.7062) <= 5e-5);
  CHECK(std::abs(t_quantile_975(4) - 2.7764) <= 5e-5);
  CHECK(std::abs(t_quantile_975(30) - 2.0423) <= 5e-5);
  CHECK(std::abs(t_quantile_975(200) - 1.9719) <= 5e-5);
  CHECK(t_quantile_975(201) == 1.96);
}

TEST_CASE("summary statistics by hand") {
  auto s = summarize("a", {4, 4, 4, 4});
  CHECK(s.n == 4);
  CHECK(s.mean == 4.0);
  REQUIRE(s.ci95_half_width.has_value());
  CHECK(*s.ci95_half_width == 0.0);

  s = summarize("a", {3, 5});
  CHECK(s.mean == 4.0);
  CHECK(std::abs(*s.ci95_half_width - 12.7062) <= 1e-3);

  s = summarize("a", {1, 2, 3, 4, 5});
  CHECK(s.mean == 3.0);
  CHECK(std::abs(*s.ci95_half_width - 1.9626) <= 1e-3);

  s = summarize("a", {5});
  CHECK_FALSE(s.ci95_half_width.has_value());
  CHECK(code_of([] { summarize("a", {}); }) == ErrorCode::NoRatings);
}

TEST_CASE("test definitions") {
  fixtures::TempDir dir("mos");
  const auto def = fixtures::write_listening_test(dir.path(), {"gt", "melgan", "wavenet"}, 10);
  const auto stimuli = load_test_definition(def);
  CHECK(stimuli.size() == 30);
  std::set<std::string> ids;
  for (const auto& s : stimuli) {
    ids.insert(s.id);
    CHECK(s.id.size() == 32);
    CHECK(s.id.find(s.system) == std::string::npos);
    CHECK(fs::exists(s.audio_path));
  }
  CHECK(ids.size() == 30);

  fs::remove(dir / "audio/melgan/utt3.wav");
  try {
    load_test_definition(def);
    FAIL("expected MissingAudio");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingAudio);
    CHECK(std::string(e.what()).find("utt3.wav") != std::string::npos);
  }

  std::ofstream(dir / "dup.json") << R"({"name": "d", "systems": [{"name": "gt", "utterances": [
      {"id": "u", "wav": "audio/gt/utt0.wav"}, {"id": "u", "wav": "audio/gt/utt1.wav"}]}]})";
  CHECK(code_of([&] { load_test_definition(dir / "dup.json"); }) == ErrorCode::DuplicateEntry);
}

TEST_CASE("sessions") {
  fixtures::TempDir dir("mos");
  MosStore store(load_test_definition(fixtures::write_listening_test(dir.path(), {"a", "b", "c"}, 10)),
                 dir / "data");
  const auto s1 = store.create_session();
  const auto s2 = store.create_session();
  CHECK(s1.id != s2.id);
  CHECK(s1.playlist.size() == 30);
  CHECK(std::set(s1.playlist.begin(), s1.playlist.end()).size() == 30);
  CHECK(std::set(s1.playlist.begin(), s1.playlist.end()) ==
        std::set(s2.playlist.begin(), s2.playlist.end()));
  CHECK(s1.playlist != s2.playlist);  // 1 / 30! chance of a false failure

  const auto again = store.create_session(s1.id);
  CHECK(again.id == s1.id);
  CHECK(again.playlist == s1.playlist);
  CHECK(code_of([&] { store.create_session("feedface"); }) == ErrorCode::UnknownSession);

  CHECK(code_of([] { MosStore({}, fs::temp_directory_path() / "unused").create_session(); }) ==
        ErrorCode::NoTestLoaded);
}

TEST_CASE("ratings") {
  fixtures::TempDir dir("mos");
  MosStore store(load_test_definition(fixtures::write_listening_test(dir.path(), {"a", "b"}, 3)),
                 dir / "data");
  const auto s = store.create_session();
  store.submit(rating(s.id, s.playlist[0], 5));
  CHECK(store.rating_count() == 1);

  CHECK(code_of([&] { store.submit(rating(s.id, s.playlist[1], 0)); }) == ErrorCode::ScoreOutOfRange);
  CHECK(code_of([&] { store.submit(rating(s.id, s.playlist[1], 6)); }) == ErrorCode::ScoreOutOfRange);
  CHECK(code_of([&] { store.submit(rating("nobody", s.playlist[1], 3)); }) == ErrorCode::UnknownSession);
  CHECK(code_of([&] { store.submit(rating(s.id, "0000", 3)); }) == ErrorCode::UnknownStimulus);

  store.submit(rating(s.id, s.playlist[1], 3));
  store.submit(rating(s.id, s.playlist[1], 4));
  CHECK(store.rating_count() == 2);
  for (const auto& r : store.ratings())
    if (r.stimulus_id == s.playlist[1]) CHECK(r.score == 4);
}

TEST_CASE("summary pools by system and survives a restart") {
  fixtures::TempDir dir("mos");
  const auto def = fixtures::write_listening_test(dir.path(), {"gt", "voc"}, 2);
  std::string session;
  {
    MosStore store(load_test_definition(def), dir / "data");
    CHECK(code_of([&] { store.summary(); }) == ErrorCode::NoRatings);
    const auto s = store.create_session();
    session = s.id;
    for (const auto& id : s.playlist) {
      const auto* st = store.find_stimulus(id);
      REQUIRE(st);
      store.submit(rating(s.id, id, st->system == "gt" ? (st->utterance == "utt0" ? 4 : 5) : 2));
    }
    const auto sum = store.summary();
    REQUIRE(sum.size() == 2);
    CHECK(sum[0].system == "gt");
    CHECK(sum[0].mean == 4.5);
    CHECK(sum[1].mean == 2.0);
    const auto per = store.per_utterance();
    CHECK(per.at({"gt", "utt0"}).mean == 4.0);
    CHECK(per.size() == 4);
  }
  MosStore reopened(load_test_definition(def), dir / "data");
  CHECK(reopened.rating_count() == 4);
  CHECK(reopened.summary()[0].mean == 4.5);
  CHECK(reopened.create_session(session).playlist.size() == 4);

  std::ifstream log(dir / "data" / "ratings.jsonl");
  std::string line;
  REQUIRE(std::getline(log, line));
  const auto j = json::parse(line);
  CHECK(j.contains("session"));
  CHECK(j.contains("stimulus"));
  CHECK(j["score"].is_number_integer());
  CHECK(j["ts"].get<std::string>().back() == 'Z');
}

TEST_CASE("concurrent submissions from distinct sessions are all stored") {
  fixtures::TempDir dir("mos");
  const auto def = fixtures::write_listening_test(dir.path(), {"a"}, 2);
  {
    MosStore store(load_test_definition(def), dir / "data");
    std::vector<Session> sessions;
    for (int i = 0; i < 100; ++i) sessions.push_back(store.create_session());
    std::vector<std::thread> threads;
    for (int i = 0; i < 100; ++i)
      threads.emplace_back([&, i] { store.submit(rating(sessions[i].id, sessions[i].playlist[0], 1 + i % 5)); });
    for (auto& t : threads) t.join();
    CHECK(store.rating_count() == 100);
  }
  MosStore reopened(load_test_definition(def), dir / "data");
  CHECK(reopened.rating_count() == 100);
}

TEST_CASE("strip_wav_metadata keeps only fmt and data") {
  fixtures::TempDir dir("mos");
  fixtures::write_listening_test(dir.path(), {"secretsystem"}, 1);
  const std::string raw = read_file(dir / "audio/secretsystem/utt0.wav");
  REQUIRE(raw.find("secretsystem") != std::string::npos);
  const std::string clean = strip_wav_metadata(raw);
  CHECK(clean.find("secretsystem") == std::string::npos);
  CHECK(clean.find("LIST") == std::string::npos);
  std::ofstream(dir / "clean.wav", std::ios::binary) << clean;
  CHECK(audio::load_wav(dir / "clean.wav").size() == audio::load_wav(dir / "audio/secretsystem/utt0.wav").size());
}

TEST_CASE("HTTP API and blinding") {
  fixtures::TempDir dir("mos");
  fs::create_directories(dir / "ui");
  std::ofstream(dir / "ui/index.html") << "<html>listening test</html>";
  MosStore store(load_test_definition(fixtures::write_listening_test(dir.path(), {"hifigan", "waveglow"}, 3)),
                 dir / "data");
  RunningServer running(store, {"s3cret", dir / "ui"});
  auto cli = running.client();
  std::vector<std::string> rater_bodies;

  auto res = cli.Post("/api/v1/session", "", "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  rater_bodies.push_back(res->body);
  const auto session = json::parse(res->body);
  const auto id = session["session_id"].get<std::string>();
  const auto playlist = session["playlist"].get<std::vector<std::string>>();
  CHECK(playlist.size() == 6);

  res = cli.Post("/api/v1/session", json{{"session_id", id}}.dump(), "application/json");
  REQUIRE(res);
  CHECK(json::parse(res->body)["playlist"] == playlist);

  for (const auto& stim : playlist) {
    auto audio = cli.Get("/api/v1/stimulus/" + stim + "/audio");
    REQUIRE(audio);
    CHECK(audio->status == 200);
    CHECK(audio->get_header_value("Content-Type") == "audio/wav");
    rater_bodies.push_back(audio->body);
    auto ok = cli.Post("/api/v1/rating", json{{"session_id", id}, {"stimulus_id", stim}, {"score", 4}}.dump(),
                       "application/json");
    REQUIRE(ok);
    CHECK(ok->status == 200);
    CHECK(json::parse(ok->body)["ok"] == true);
    rater_bodies.push_back(ok->body);
  }
  CHECK(store.rating_count() == 6);

  auto bad = cli.Post("/api/v1/rating", json{{"session_id", id}, {"stimulus_id", playlist[0]}, {"score", 9}}.dump(),
                      "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  CHECK(json::parse(bad->body)["error"] == "ScoreOutOfRange");
  rater_bodies.push_back(bad->body);

  auto missing = cli.Get("/api/v1/stimulus/abcdef/audio");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  rater_bodies.push_back(missing->body);

  auto page = cli.Get("/index.html");
  REQUIRE(page);
  CHECK(page->status == 200);
  CHECK(page->body.find("listening test") != std::string::npos);

  for (const auto& body : rater_bodies) {
    CHECK(body.find("hifigan") == std::string::npos);
    CHECK(body.find("waveglow") == std::string::npos);
  }

  auto forbidden = cli.Get("/api/v1/admin/summary");
  REQUIRE(forbidden);
  CHECK(forbidden->status == 403);

  auto summary = cli.Get("/api/v1/admin/summary", {{"X-Admin-Token", "s3cret"}});
  REQUIRE(summary);
  CHECK(summary->status == 200);
  const auto rows = json::parse(summary->body);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0]["system"] == "hifigan");
  CHECK(rows[0]["n"] == 3);
  CHECK(rows[0]["mos"] == 4.0);
  CHECK(rows[0]["ci95"] == 0.0);
}
