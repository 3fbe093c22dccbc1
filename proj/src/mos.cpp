#include "vocbench/mos.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <random>
#include <set>
#include <sstream>

#include "vocbench/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace vocbench::mos {

std::string random_token() {
  static thread_local std::random_device rd;
  std::ostringstream out;
  out << std::hex << std::setfill('0');
  for (int i = 0; i < 4; ++i) out << std::setw(8) << rd();
  return out.str();
}

std::vector<Stimulus> load_test_definition(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, "test definition: " + std::string(e.what()));
  }

  const fs::path base = path.parent_path();
  std::vector<Stimulus> out;
  std::set<std::pair<std::string, std::string>> seen;
  try {
    for (const auto& sys : j.at("systems")) {
      const auto system = sys.at("name").get<std::string>();
      for (const auto& utt : sys.at("utterances")) {
        Stimulus s;
        s.system = system;
        s.utterance = utt.at("id").get<std::string>();
        fs::path wav = utt.at("wav").get<std::string>();
        s.audio_path = wav.is_absolute() ? wav : base / wav;
        if (!seen.insert({s.system, s.utterance}).second) {
          throw Error(ErrorCode::DuplicateEntry, system + "/" + s.utterance + " listed twice");
        }
        if (!fs::is_regular_file(s.audio_path)) {
          throw Error(ErrorCode::MissingAudio, s.audio_path.string());
        }
        s.id = random_token();
        out.push_back(std::move(s));
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, "test definition: " + std::string(e.what()));
  }
  return out;
}

double t_quantile_975(std::size_t df) {
  static const auto table = [] {
    std::array<double, 201> t{};
    for (std::size_t d = 1; d < t.size(); ++d) {
      boost::math::students_t dist(static_cast<double>(d));
      t[d] = boost::math::quantile(boost::math::complement(dist, 0.025));
    }
    return t;
  }();
  if (df == 0) throw Error(ErrorCode::Usage, "t quantile needs df >= 1");
  return df < table.size() ? table[df] : 1.96;
}

MosSummary summarize(const std::string& system, const std::vector<int>& scores) {
  if (scores.empty()) throw Error(ErrorCode::NoRatings, "no ratings for " + system);
  MosSummary s;
  s.system = system;
  s.n = scores.size();
  double sum = 0.0;
  for (int v : scores) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n >= 2) {
    double ss = 0.0;
    for (int v : scores) ss += (v - s.mean) * (v - s.mean);
    const double sd = std::sqrt(ss / static_cast<double>(s.n - 1));
    s.ci95_half_width = t_quantile_975(s.n - 1) * sd / std::sqrt(static_cast<double>(s.n));
  }
  return s;
}

std::string format_timestamp(Timestamp t) {
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
  const std::time_t secs = static_cast<std::time_t>(ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0')
      << (ms % 1000) << 'Z';
  return out.str();
}

namespace {

Timestamp parse_timestamp(const std::string& s) {
  std::tm tm{};
  std::istringstream in(s);
  in >> std::get_time(&tm, "%Y-%m-%dT%H:%M:%S");
  if (in.fail()) return {};
  int millis = 0;
  if (in.peek() == '.') {
    in.get();
    in >> millis;
  }
  return std::chrono::system_clock::from_time_t(timegm(&tm)) + std::chrono::milliseconds(millis);
}

// Appends one line and fsyncs before returning.
void append_line(const fs::path& path, const std::string& line) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  const std::string data = line + "\n";
  const ssize_t n = ::write(fd, data.data(), data.size());
  ::fsync(fd);
  ::close(fd);
  if (n != static_cast<ssize_t>(data.size())) {
    throw Error(ErrorCode::IoFailure, "short write to " + path.string());
  }
}

void write_atomically(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot create " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

constexpr const char* kStimuliFile = "stimuli.json";
constexpr const char* kSessionsLog = "sessions.jsonl";
constexpr const char* kRatingsLog = "ratings.jsonl";

}  // namespace

MosStore::MosStore(std::vector<Stimulus> stimuli, fs::path data_dir)
    : stimuli_(std::move(stimuli)), data_dir_(std::move(data_dir)) {
  if (stimuli_.empty()) throw Error(ErrorCode::NoTestLoaded, "test definition has no stimuli");
  fs::create_directories(data_dir_);

  // Keep ids stable across restarts so the replayed logs stay meaningful.
  const fs::path ids_path = data_dir_ / kStimuliFile;
  if (fs::exists(ids_path)) {
    std::ifstream in(ids_path);
    const json saved = json::parse(in);
    std::map<std::pair<std::string, std::string>, std::string> known;
    for (const auto& s : saved.at("stimuli")) {
      known[{s.at("system").get<std::string>(), s.at("utterance").get<std::string>()}] =
          s.at("id").get<std::string>();
    }
    for (auto& s : stimuli_) {
      if (auto it = known.find({s.system, s.utterance}); it != known.end()) s.id = it->second;
    }
  }
  json out = {{"stimuli", json::array()}};
  for (std::size_t i = 0; i < stimuli_.size(); ++i) {
    by_id_[stimuli_[i].id] = i;
    out["stimuli"].push_back(
        {{"id", stimuli_[i].id}, {"system", stimuli_[i].system}, {"utterance", stimuli_[i].utterance}});
  }
  write_atomically(ids_path, out.dump(2) + "\n");

  current_ = std::make_shared<const Snapshot>();
  replay();
}

const Stimulus* MosStore::find_stimulus(const std::string& id) const {
  const auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &stimuli_[it->second];
}

std::shared_ptr<const MosStore::Snapshot> MosStore::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return current_;
}

void MosStore::publish(std::shared_ptr<const Snapshot> next) {
  std::lock_guard lock(snapshot_mutex_);
  current_ = std::move(next);
}

void MosStore::replay() {
  auto state = std::make_shared<Snapshot>();
  std::string line;
  if (std::ifstream in(data_dir_ / kSessionsLog); in) {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) continue;  // torn final line after a crash
      Session s{j.at("session").get<std::string>(),
                j.at("playlist").get<std::vector<std::string>>()};
      state->sessions[s.id] = std::move(s);
    }
  }
  if (std::ifstream in(data_dir_ / kRatingsLog); in) {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) continue;
      RatingRecord r{j.at("session").get<std::string>(), j.at("stimulus").get<std::string>(),
                     j.at("score").get<int>(), parse_timestamp(j.at("ts").get<std::string>())};
      state->ratings[{r.session_id, r.stimulus_id}] = r;
    }
  }
  publish(std::move(state));
}

Session MosStore::create_session(const std::optional<std::string>& resume_id) {
  if (resume_id) {
    const auto snap = snapshot();
    const auto it = snap->sessions.find(*resume_id);
    if (it == snap->sessions.end()) throw Error(ErrorCode::UnknownSession, *resume_id);
    return it->second;
  }

  Session s;
  s.id = random_token();
  for (const auto& st : stimuli_) s.playlist.push_back(st.id);
  std::random_device rd;
  std::seed_seq seq{rd(), rd(), rd(), rd()};
  std::mt19937_64 rng(seq);
  std::shuffle(s.playlist.begin(), s.playlist.end(), rng);

  std::lock_guard lock(writer_);
  append_line(data_dir_ / kSessionsLog, json{{"session", s.id}, {"playlist", s.playlist}}.dump());
  auto next = std::make_shared<Snapshot>(*snapshot());
  next->sessions[s.id] = s;
  publish(std::move(next));
  return s;
}

void MosStore::submit(const RatingRecord& r) {
  if (r.score < 1 || r.score > 5) {
    throw Error(ErrorCode::ScoreOutOfRange, "score " + std::to_string(r.score));
  }
  if (!find_stimulus(r.stimulus_id)) throw Error(ErrorCode::UnknownStimulus, r.stimulus_id);

  std::lock_guard lock(writer_);
  const auto snap = snapshot();
  if (!snap->sessions.count(r.session_id)) throw Error(ErrorCode::UnknownSession, r.session_id);
  RatingRecord stored = r;
  if (stored.submitted_at == Timestamp{}) stored.submitted_at = std::chrono::system_clock::now();
  append_line(data_dir_ / kRatingsLog, json{{"session", stored.session_id},
                                            {"stimulus", stored.stimulus_id},
                                            {"score", stored.score},
                                            {"ts", format_timestamp(stored.submitted_at)}}
                                           .dump());
  auto next = std::make_shared<Snapshot>(*snap);
  next->ratings[{stored.session_id, stored.stimulus_id}] = stored;
  publish(std::move(next));
}

std::size_t MosStore::rating_count() const { return snapshot()->ratings.size(); }

std::vector<RatingRecord> MosStore::ratings() const {
  const auto snap = snapshot();
  std::vector<RatingRecord> out;
  for (const auto& [key, r] : snap->ratings) out.push_back(r);
  return out;
}

std::vector<MosSummary> MosStore::summary() const {
  const auto snap = snapshot();
  std::map<std::string, std::vector<int>> by_system;
  for (const auto& [key, r] : snap->ratings) {
    if (const Stimulus* s = find_stimulus(r.stimulus_id)) by_system[s->system].push_back(r.score);
  }
  if (by_system.empty()) throw Error(ErrorCode::NoRatings, "no ratings collected yet");
  std::vector<MosSummary> out;
  for (const auto& [system, scores] : by_system) out.push_back(summarize(system, scores));
  return out;
}

std::map<std::pair<std::string, std::string>, MosSummary> MosStore::per_utterance() const {
  const auto snap = snapshot();
  std::map<std::pair<std::string, std::string>, std::vector<int>> groups;
  for (const auto& [key, r] : snap->ratings) {
    if (const Stimulus* s = find_stimulus(r.stimulus_id)) {
      groups[{s->system, s->utterance}].push_back(r.score);
    }
  }
  std::map<std::pair<std::string, std::string>, MosSummary> out;
  for (const auto& [key, scores] : groups) out[key] = summarize(key.first, scores);
  return out;
}

}  // namespace vocbench::mos
