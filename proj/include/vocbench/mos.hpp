#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace vocbench::mos {

/// One (system, utterance) audio clip presented to raters under an opaque id.
struct Stimulus {
  std::string id;
  std::string system;
  std::string utterance;
  std::filesystem::path audio_path;
};

/// Parses a test definition, verifies every wav exists and assigns each
/// stimulus a fresh random id. Relative wav paths resolve against the
/// definition file's directory.
std::vector<Stimulus> load_test_definition(const std::filesystem::path& path);

/// 128-bit random token, lowercase hex.
std::string random_token();

using Timestamp = std::chrono::system_clock::time_point;

struct RatingRecord {
  std::string session_id;
  std::string stimulus_id;
  int score = 0;
  Timestamp submitted_at{};
};

struct MosSummary {
  std::string system;
  std::size_t n = 0;
  double mean = 0.0;
  std::optional<double> ci95_half_width;  // absent for n == 1
};

/// Two-sided 95% Student-t quantile t(0.975, df); tabulated for df 1..200,
/// 1.96 beyond.
double t_quantile_975(std::size_t df);

/// Mean and 95% half-width t(0.975, n-1) * sd / sqrt(n) of a score list.
MosSummary summarize(const std::string& system, const std::vector<int>& scores);

struct Session {
  std::string id;
  std::vector<std::string> playlist;
};

/// Durable rating store backing the listening test. Sessions and ratings are
/// appended to newline-delimited JSON logs in `data_dir` and replayed on
/// construction. Stimulus ids persist across restarts in stimuli.json.
///
/// Writers are serialized through one append point; readers work on
/// immutable snapshots.
class MosStore {
 public:
  MosStore(std::vector<Stimulus> stimuli, std::filesystem::path data_dir);

  const std::vector<Stimulus>& stimuli() const { return stimuli_; }
  const Stimulus* find_stimulus(const std::string& id) const;

  /// Creates a session with a fresh random playlist, or returns the stored
  /// session when `resume_id` names one. Throws UnknownSession otherwise.
  Session create_session(const std::optional<std::string>& resume_id = std::nullopt);

  /// Stores the rating; resubmission for the same (session, stimulus)
  /// replaces the earlier score.
  void submit(const RatingRecord& r);

  std::size_t rating_count() const;
  std::vector<RatingRecord> ratings() const;

  /// Per-system MOS over all sessions and utterances. Throws NoRatings.
  std::vector<MosSummary> summary() const;

  /// Per (system, utterance) breakdown.
  std::map<std::pair<std::string, std::string>, MosSummary> per_utterance() const;

 private:
  struct Snapshot {
    std::map<std::string, Session> sessions;
    std::map<std::pair<std::string, std::string>, RatingRecord> ratings;
  };

  std::shared_ptr<const Snapshot> snapshot() const;
  void publish(std::shared_ptr<const Snapshot> next);
  void replay();

  std::vector<Stimulus> stimuli_;
  std::map<std::string, std::size_t> by_id_;
  std::filesystem::path data_dir_;

  std::mutex writer_;
  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const Snapshot> current_;
};

std::string format_timestamp(Timestamp t);

}  // namespace vocbench::mos
