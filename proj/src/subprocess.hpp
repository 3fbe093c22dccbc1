#pragma once

#include <optional>
#include <string>
#include <sys/types.h>

namespace vocbench::detail {

struct ProcessOutcome {
  int exit_code = -1;
  bool timed_out = false;
  double elapsed_s = 0.0;  // wall clock from spawn to reap
};

/// Runs `command` through /bin/sh in its own process group. On timeout the
/// whole group is killed.
ProcessOutcome run_shell(const std::string& command, double timeout_s);

/// A long-lived child fed one request line at a time on stdin; each reply is
/// one line on stdout.
class PersistentProcess {
 public:
  explicit PersistentProcess(const std::string& command);
  ~PersistentProcess();
  PersistentProcess(const PersistentProcess&) = delete;
  PersistentProcess& operator=(const PersistentProcess&) = delete;

  /// Writes `line` and waits for a reply line. Returns nullopt on timeout or
  /// when the child closed its output.
  std::optional<std::string> request(const std::string& line, double timeout_s);

 private:
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

/// Single-quotes `s` for /bin/sh.
std::string shell_quote(const std::string& s);

}  // namespace vocbench::detail
