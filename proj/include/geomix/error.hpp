#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace geomix {

/// Base error for everything thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A trajectory left a non-periodic axis of a model that is not defined
/// outside its box.
class TrajectoryExit : public Error {
 public:
  TrajectoryExit(const std::string& what, double exit_time)
      : Error(what), exit_time_(exit_time) {}
  double exit_time() const { return exit_time_; }

 private:
  double exit_time_;
};

/// Aggregated per-node failures from a grid computation.
class NodeFailures : public Error {
 public:
  explicit NodeFailures(std::vector<std::pair<int, std::string>> failures)
      : Error(summarize(failures)), failures_(std::move(failures)) {}
  const std::vector<std::pair<int, std::string>>& failures() const { return failures_; }

 private:
  static std::string summarize(const std::vector<std::pair<int, std::string>>& f) {
    std::string s = std::to_string(f.size()) + " node(s) failed";
    const std::size_t shown = f.size() < 5 ? f.size() : 5;
    for (std::size_t i = 0; i < shown; ++i) {
      s += (i == 0 ? ": " : "; ");
      s += "node " + std::to_string(f[i].first) + " (" + f[i].second + ")";
    }
    if (f.size() > shown) s += "; ...";
    return s;
  }
  std::vector<std::pair<int, std::string>> failures_;
};

/// Failure of one pipeline stage, tagged with the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace geomix
