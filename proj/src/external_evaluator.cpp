#include "osteoplan/external_evaluator.hpp"

#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>
#include <limits>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fmt/format.h>
#include <json.hpp>

#include "osteoplan/errors.hpp"

namespace osteoplan {

using nlohmann::json;

namespace {

json number_array(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(std::isfinite(x) ? json(x) : json(nullptr));
  return a;
}

std::vector<double> read_array(const json& j, const char* what, bool allow_null) {
  if (!j.is_array()) throw Error(fmt::format("evaluation result: {} must be an array", what));
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& x : j) {
    if (x.is_null() && allow_null) out.push_back(std::numeric_limits<double>::infinity());
    else if (x.is_number()) out.push_back(x.get<double>());
    else throw Error(fmt::format("evaluation result: {} holds a non-numeric entry", what));
  }
  return out;
}

}  // namespace

std::string evaluation_result_to_json(const EvaluationResult& r) {
  json j;
  j["steps"] = r.steps;
  j["apposition"]["left"] = number_array(r.apposition_left);
  j["apposition"]["right"] = number_array(r.apposition_right);
  if (r.has_middle()) j["apposition"]["middle"] = number_array(r.apposition_middle);
  j["sf_worst"]["left"] = number_array(r.sf_left);
  j["sf_worst"]["right"] = number_array(r.sf_right);
  return j.dump();
}

EvaluationResult evaluation_result_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(fmt::format("evaluation result: invalid JSON ({})", e.what()));
  }
  EvaluationResult r;
  try {
    r.steps = j.at("steps").get<std::size_t>();
    const json& a = j.at("apposition");
    r.apposition_left = read_array(a.at("left"), "apposition.left", false);
    r.apposition_right = read_array(a.at("right"), "apposition.right", false);
    if (a.contains("middle")) r.apposition_middle = read_array(a.at("middle"), "apposition.middle", false);
    const json& s = j.at("sf_worst");
    r.sf_left = read_array(s.at("left"), "sf_worst.left", true);
    r.sf_right = read_array(s.at("right"), "sf_worst.right", true);
  } catch (const json::exception& e) {
    throw Error(fmt::format("evaluation result: {}", e.what()));
  }
  r.validate();
  return r;
}

std::string evaluation_request_json(const DesignVector& phi) {
  json j;
  j["phi"] = phi.to_vector();
  j["names"] = design_component_names(phi.segment_count());
  return j.dump();
}

ExternalEvaluator::ExternalEvaluator(FeasibleRegion region, std::string command)
    : region_(std::move(region)), command_(std::move(command)) {
  region_.validate();
  if (command_.empty()) throw Error("external evaluator: empty command");
}

EvaluationResult ExternalEvaluator::evaluate(const DesignVector& phi) const {
  if (!contains(region_, phi)) throw Error("evaluate: design vector outside the feasible region");
  const std::string request = evaluation_request_json(phi) + "\n";

  int in_pipe[2], out_pipe[2];
  if (pipe2(in_pipe, O_CLOEXEC) != 0) throw Error(fmt::format("external evaluator: pipe: {}", std::strerror(errno)));
  if (pipe2(out_pipe, O_CLOEXEC) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw Error(fmt::format("external evaluator: pipe: {}", std::strerror(errno)));
  }
  const pid_t pid = fork();
  if (pid < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
    throw Error(fmt::format("external evaluator: fork: {}", std::strerror(errno)));
  }
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);

  // A child that exits early must not kill us with SIGPIPE.
  struct sigaction ignore {}, previous {};
  ignore.sa_handler = SIG_IGN;
  sigaction(SIGPIPE, &ignore, &previous);
  const char* p = request.data();
  std::size_t left = request.size();
  while (left > 0) {
    const ssize_t n = write(in_pipe[1], p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      break;
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
  close(in_pipe[1]);
  sigaction(SIGPIPE, &previous, nullptr);

  std::string output;
  char buf[4096];
  for (;;) {
    const ssize_t n = read(out_pipe[0], buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    output.append(buf, static_cast<std::size_t>(n));
  }
  close(out_pipe[0]);

  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw Error(fmt::format("external evaluator '{}' failed (status {})", command_,
                            WIFEXITED(status) ? WEXITSTATUS(status) : -1));
  EvaluationResult r = evaluation_result_from_json(output);
  const std::size_t expected = region_.segment_count() == 2 ? 3 : 2;
  if (r.interfaces().size() != expected)
    throw Error(fmt::format("external evaluator: expected {} interfaces, got {}", expected, r.interfaces().size()));
  return r;
}

}  // namespace osteoplan
