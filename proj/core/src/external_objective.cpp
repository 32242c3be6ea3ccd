#include <cerrno>
#include <charconv>
#include <cstring>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "rbfmix/problem_io.hpp"
#include "rbfmix/trace_io.hpp"

namespace rbfmix {

namespace {

double run_once(const std::vector<std::string>& base, std::span<const double> x) {
  std::vector<std::string> args = base;
  for (double v : x) args.push_back(format_double(v));
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);

  int fds[2];
  if (pipe(fds) != 0) throw Error(std::string("pipe: ") + std::strerror(errno));
  const pid_t pid = fork();
  if (pid < 0) {
    close(fds[0]);
    close(fds[1]);
    throw Error(std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    dup2(fds[1], STDOUT_FILENO);
    close(fds[0]);
    close(fds[1]);
    execvp(argv[0], argv.data());
    _exit(127);
  }
  close(fds[1]);
  std::string out;
  char buf[512];
  for (;;) {
    const ssize_t r = read(fds[0], buf, sizeof buf);
    if (r > 0) {
      out.append(buf, static_cast<std::size_t>(r));
    } else if (r == 0 || errno != EINTR) {
      break;
    }
  }
  close(fds[0]);
  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw Error("objective command '" + base.front() + "' failed with status " + std::to_string(WEXITSTATUS(status)));
  }

  const auto first = out.find_first_not_of(" \t\r\n");
  const auto last = out.find_last_not_of(" \t\r\n");
  if (first == std::string::npos) throw Error("objective command printed nothing");
  const std::string tok = out.substr(first, last - first + 1);
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw Error("objective command printed '" + tok + "', expected one number");
  }
  return v;
}

}  // namespace

Objective external_objective(std::vector<std::string> argv) {
  if (argv.empty()) throw Error("empty objective command");
  return [argv = std::move(argv)](std::span<const double> x) { return run_once(argv, x); };
}

}  // namespace rbfmix
