// Real-tool adapter: runs an external command on the generated script.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <filesystem>

#include "simagent/sim_environment.hpp"
#include "simagent/text.hpp"

namespace simagent {

namespace {

/// Removes the script file on scope exit.
class TempScript {
 public:
  explicit TempScript(std::string_view code) {
    auto pattern = (std::filesystem::temp_directory_path() / "simagent-script-XXXXXX").string();
    std::vector<char> buf(pattern.begin(), pattern.end());
    buf.push_back('\0');
    const int fd = ::mkstemp(buf.data());
    if (fd < 0) throw std::runtime_error(std::string("mkstemp failed: ") + std::strerror(errno));
    path_ = buf.data();
    std::size_t written = 0;
    while (written < code.size()) {
      const auto n = ::write(fd, code.data() + written, code.size() - written);
      if (n < 0) {
        ::close(fd);
        throw std::runtime_error(std::string("writing script failed: ") + std::strerror(errno));
      }
      written += static_cast<std::size_t>(n);
    }
    ::close(fd);
  }
  ~TempScript() { ::unlink(path_.c_str()); }
  TempScript(const TempScript&) = delete;
  TempScript& operator=(const TempScript&) = delete;

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

struct ProcessResult {
  std::string output;
  int exit_status = 0;
  bool timed_out = false;
};

ProcessResult run_process(const std::vector<std::string>& argv, std::chrono::milliseconds cap) {
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  int fds[2];
  if (::pipe(fds) != 0) throw std::runtime_error(std::string("pipe failed: ") + std::strerror(errno));

  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    throw std::runtime_error(std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::dup2(fds[1], STDOUT_FILENO);
    ::dup2(fds[1], STDERR_FILENO);
    ::close(fds[0]);
    ::close(fds[1]);
    ::setpgid(0, 0);
    ::execvp(args[0], args.data());
    const char msg[] = "EXEC_ERROR: cannot start tool\n";
    [[maybe_unused]] auto ignored = ::write(STDOUT_FILENO, msg, sizeof msg - 1);
    ::_exit(127);
  }
  ::close(fds[1]);

  ProcessResult result;
  const auto deadline = std::chrono::steady_clock::now() + cap;
  char buf[4096];
  while (true) {
    const auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      result.timed_out = true;
      break;
    }
    pollfd pfd{fds[0], POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (ready < 0 && errno == EINTR) continue;
    if (ready == 0) {
      result.timed_out = true;
      break;
    }
    const auto n = ::read(fds[0], buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    result.output.append(buf, static_cast<std::size_t>(n));
  }
  ::close(fds[0]);
  if (result.timed_out) ::kill(-pid, SIGKILL);

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (WIFEXITED(status)) result.exit_status = WEXITSTATUS(status);
  else if (WIFSIGNALED(status)) result.exit_status = 128 + WTERMSIG(status);
  return result;
}

}  // namespace

SubprocessEnvironment::SubprocessEnvironment(std::vector<std::string> command, std::chrono::milliseconds wall_clock_cap)
    : command_(std::move(command)), cap_(wall_clock_cap) {
  if (command_.empty()) throw std::invalid_argument("subprocess environment needs a command");
  if (cap_.count() <= 0) throw std::invalid_argument("wall-clock cap must be positive");
}

ExecutionOutcome SubprocessEnvironment::run(std::string_view code, ErrorReportingQuality quality) const {
  TempScript script(code);
  auto argv = command_;
  argv.push_back(script.path());
  const ProcessResult proc = run_process(argv, cap_);

  if (proc.timed_out) {
    return apply_quality(
        ExecutionOutcome::failure(ErrorKind::tool_error,
                                  "execution exceeded the wall-clock cap of " + std::to_string(cap_.count()) + " ms"),
        quality);
  }
  std::vector<std::string> kept;
  for (auto line : text::lines(proc.output)) {
    if (line.starts_with(kErrorSentinel))
      return apply_quality(
          ExecutionOutcome::failure(ErrorKind::tool_error, std::string(text::trim(line.substr(kErrorSentinel.size())))),
          quality);
    kept.emplace_back(line);
  }
  if (proc.exit_status != 0) {
    return apply_quality(
        ExecutionOutcome::failure(ErrorKind::tool_error, "tool exited with status " + std::to_string(proc.exit_status)),
        quality);
  }
  ExecutionOutcome out;
  out.result_canonical = std::string(text::trim(text::join(kept, "\n")));
  return out;
}

std::string SubprocessEnvironment::describe() const {
  return "subprocess (" + text::join(command_, " ") + ", cap " + std::to_string(cap_.count()) + " ms)";
}

}  // namespace simagent
