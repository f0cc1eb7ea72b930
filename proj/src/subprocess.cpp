#include "a2s/subprocess.hpp"

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <cstring>
#include <stdexcept>

namespace a2s {

PipeBackend::PipeBackend(std::vector<std::string> argv, std::string display_name) {
  if (argv.empty()) throw std::invalid_argument("PipeBackend: empty command");
  name_ = display_name.empty() ? "pipe:" + argv[0] : std::move(display_name);

  int to_child[2], from_child[2];
  if (pipe(to_child) != 0 || pipe(from_child) != 0) {
    throw std::runtime_error("PipeBackend: pipe() failed");
  }
  pid_t pid = fork();
  if (pid < 0) throw std::runtime_error("PipeBackend: fork() failed");
  if (pid == 0) {
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    close(to_child[0]);
    close(to_child[1]);
    close(from_child[0]);
    close(from_child[1]);
    std::vector<char*> args;
    args.reserve(argv.size() + 1);
    for (auto& a : argv) args.push_back(a.data());
    args.push_back(nullptr);
    execvp(args[0], args.data());
    _exit(127);
  }
  close(to_child[0]);
  close(from_child[1]);
  child_pid_ = pid;
  to_child_ = to_child[1];
  from_child_ = from_child[0];
}

PipeBackend::~PipeBackend() { close_child(); }

void PipeBackend::close_child() {
  if (to_child_ >= 0) {
    close(to_child_);
    to_child_ = -1;
  }
  if (from_child_ >= 0) {
    close(from_child_);
    from_child_ = -1;
  }
  if (child_pid_ > 0) {
    int status = 0;
    waitpid(child_pid_, &status, 0);
    child_pid_ = -1;
  }
}

TranslateResponse PipeBackend::translate(const TranslateRequest& request) {
  TranslateResponse failure;
  failure.request_id = request.request_id;

  if (to_child_ < 0 || from_child_ < 0) {
    failure.error = "backend process is not running";
    return failure;
  }

  std::string line = request_to_json_line(request) + "\n";
  std::size_t written = 0;
  while (written < line.size()) {
    ssize_t n = write(to_child_, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      failure.error = std::string("write to backend failed: ") + std::strerror(errno);
      close_child();
      return failure;
    }
    written += static_cast<std::size_t>(n);
  }

  // Lockstep: the protocol answers one line per request, in order.
  while (true) {
    std::size_t nl = read_buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string reply = read_buffer_.substr(0, nl);
      read_buffer_.erase(0, nl + 1);
      if (reply.empty()) continue;
      auto response = response_from_json_line(reply);
      if (!response) {
        failure.error = "unparseable backend response";
        return failure;
      }
      if (!response->error && response->request_id != request.request_id) {
        failure.error = "backend response id mismatch";
        return failure;
      }
      return *response;
    }
    char chunk[4096];
    ssize_t n = read(from_child_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR) continue;
      failure.error = std::string("read from backend failed: ") + std::strerror(errno);
      close_child();
      return failure;
    }
    if (n == 0) {
      failure.error = "backend closed its output";
      close_child();
      return failure;
    }
    read_buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

}  // namespace a2s
