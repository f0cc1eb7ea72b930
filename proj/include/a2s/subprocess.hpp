#pragma once

#include <string>
#include <vector>

#include "a2s/backend.hpp"

namespace a2s {

// Client side of the line protocol: spawns `argv` and exchanges one JSON
// line per request over the child's stdin/stdout, in lockstep. A dead or
// misbehaving child turns into error responses, never exceptions from
// translate().
class PipeBackend : public TranslationBackend {
 public:
  explicit PipeBackend(std::vector<std::string> argv, std::string display_name = "");
  ~PipeBackend() override;

  PipeBackend(const PipeBackend&) = delete;
  PipeBackend& operator=(const PipeBackend&) = delete;

  std::string name() const override { return name_; }
  TranslateResponse translate(const TranslateRequest& request) override;

 private:
  void close_child();

  std::string name_;
  int child_pid_ = -1;
  int to_child_ = -1;    // fd for the child's stdin
  int from_child_ = -1;  // fd for the child's stdout
  std::string read_buffer_;
};

}  // namespace a2s
