// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace pingpong {

enum class StubVerdict { kConsistent, kInconsistent };
enum class StubDenoise { kZero, kWrongShape };

struct StubOptions {
  std::string host = "127.0.0.1";
  int port = 0;  // 0 picks a free port
  StubVerdict verdict = StubVerdict::kInconsistent;
  StubDenoise denoise = StubDenoise::kZero;
  int die_after = -1;  // stop serving after this many /critic requests; -1 never
};

/// Deterministic sidecar answering /critic and /denoise from fixed fixtures.
/// Every received request body is kept for contract assertions.
class StubServer {
 public:
  explicit StubServer(StubOptions options);
  ~StubServer();
  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  /// Binds and starts serving on a background thread.
  void start();
  /// Binds and serves on the calling thread until stop().
  void run();
  void stop();
  /// Asks the server to stop without joining; safe from a signal handler.
  void shutdown();
  /// Blocks until a started server stops.
  void wait();

  int port() const { return port_; }
  std::string endpoint() const;

  std::vector<std::string> critic_requests() const;
  std::vector<std::string> denoise_requests() const;
  void clear();

  static std::string critic_reply(StubVerdict verdict);
  static std::string denoise_reply(const std::string& request_body, StubDenoise mode);

 private:
  void install_routes();
  void bind();

  StubOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mu_;
  std::vector<std::string> critic_bodies_;
  std::vector<std::string> denoise_bodies_;
  std::atomic<int> critic_count_{0};
};

}  // namespace pingpong
