#pragma once

// Minimal DevTools-protocol client over a WebSocket, plus management of a
// locally launched headless browser.

#include <sys/types.h>

#include <chrono>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace formscope {

using Clock = std::chrono::steady_clock;
using Deadline = Clock::time_point;

class CdpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One WebSocket to a browser or page endpoint. Single-threaded: all I/O is
// driven from the calling thread while it waits for a reply or an event.
class CdpConnection {
 public:
  // Throws CdpError if the handshake does not finish before the deadline.
  CdpConnection(const std::string& ws_url, Deadline deadline);
  ~CdpConnection();
  CdpConnection(const CdpConnection&) = delete;
  CdpConnection& operator=(const CdpConnection&) = delete;

  // Sends a command and waits for its reply. Events that arrive meanwhile
  // are queued for next_event. Throws CdpError on a protocol error, a
  // closed socket or the deadline.
  nlohmann::json call(const std::string& method, nlohmann::json params,
                      Deadline deadline);

  // Next queued or incoming event; nullopt once the deadline passes.
  std::optional<nlohmann::json> next_event(Deadline deadline);

  bool is_open() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct BrowserOptions {
  std::string executable;
  std::string host_resolver_rules;
  bool ignore_certificate_errors = false;
  std::vector<std::string> extra_args;
  std::chrono::seconds startup_timeout{30};
};

// Browser executable from $FORMSCOPE_CHROME, the bundled location, or
// common names on PATH. Empty when nothing is found.
std::string find_browser();

// A headless browser child process with its own profile directory.
class BrowserProcess {
 public:
  explicit BrowserProcess(BrowserOptions options);
  ~BrowserProcess();
  BrowserProcess(const BrowserProcess&) = delete;
  BrowserProcess& operator=(const BrowserProcess&) = delete;

  // Launches and waits for the DevTools endpoint. Throws CdpError.
  void start();
  void stop();
  bool running() const { return pid_ > 0; }

  // ws://127.0.0.1:<port>/devtools/browser/<id>
  const std::string& endpoint() const { return endpoint_; }

 private:
  BrowserOptions options_;
  pid_t pid_ = -1;
  std::string profile_dir_;
  std::string endpoint_;
};

// "ws://host:port/devtools/page/<target>" for a browser endpoint.
std::string page_endpoint(const std::string& browser_endpoint,
                          const std::string& target_id);

}  // namespace formscope
