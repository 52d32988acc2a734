#include "formscope/cdp.hpp"

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

extern char** environ;

namespace formscope {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using nlohmann::json;

namespace {

struct WsUrl {
  std::string host;
  std::string port;
  std::string path;
};

WsUrl parse_ws_url(const std::string& url) {
  constexpr std::string_view kScheme = "ws://";
  if (!std::string_view(url).starts_with(kScheme)) {
    throw CdpError("not a ws:// endpoint: " + url);
  }
  std::string rest = url.substr(kScheme.size());
  auto slash = rest.find('/');
  std::string authority = rest.substr(0, slash);
  WsUrl out;
  out.path = slash == std::string::npos ? "/" : rest.substr(slash);
  auto colon = authority.rfind(':');
  if (colon == std::string::npos) {
    out.host = authority;
    out.port = "80";
  } else {
    out.host = authority.substr(0, colon);
    out.port = authority.substr(colon + 1);
  }
  return out;
}

}  // namespace

struct CdpConnection::Impl {
  net::io_context ioc;
  websocket::stream<beast::tcp_stream> ws{ioc};
  beast::flat_buffer buffer;
  std::deque<json> events;
  std::map<std::int64_t, json> replies;
  bool reading = false;
  bool closed = false;
  std::string error;
  std::int64_t next_id = 1;

  template <typename Done>
  void run_until(Deadline deadline, Done&& done) {
    while (!done() && !closed && Clock::now() < deadline) {
      if (ioc.stopped()) ioc.restart();
      if (ioc.run_one_until(deadline) == 0 && ioc.stopped() && !reading) break;
    }
  }

  void start_read() {
    reading = true;
    ws.async_read(buffer, [this](beast::error_code ec, std::size_t) {
      reading = false;
      if (ec) {
        closed = true;
        error = ec.message();
        return;
      }
      std::string text = beast::buffers_to_string(buffer.data());
      buffer.consume(buffer.size());
      try {
        json message = json::parse(text);
        if (message.contains("id")) {
          const auto id = message["id"].get<std::int64_t>();
          replies[id] = std::move(message);
        } else if (message.contains("method")) {
          events.push_back(std::move(message));
        }
      } catch (const json::exception&) {
        // Not ours to interpret; the protocol only sends JSON.
      }
      start_read();
    });
  }
};

CdpConnection::CdpConnection(const std::string& ws_url, Deadline deadline)
    : impl_(std::make_unique<Impl>()) {
  WsUrl url = parse_ws_url(ws_url);
  Impl& impl = *impl_;
  tcp::resolver resolver(impl.ioc);
  bool done = false;
  beast::error_code failure;
  resolver.async_resolve(
      url.host, url.port,
      [&](beast::error_code ec, tcp::resolver::results_type results) {
        if (ec) {
          failure = ec;
          done = true;
          return;
        }
        beast::get_lowest_layer(impl.ws).async_connect(
            results, [&](beast::error_code ec2, const tcp::endpoint&) {
              if (ec2) {
                failure = ec2;
                done = true;
                return;
              }
              impl.ws.async_handshake(url.host + ":" + url.port, url.path,
                                      [&](beast::error_code ec3) {
                                        failure = ec3;
                                        done = true;
                                      });
            });
      });
  while (!done && Clock::now() < deadline) {
    if (impl.ioc.stopped()) impl.ioc.restart();
    if (impl.ioc.run_one_until(deadline) == 0 && impl.ioc.stopped()) break;
  }
  if (!done || failure) {
    beast::error_code ignored;
    beast::get_lowest_layer(impl.ws).socket().close(ignored);
    impl.ioc.restart();
    impl.ioc.poll();
    throw CdpError("cannot open " + ws_url + ": " +
                   (done ? failure.message() : std::string("timed out")));
  }
  beast::get_lowest_layer(impl.ws).expires_never();
  impl.ws.read_message_max(512u * 1024 * 1024);
  impl.ws.text(true);
  impl.start_read();
}

CdpConnection::~CdpConnection() {
  beast::error_code ignored;
  beast::get_lowest_layer(impl_->ws).socket().close(ignored);
  impl_->ioc.restart();
  impl_->ioc.poll();
}

bool CdpConnection::is_open() const { return !impl_->closed; }

json CdpConnection::call(const std::string& method, json params,
                         Deadline deadline) {
  Impl& impl = *impl_;
  if (impl.closed) throw CdpError("connection closed: " + impl.error);
  std::int64_t id = impl.next_id++;
  json message{{"id", id}, {"method", method}, {"params", std::move(params)}};
  // Writes go through the io_context too; mixing a blocking write with the
  // pending asynchronous read is not supported by the stream.
  const std::string text = message.dump();
  bool written = false;
  beast::error_code ec;
  impl.ws.async_write(net::buffer(text), [&](beast::error_code e, std::size_t) {
    ec = e;
    written = true;
  });
  impl.run_until(deadline, [&] { return written; });
  if (!written) {
    impl.closed = true;
    throw CdpError(method + ": write timed out");
  }
  if (ec) {
    impl.closed = true;
    throw CdpError(method + ": write failed: " + ec.message());
  }
  impl.run_until(deadline, [&] { return impl.replies.count(id) > 0; });
  auto it = impl.replies.find(id);
  if (it == impl.replies.end()) {
    if (impl.closed) throw CdpError(method + ": connection closed: " + impl.error);
    throw CdpError(method + ": no reply before the deadline");
  }
  json reply = std::move(it->second);
  impl.replies.erase(it);
  if (reply.contains("error")) {
    throw CdpError(method + ": " + reply["error"].value("message", reply["error"].dump()));
  }
  return reply.value("result", json::object());
}

std::optional<json> CdpConnection::next_event(Deadline deadline) {
  Impl& impl = *impl_;
  impl.run_until(deadline, [&] { return !impl.events.empty(); });
  if (impl.events.empty()) return std::nullopt;
  json event = std::move(impl.events.front());
  impl.events.pop_front();
  return event;
}

std::string page_endpoint(const std::string& browser_endpoint,
                          const std::string& target_id) {
  WsUrl url = parse_ws_url(browser_endpoint);
  return "ws://" + url.host + ":" + url.port + "/devtools/page/" + target_id;
}

std::string find_browser() {
  auto executable = [](const std::string& path) {
    return !path.empty() && ::access(path.c_str(), X_OK) == 0;
  };
  if (const char* env = std::getenv("FORMSCOPE_CHROME"); env && executable(env)) {
    return env;
  }
  if (executable("/opt/chromium/chrome-wrapper")) return "/opt/chromium/chrome-wrapper";
  const char* path = std::getenv("PATH");
  if (!path) return {};
  std::stringstream dirs(path);
  std::string dir;
  while (std::getline(dirs, dir, ':')) {
    for (const char* name : {"chromium", "chromium-browser", "google-chrome",
                             "google-chrome-stable", "chrome"}) {
      std::string candidate = dir + "/" + name;
      if (executable(candidate)) return candidate;
    }
  }
  return {};
}

BrowserProcess::BrowserProcess(BrowserOptions options)
    : options_(std::move(options)) {}

BrowserProcess::~BrowserProcess() { stop(); }

void BrowserProcess::start() {
  if (running()) return;
  if (options_.executable.empty()) throw CdpError("no browser executable given");
  char dir_template[] = "/tmp/formscope-browser-XXXXXX";
  if (!::mkdtemp(dir_template)) throw CdpError("cannot create a profile directory");
  profile_dir_ = dir_template;

  std::vector<std::string> args = {
      options_.executable,
      "--headless=new",
      "--no-sandbox",
      "--disable-gpu",
      "--disable-dev-shm-usage",
      "--no-first-run",
      "--no-default-browser-check",
      "--disable-background-networking",
      "--disable-component-update",
      "--disable-sync",
      "--mute-audio",
      "--disable-features=HttpsUpgrades,Translate,OptimizationHints,MediaRouter",
      "--remote-debugging-port=0",
      "--user-data-dir=" + profile_dir_,
  };
  if (!options_.host_resolver_rules.empty()) {
    args.push_back("--host-resolver-rules=" + options_.host_resolver_rules);
  }
  if (options_.ignore_certificate_errors) args.push_back("--ignore-certificate-errors");
  args.insert(args.end(), options_.extra_args.begin(), options_.extra_args.end());
  args.push_back("about:blank");

  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);

  std::string log_path = profile_dir_ + "/browser.log";
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, 0, "/dev/null", O_RDONLY, 0);
  posix_spawn_file_actions_addopen(&actions, 1, log_path.c_str(),
                                   O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_adddup2(&actions, 1, 2);
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
  posix_spawnattr_setpgroup(&attr, 0);
  int rc = ::posix_spawn(&pid_, options_.executable.c_str(), &actions, &attr,
                         argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  posix_spawnattr_destroy(&attr);
  if (rc != 0) {
    pid_ = -1;
    throw CdpError("cannot launch " + options_.executable + ": " + std::strerror(rc));
  }

  // The browser writes "<port>\n<path>" once the endpoint is listening.
  const auto port_file = std::filesystem::path(profile_dir_) / "DevToolsActivePort";
  const Deadline deadline = Clock::now() + options_.startup_timeout;
  while (Clock::now() < deadline) {
    int status = 0;
    if (::waitpid(pid_, &status, WNOHANG) == pid_) {
      pid_ = -1;
      std::ifstream log(log_path);
      std::string tail((std::istreambuf_iterator<char>(log)), {});
      if (tail.size() > 2000) tail = tail.substr(tail.size() - 2000);
      throw CdpError("browser exited during startup: " + tail);
    }
    std::ifstream in(port_file);
    std::string port, path;
    if (in && std::getline(in, port) && std::getline(in, path) && !port.empty() &&
        !path.empty()) {
      endpoint_ = "ws://127.0.0.1:" + port + path;
      return;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  stop();
  throw CdpError("browser did not expose a DevTools endpoint in time");
}

void BrowserProcess::stop() {
  if (pid_ > 0) {
    ::kill(-pid_, SIGTERM);
    const Deadline deadline = Clock::now() + std::chrono::seconds(5);
    int status = 0;
    bool reaped = false;
    while (Clock::now() < deadline) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) {
        reaped = true;
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    ::kill(-pid_, SIGKILL);
    if (!reaped) ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }
  if (!profile_dir_.empty()) {
    std::error_code ignored;
    std::filesystem::remove_all(profile_dir_, ignored);
    profile_dir_.clear();
  }
  endpoint_.clear();
}

}  // namespace formscope
