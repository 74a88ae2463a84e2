#include "sparseadv/wire.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <vector>

#include "sparseadv/error.hpp"

namespace sparseadv {

std::string encode_request(std::uint64_t id, const ImageTensor& img) {
  nlohmann::ordered_json j;
  j["id"] = id;
  j["shape"] = {img.channels, img.height, img.width};
  j["pixels"] = std::vector<double>(img.pixels.data(),
                                    img.pixels.data() + img.pixel_count());
  return j.dump();
}

OracleVerdict decode_response(const std::string& line,
                              std::uint64_t expected_id, int num_classes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed response: ") + e.what());
  }
  if (!j.is_object() || !j.contains("id") || !j.contains("label")) {
    throw ProtocolError("response is missing id or label");
  }
  if (!j["id"].is_number_unsigned() && !j["id"].is_number_integer()) {
    throw ProtocolError("response id is not an integer");
  }
  const std::uint64_t id = j["id"].get<std::uint64_t>();
  if (id != expected_id) {
    throw ProtocolError("response id " + std::to_string(id) +
                        " does not match request id " +
                        std::to_string(expected_id));
  }
  if (!j["label"].is_number_integer()) {
    throw ProtocolError("response label is not an integer");
  }
  OracleVerdict verdict;
  verdict.label = j["label"].get<int>();
  if (verdict.label < 0 || verdict.label >= num_classes) {
    throw ProtocolError("response label " + std::to_string(verdict.label) +
                        " outside [0, " + std::to_string(num_classes) + ")");
  }
  if (j.contains("scores")) {
    if (!j["scores"].is_array()) {
      throw ProtocolError("response scores is not an array");
    }
    verdict.scores = j["scores"].get<std::vector<double>>();
  }
  return verdict;
}

namespace {

[[noreturn]] void throw_errno(const std::string& what) {
  throw TransportError(what + ": " + std::strerror(errno));
}

}  // namespace

// Shared fd plumbing: blocking line-oriented reads with a deadline.
class WireTransport {
 public:
  virtual ~WireTransport() = default;

  void send_line(const std::string& line) {
    std::string framed = line;
    framed.push_back('\n');
    std::size_t off = 0;
    while (off < framed.size()) {
      const ssize_t n =
          ::write(write_fd_, framed.data() + off, framed.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw_errno("write to oracle failed");
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line(std::chrono::milliseconds timeout) {
    // A response line for even a large image is a few MB; anything past
    // this is a misbehaving peer, not a slow one.
    constexpr std::size_t kMaxLine = std::size_t{64} << 20;
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      if (buffer_.size() > kMaxLine) {
        throw ProtocolError("oracle response line exceeds 64 MiB");
      }
      const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (remaining.count() <= 0) {
        throw TransportError("timed out waiting for oracle response");
      }
      struct pollfd pfd{};
      pfd.fd = read_fd_;
      pfd.events = POLLIN;
      const int pr = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
      if (pr < 0) {
        if (errno == EINTR) continue;
        throw_errno("poll on oracle connection failed");
      }
      if (pr == 0) {
        throw TransportError("timed out waiting for oracle response");
      }
      char chunk[4096];
      const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
      if (n < 0) {
        if (errno == EINTR) continue;
        throw_errno("read from oracle failed");
      }
      if (n == 0) {
        throw TransportError("oracle closed the connection");
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 protected:
  int read_fd_ = -1;
  int write_fd_ = -1;
  std::string buffer_;
};

namespace {

class SubprocessTransport final : public WireTransport {
 public:
  explicit SubprocessTransport(const std::string& command) {
    // Writes to a dead child must come back as EPIPE, not SIGPIPE.
    ::signal(SIGPIPE, SIG_IGN);
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) < 0) throw_errno("pipe failed");
    if (::pipe(from_child) < 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw_errno("pipe failed");
    }
    pid_ = ::fork();
    if (pid_ < 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      throw_errno("fork failed");
    }
    if (pid_ == 0) {
      // Own process group, so teardown can signal the shell and anything it
      // forked in one sweep.
      ::setpgid(0, 0);
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), (char*)nullptr);
      _exit(127);
    }
    ::setpgid(pid_, pid_);  // both sides set it; whichever runs first wins
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
  }

  ~SubprocessTransport() override {
    if (write_fd_ >= 0) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    if (pid_ > 0) {
      int status = 0;
      if (::waitpid(pid_, &status, WNOHANG) == 0) {
        if (::kill(-pid_, SIGTERM) != 0) ::kill(pid_, SIGTERM);
        ::waitpid(pid_, &status, 0);
      }
    }
  }

 private:
  pid_t pid_ = -1;
};

class TcpTransport final : public WireTransport {
 public:
  TcpTransport(const std::string& host, const std::string& port) {
    ::signal(SIGPIPE, SIG_IGN);
    struct addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    struct addrinfo* res = nullptr;
    const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res);
    if (rc != 0) {
      throw TransportError("cannot resolve " + host + ":" + port + ": " +
                           ::gai_strerror(rc));
    }
    int fd = -1;
    for (struct addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
      fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
      ::close(fd);
      fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) {
      throw TransportError("cannot connect to " + host + ":" + port);
    }
    read_fd_ = fd;
    write_fd_ = fd;
  }

  ~TcpTransport() override {
    if (read_fd_ >= 0) ::close(read_fd_);
  }
};

std::unique_ptr<WireTransport> open_transport(
    const std::string& endpoint) {
  if (endpoint.rfind("cmd:", 0) == 0) {
    return std::make_unique<SubprocessTransport>(endpoint.substr(4));
  }
  if (endpoint.rfind("tcp:", 0) == 0) {
    const std::string rest = endpoint.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos) {
      throw TransportError("tcp endpoint needs host:port, got '" + rest + "'");
    }
    return std::make_unique<TcpTransport>(rest.substr(0, colon),
                                          rest.substr(colon + 1));
  }
  throw TransportError("endpoint must start with cmd: or tcp:, got '" +
                       endpoint + "'");
}

}  // namespace

ExternalOracle::ExternalOracle(WireConfig config)
    : config_(std::move(config)), transport_(open_transport(config_.endpoint)) {
  if (config_.classes < 2) {
    throw Error("external oracle needs at least two classes");
  }
}

ExternalOracle::~ExternalOracle() = default;

OracleVerdict ExternalOracle::predict(const ImageTensor& img) const {
  std::lock_guard<std::mutex> lock(mu_);
  const std::uint64_t id = next_id_++;
  transport_->send_line(encode_request(id, img));
  const std::string line = transport_->read_line(config_.timeout);
  return decode_response(line, id, config_.classes);
}

int run_echo_stub(std::istream& in, std::ostream& out,
                  const StubOptions& options) {
  std::string line;
  std::uint64_t served = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json request;
    try {
      request = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      return 1;
    }
    if (!request.contains("id") || !request.contains("pixels") ||
        !request["pixels"].is_array() || request["pixels"].empty()) {
      return 1;
    }
    const std::uint64_t id = request["id"].get<std::uint64_t>();
    const double first = request["pixels"][0].get<double>();
    const int label = static_cast<int>(
        std::lround(first * static_cast<double>(options.classes - 1)));

    served += 1;
    if (options.corrupt_at != 0 && served == options.corrupt_at) {
      if (options.corrupt_mode == "badid") {
        nlohmann::ordered_json bad;
        bad["id"] = id + 1;
        bad["label"] = label;
        out << bad.dump() << "\n" << std::flush;
      } else if (options.corrupt_mode == "badjson") {
        out << "{this is not json\n" << std::flush;
      } else if (options.corrupt_mode == "drop") {
        // swallow the response; the client is expected to time out
      } else {
        return 1;
      }
      continue;
    }

    nlohmann::ordered_json response;
    response["id"] = id;
    response["label"] = label;
    out << response.dump() << "\n" << std::flush;
  }
  return 0;
}

}  // namespace sparseadv
