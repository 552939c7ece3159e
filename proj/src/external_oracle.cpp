#include "adcp/external_oracle.hpp"

#include <algorithm>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <mutex>

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

namespace adcp {
namespace {

using Clock = std::chrono::steady_clock;

std::string errno_text() { return std::strerror(errno); }

void ignore_sigpipe_once() {
  static std::once_flag flag;
  std::call_once(flag, [] { std::signal(SIGPIPE, SIG_IGN); });
}

void set_nonblocking(int fd) {
  const int flags = fcntl(fd, F_GETFL, 0);
  if (flags < 0 || fcntl(fd, F_SETFL, flags | O_NONBLOCK) < 0) {
    throw OracleError("fcntl: " + errno_text());
  }
}

// Remaining milliseconds until `deadline`, for poll().
int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::ceil<std::chrono::milliseconds>(deadline - Clock::now());
  return static_cast<int>(std::max<std::int64_t>(0, left.count()));
}

ProtocolError field_error(const std::string& field, const std::string& what, std::string_view frame) {
  return ProtocolError("protocol violation: " + what, std::string(frame), field);
}

}  // namespace

// Bidirectional byte stream carrying newline-terminated frames.
class ExternalOracle::Channel {
 public:
  Channel(int read_fd, int write_fd, pid_t child) : read_fd_(read_fd), write_fd_(write_fd), child_(child) {
    set_nonblocking(read_fd_);
    if (write_fd_ != read_fd_) set_nonblocking(write_fd_);
  }

  ~Channel() {
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    if (child_ > 0) {
      ::kill(-child_, SIGTERM);
      int status = 0;
      ::waitpid(child_, &status, 0);
    }
  }

  Channel(const Channel&) = delete;
  Channel& operator=(const Channel&) = delete;

  static std::unique_ptr<Channel> spawn(const std::string& command) {
    int to_child[2];
    int from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0) throw OracleError("pipe: " + errno_text());
    if (::pipe2(from_child, O_CLOEXEC) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw OracleError("pipe: " + errno_text());
    }
    const pid_t pid = ::fork();
    if (pid < 0) {
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
      throw OracleError("cannot spawn oracle: fork: " + errno_text());
    }
    if (pid == 0) {
      ::setpgid(0, 0);
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::setpgid(pid, pid);
    ::close(to_child[0]);
    ::close(from_child[1]);
    return std::make_unique<Channel>(from_child[0], to_child[1], pid);
  }

  static std::unique_ptr<Channel> connect(const std::string& host, int port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* found = nullptr;
    const std::string service = std::to_string(port);
    if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &found); rc != 0) {
      throw OracleError("cannot resolve " + host + ": " + ::gai_strerror(rc));
    }
    std::string last_error = "no addresses";
    for (addrinfo* a = found; a != nullptr; a = a->ai_next) {
      const int fd = ::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol);
      if (fd < 0) {
        last_error = errno_text();
        continue;
      }
      if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) {
        ::freeaddrinfo(found);
        return std::make_unique<Channel>(fd, fd, -1);
      }
      last_error = errno_text();
      ::close(fd);
    }
    ::freeaddrinfo(found);
    throw OracleError("cannot connect to " + host + ":" + service + ": " + last_error);
  }

  void write_line(const std::string& frame, Clock::time_point deadline) {
    const std::string data = frame + '\n';
    std::size_t sent = 0;
    while (sent < data.size()) {
      const ssize_t n = ::write(write_fd_, data.data() + sent, data.size() - sent);
      if (n > 0) {
        sent += static_cast<std::size_t>(n);
        continue;
      }
      if (n < 0 && errno == EINTR) continue;
      if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
        wait_for(write_fd_, POLLOUT, deadline);
        continue;
      }
      throw OracleError("write to oracle failed: " + errno_text() + exit_note());
    }
  }

  std::string read_line(Clock::time_point deadline) {
    for (;;) {
      if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      char chunk[65536];
      const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
      if (n > 0) {
        buffer_.append(chunk, static_cast<std::size_t>(n));
        continue;
      }
      if (n == 0) throw OracleError("oracle closed the connection" + exit_note());
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) {
        wait_for(read_fd_, POLLIN, deadline);
        continue;
      }
      throw OracleError("read from oracle failed: " + errno_text());
    }
  }

 private:
  void wait_for(int fd, short events, Clock::time_point deadline) {
    pollfd p{fd, events, 0};
    for (;;) {
      const int rc = ::poll(&p, 1, remaining_ms(deadline));
      if (rc > 0) return;
      if (rc == 0) throw OracleTimeout("oracle did not respond before the deadline");
      if (errno != EINTR) throw OracleError("poll: " + errno_text());
    }
  }

  std::string exit_note() {
    if (child_ <= 0) return {};
    int status = 0;
    if (::waitpid(child_, &status, WNOHANG) == child_) {
      child_ = -1;
      if (WIFEXITED(status)) return " (process exited with status " + std::to_string(WEXITSTATUS(status)) + ")";
      if (WIFSIGNALED(status)) return " (process killed by signal " + std::to_string(WTERMSIG(status)) + ")";
    }
    return {};
  }

  int read_fd_;
  int write_fd_;
  pid_t child_;
  std::string buffer_;
};

ExternalOracle::ExternalOracle(const OracleSpec& spec) : spec_(spec) {
  ignore_sigpipe_once();
  if (spec_.timeout.count() <= 0) throw std::invalid_argument("oracle: timeout must be positive");
  if (spec_.transport == OracleSpec::Transport::Command) {
    if (spec_.command.empty()) throw std::invalid_argument("oracle: empty command");
    channel_ = Channel::spawn(spec_.command);
  } else {
    if (spec_.port <= 0 || spec_.port > 65535) throw std::invalid_argument("oracle: invalid port");
    channel_ = Channel::connect(spec_.host, spec_.port);
  }
}

ExternalOracle::~ExternalOracle() = default;

std::vector<Detection> ExternalOracle::detect(const Image& image) {
  if (!alive()) throw OracleError("oracle connection is dead: " + dead_reason_);
  const std::uint64_t id = next_id_++;
  const auto deadline = Clock::now() + spec_.timeout;
  try {
    channel_->write_line(encode_request(id, image), deadline);
    const std::string frame = channel_->read_line(deadline);
    return parse_response(frame, id);
  } catch (const ProtocolError& e) {
    dead_reason_ = e.what();
    throw;
  } catch (const OracleTimeout& e) {
    dead_reason_ = e.what();
    throw;
  } catch (const RemoteOracleError&) {
    throw;
  } catch (const OracleError& e) {
    dead_reason_ = e.what();
    throw;
  }
}

std::unique_ptr<ExternalOracle> external_oracle_connect(const OracleSpec& spec) {
  return std::make_unique<ExternalOracle>(spec);
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw std::invalid_argument("base64: length is not a multiple of 4");
  std::vector<std::uint8_t> out(3 * text.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw std::invalid_argument("base64: invalid character");
  std::size_t padding = 0;
  if (!text.empty() && text.back() == '=') ++padding;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++padding;
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

std::string encode_request(std::uint64_t id, const Image& image) {
  const nlohmann::json request = {{"id", id}, {"image_png_b64", base64_encode(encode_png(image))}};
  return request.dump();
}

std::vector<Detection> parse_response(std::string_view frame, std::uint64_t expected_id) {
  const nlohmann::json j = nlohmann::json::parse(frame, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) {
    throw ProtocolError("protocol violation: response is not valid JSON", std::string(frame));
  }
  if (!j.is_object()) throw field_error("", "response is not a JSON object", frame);
  if (!j.contains("id")) throw field_error("id", "response is missing field 'id'", frame);
  if (!j.at("id").is_number_unsigned()) {
    throw field_error("id", "field 'id' must be an unsigned integer", frame);
  }
  const auto id = j.at("id").get<std::uint64_t>();
  if (id != expected_id) {
    throw field_error("id", "response id " + std::to_string(id) + " does not match request id " +
                                std::to_string(expected_id), frame);
  }
  if (j.contains("error")) {
    const auto& e = j.at("error");
    throw RemoteOracleError("oracle reported error: " + (e.is_string() ? e.get<std::string>() : e.dump()));
  }
  if (!j.contains("detections")) {
    throw field_error("detections", "response is missing field 'detections'", frame);
  }
  const auto& list = j.at("detections");
  if (!list.is_array()) throw field_error("detections", "field 'detections' must be an array", frame);

  std::vector<Detection> out;
  out.reserve(list.size());
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto& d = list[i];
    const std::string where = "detections[" + std::to_string(i) + "]";
    if (!d.is_object()) throw field_error(where, where + " must be an object", frame);

    if (!d.contains("box")) throw field_error(where + ".box", where + " is missing 'box'", frame);
    const auto& b = d.at("box");
    if (!b.is_array() || b.size() != 4 ||
        !std::all_of(b.begin(), b.end(), [](const nlohmann::json& v) { return v.is_number(); })) {
      throw field_error(where + ".box", where + ".box must be [x0, y0, x1, y1]", frame);
    }
    Detection det;
    det.box = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
    if (!det.box.valid()) throw field_error(where + ".box", where + ".box is empty or inverted", frame);

    if (!d.contains("objectness") || !d.at("objectness").is_number()) {
      throw field_error(where + ".objectness", where + ".objectness must be a number", frame);
    }
    det.objectness = d.at("objectness").get<double>();
    if (!(det.objectness >= 0.0 && det.objectness <= 1.0)) {
      throw field_error(where + ".objectness", where + ".objectness must lie in [0, 1]", frame);
    }

    if (!d.contains("class_id") || !d.at("class_id").is_number_integer()) {
      throw field_error(where + ".class_id", where + ".class_id must be an integer", frame);
    }
    det.class_id = d.at("class_id").get<int>();
    out.push_back(det);
  }
  return out;
}

nlohmann::json detections_to_json(std::span<const Detection> detections) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& d : detections) {
    list.push_back({{"box", {d.box.x_min, d.box.y_min, d.box.x_max, d.box.y_max}},
                    {"objectness", d.objectness},
                    {"class_id", d.class_id}});
  }
  return list;
}

}  // namespace adcp
