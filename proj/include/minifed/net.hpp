// Copyright 2026 The minifed Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/eventfd.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "minifed/errors.hpp"
#include "minifed/hostport.hpp"
#include "minifed/wire.hpp"

namespace minifed {

/// A read that hit its deadline rather than a dead peer.
class TimeoutError : public ConnectionError {
 public:
  using ConnectionError::ConnectionError;
};

class FileDescriptor {
 public:
  FileDescriptor() = default;
  explicit FileDescriptor(int fd) : fd_(fd) {}
  ~FileDescriptor() { reset(); }
  FileDescriptor(FileDescriptor&& other) noexcept
      : fd_(std::exchange(other.fd_, -1)) {}
  FileDescriptor& operator=(FileDescriptor&& other) noexcept {
    if (this != &other) {
      reset();
      fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
  }
  FileDescriptor(const FileDescriptor&) = delete;
  FileDescriptor& operator=(const FileDescriptor&) = delete;

  int get() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void reset() {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  int fd_ = -1;
};

/// Level-triggered stop signal the accept/receive loops poll alongside
/// their sockets, so shutdown is immediate rather than tick-based.
class StopEvent {
 public:
  StopEvent() : fd_(::eventfd(0, EFD_NONBLOCK | EFD_CLOEXEC)) {}
  int fd() const { return fd_.get(); }
  void signal() {
    uint64_t one = 1;
    [[maybe_unused]] ssize_t n = ::write(fd_.get(), &one, sizeof(one));
  }
  bool signalled() const {
    struct pollfd p{fd_.get(), POLLIN, 0};
    return ::poll(&p, 1, 0) > 0;
  }

 private:
  FileDescriptor fd_;
};

namespace detail {

inline sockaddr_in resolve_ipv4(const HostPort& addr) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  int rc = ::getaddrinfo(addr.host.c_str(), nullptr, &hints, &result);
  if (rc != 0 || result == nullptr) {
    throw ConnectionError("cannot resolve host: " + addr.host);
  }
  sockaddr_in out = *reinterpret_cast<sockaddr_in*>(result->ai_addr);
  ::freeaddrinfo(result);
  out.sin_port = htons(addr.port);
  return out;
}

inline void set_timeout(int fd, int opt, int ms) {
  timeval tv{};
  tv.tv_sec = ms / 1000;
  tv.tv_usec = (ms % 1000) * 1000;
  ::setsockopt(fd, SOL_SOCKET, opt, &tv, sizeof(tv));
}

}  // namespace detail

/// Blocking TCP stream with read/write timeouts and a small read buffer
/// for delimiter scans.
class TcpStream {
 public:
  explicit TcpStream(FileDescriptor fd) : fd_(std::move(fd)) {}

  static TcpStream connect(const HostPort& addr, int timeout_ms) {
    sockaddr_in sa = detail::resolve_ipv4(addr);
    FileDescriptor fd(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!fd.valid()) throw ConnectionError("socket: " + std::string(strerror(errno)));

    int flags = ::fcntl(fd.get(), F_GETFL, 0);
    ::fcntl(fd.get(), F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd.get(), reinterpret_cast<sockaddr*>(&sa), sizeof(sa));
    if (rc != 0) {
      if (errno != EINPROGRESS) {
        throw ConnectionError("connect to " + addr.str() + ": " +
                              strerror(errno));
      }
      struct pollfd p{fd.get(), POLLOUT, 0};
      rc = ::poll(&p, 1, timeout_ms);
      if (rc == 0) throw ConnectionError("connect timeout to " + addr.str());
      if (rc < 0) throw ConnectionError("poll: " + std::string(strerror(errno)));
      int err = 0;
      socklen_t len = sizeof(err);
      ::getsockopt(fd.get(), SOL_SOCKET, SO_ERROR, &err, &len);
      if (err != 0) {
        throw ConnectionError("connect to " + addr.str() + ": " +
                              strerror(err));
      }
    }
    ::fcntl(fd.get(), F_SETFL, flags);
    TcpStream s(std::move(fd));
    s.set_timeouts(timeout_ms, timeout_ms);
    return s;
  }

  void set_timeouts(int recv_ms, int send_ms) {
    detail::set_timeout(fd_.get(), SO_RCVTIMEO, recv_ms);
    detail::set_timeout(fd_.get(), SO_SNDTIMEO, send_ms);
  }

  void write_all(std::string_view data) {
    std::size_t off = 0;
    while (off < data.size()) {
      ssize_t n = ::send(fd_.get(), data.data() + off, data.size() - off,
                         MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw ConnectionError("send: " + std::string(strerror(errno)));
      }
      off += std::size_t(n);
    }
  }

  /// Reads exactly n bytes into out (appending). Throws on EOF or timeout.
  void read_exact(std::string& out, std::size_t n) {
    while (n > 0) {
      if (!buffer_.empty()) {
        std::size_t take = std::min(n, buffer_.size());
        out.append(buffer_, 0, take);
        buffer_.erase(0, take);
        n -= take;
        continue;
      }
      fill_buffer();
    }
  }

  /// Reads until `delim` is seen, returning everything up to and including
  /// it. Throws when `max` bytes pass without the delimiter.
  std::string read_until(std::string_view delim, std::size_t max) {
    std::size_t scanned = 0;
    while (true) {
      std::size_t found = buffer_.find(delim, scanned > delim.size()
                                                  ? scanned - delim.size()
                                                  : 0);
      if (found != std::string::npos) {
        std::string head = buffer_.substr(0, found + delim.size());
        buffer_.erase(0, found + delim.size());
        return head;
      }
      scanned = buffer_.size();
      if (buffer_.size() > max) {
        throw ProtocolError("missing-terminator", buffer_.size(),
                            "header section exceeds limit");
      }
      fill_buffer();
    }
  }

  /// Single byte read for frame acks. Returns false on clean EOF.
  bool read_byte(char& out) {
    if (!buffer_.empty()) {
      out = buffer_[0];
      buffer_.erase(0, 1);
      return true;
    }
    char c;
    while (true) {
      ssize_t n = ::recv(fd_.get(), &c, 1, 0);
      if (n == 1) {
        out = c;
        return true;
      }
      if (n == 0) return false;
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) {
        throw TimeoutError("read timeout");
      }
      throw ConnectionError("recv: " + std::string(strerror(errno)));
    }
  }

  /// Reads whatever is available (up to the internal chunk size); returns
  /// false on clean EOF.
  bool read_available(std::string& out) {
    if (!buffer_.empty()) {
      out.append(buffer_);
      buffer_.clear();
      return true;
    }
    char chunk[16384];
    while (true) {
      ssize_t n = ::recv(fd_.get(), chunk, sizeof(chunk), 0);
      if (n > 0) {
        out.append(chunk, std::size_t(n));
        return true;
      }
      if (n == 0) return false;
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) {
        throw TimeoutError("read timeout");
      }
      throw ConnectionError("recv: " + std::string(strerror(errno)));
    }
  }

  std::string peer() const {
    sockaddr_in sa{};
    socklen_t len = sizeof(sa);
    if (::getpeername(fd_.get(), reinterpret_cast<sockaddr*>(&sa), &len) != 0) {
      return "unknown";
    }
    char buf[INET_ADDRSTRLEN] = {};
    ::inet_ntop(AF_INET, &sa.sin_addr, buf, sizeof(buf));
    return std::string(buf) + ":" + std::to_string(ntohs(sa.sin_port));
  }

  int fd() const { return fd_.get(); }

 private:
  void fill_buffer() {
    char chunk[16384];
    while (true) {
      ssize_t n = ::recv(fd_.get(), chunk, sizeof(chunk), 0);
      if (n > 0) {
        buffer_.append(chunk, std::size_t(n));
        return;
      }
      if (n == 0) throw ConnectionError("connection closed by peer");
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) {
        throw TimeoutError("read timeout");
      }
      throw ConnectionError("recv: " + std::string(strerror(errno)));
    }
  }

  FileDescriptor fd_;
  std::string buffer_;
};

class TcpListener {
 public:
  static TcpListener bind(const std::string& host, uint16_t port) {
    FileDescriptor fd(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!fd.valid()) throw ConfigError("socket: " + std::string(strerror(errno)));
    int one = 1;
    ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in sa = detail::resolve_ipv4(HostPort{host, port});
    if (::bind(fd.get(), reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0) {
      throw ConfigError("bind " + host + ":" + std::to_string(port) + ": " +
                        strerror(errno));
    }
    if (::listen(fd.get(), 128) != 0) {
      throw ConfigError("listen: " + std::string(strerror(errno)));
    }
    return TcpListener(std::move(fd));
  }

  uint16_t port() const {
    sockaddr_in sa{};
    socklen_t len = sizeof(sa);
    ::getsockname(fd_.get(), reinterpret_cast<sockaddr*>(&sa), &len);
    return ntohs(sa.sin_port);
  }

  /// Blocks until a connection arrives or `stop` fires.
  std::optional<TcpStream> accept(const StopEvent& stop) {
    while (true) {
      struct pollfd fds[2] = {{fd_.get(), POLLIN, 0}, {stop.fd(), POLLIN, 0}};
      int rc = ::poll(fds, 2, -1);
      if (rc < 0) {
        if (errno == EINTR) continue;
        return std::nullopt;
      }
      if (fds[1].revents & POLLIN) return std::nullopt;
      if (fds[0].revents & POLLIN) {
        int conn = ::accept4(fd_.get(), nullptr, nullptr, SOCK_CLOEXEC);
        if (conn < 0) {
          if (errno == EINTR || errno == ECONNABORTED) continue;
          return std::nullopt;
        }
        return TcpStream(FileDescriptor(conn));
      }
    }
  }

 private:
  explicit TcpListener(FileDescriptor fd) : fd_(std::move(fd)) {}
  FileDescriptor fd_;
};

class UdpSocket {
 public:
  static UdpSocket bind(const std::string& host, uint16_t port) {
    FileDescriptor fd(::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0));
    if (!fd.valid()) throw ConfigError("socket: " + std::string(strerror(errno)));
    // A burst of monitoring datagrams should ride out a slow ingest tick.
    int rcvbuf = 4 * 1024 * 1024;
    ::setsockopt(fd.get(), SOL_SOCKET, SO_RCVBUF, &rcvbuf, sizeof(rcvbuf));
    sockaddr_in sa = detail::resolve_ipv4(HostPort{host, port});
    if (::bind(fd.get(), reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0) {
      throw ConfigError("bind udp " + host + ":" + std::to_string(port) +
                        ": " + strerror(errno));
    }
    return UdpSocket(std::move(fd));
  }

  static UdpSocket sender() {
    FileDescriptor fd(::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0));
    if (!fd.valid()) throw ConfigError("socket: " + std::string(strerror(errno)));
    return UdpSocket(std::move(fd));
  }

  uint16_t port() const {
    sockaddr_in sa{};
    socklen_t len = sizeof(sa);
    ::getsockname(fd_.get(), reinterpret_cast<sockaddr*>(&sa), &len);
    return ntohs(sa.sin_port);
  }

  void send_to(const HostPort& addr, std::string_view datagram) {
    sockaddr_in sa = detail::resolve_ipv4(addr);
    ::sendto(fd_.get(), datagram.data(), datagram.size(), MSG_NOSIGNAL,
             reinterpret_cast<sockaddr*>(&sa), sizeof(sa));
  }

  /// Blocks until a datagram arrives or `stop` fires (nullopt on stop).
  std::optional<std::string> recv(const StopEvent& stop) {
    while (true) {
      struct pollfd fds[2] = {{fd_.get(), POLLIN, 0}, {stop.fd(), POLLIN, 0}};
      int rc = ::poll(fds, 2, -1);
      if (rc < 0) {
        if (errno == EINTR) continue;
        return std::nullopt;
      }
      if (fds[1].revents & POLLIN) return std::nullopt;
      if (fds[0].revents & POLLIN) {
        char buf[65536];
        ssize_t n = ::recvfrom(fd_.get(), buf, sizeof(buf), 0, nullptr, nullptr);
        if (n < 0) continue;
        return std::string(buf, std::size_t(n));
      }
    }
  }

 private:
  explicit UdpSocket(FileDescriptor fd) : fd_(std::move(fd)) {}
  FileDescriptor fd_;
};

// Stream-level framing on top of the byte codec in wire.hpp.

inline void frame_write(TcpStream& stream, std::string_view payload) {
  stream.write_all(frame_encode(payload));
}

inline std::string frame_read(TcpStream& stream) {
  std::string header;
  stream.read_exact(header, 4);
  uint32_t n = frame_declared_len(header.data());
  std::string payload;
  payload.reserve(n);
  stream.read_exact(payload, n);
  return payload;
}

/// Sends a request and reads the full response on a fresh connection
/// (the protocol is one request per connection).
inline Response send_request(const HostPort& addr, const Request& req,
                             int timeout_ms = 5000) {
  TcpStream stream = TcpStream::connect(addr, timeout_ms);
  stream.write_all(encode_request(req));
  std::string head = stream.read_until("\r\n\r\n", 64 * 1024);
  Headers headers = detail::parse_header_lines(
      head, head.find("\r\n") + 2, head.size() - 4);
  std::string body;
  if (auto cl = get_header(headers, "Content-Length")) {
    std::size_t n = 0;
    for (char c : *cl) {
      if (c < '0' || c > '9') {
        throw ProtocolError("bad-content-length", 0, std::string(*cl));
      }
      n = n * 10 + std::size_t(c - '0');
    }
    stream.read_exact(body, n);
  }
  return decode_response(head + body);
}

}  // namespace minifed
