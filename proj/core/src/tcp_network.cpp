#include "qof/tcp_network.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <fstream>
#include <sstream>

namespace qof::net {

namespace {

bool read_exact(int fd, std::uint8_t* buf, std::size_t len) {
  std::size_t got = 0;
  while (got < len) {
    ssize_t r = ::recv(fd, buf + got, len - got, 0);
    if (r <= 0) return false;
    got += static_cast<std::size_t>(r);
  }
  return true;
}

bool write_all(int fd, const std::uint8_t* buf, std::size_t len) {
  std::size_t sent = 0;
  while (sent < len) {
    ssize_t r = ::send(fd, buf + sent, len - sent, MSG_NOSIGNAL);
    if (r <= 0) return false;
    sent += static_cast<std::size_t>(r);
  }
  return true;
}

}  // namespace

std::vector<Endpoint> parse_topology(const std::string& text) {
  std::vector<Endpoint> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::uint32_t id;
    std::string addr;
    if (!(ls >> id >> addr)) throw ConfigError("bad topology line: " + line);
    auto colon = addr.rfind(':');
    if (colon == std::string::npos)
      throw ConfigError("topology address needs host:port: " + line);
    Endpoint ep;
    ep.host = addr.substr(0, colon);
    ep.port = static_cast<std::uint16_t>(std::stoul(addr.substr(colon + 1)));
    if (out.size() <= id) out.resize(id + 1);
    out[id] = ep;
  }
  for (const auto& ep : out)
    if (ep.port == 0) throw ConfigError("topology has gaps");
  return out;
}

std::vector<Endpoint> load_topology(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open topology file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_topology(ss.str());
}

std::vector<Endpoint> local_topology(std::uint32_t n, std::uint16_t base_port) {
  std::vector<Endpoint> out(n);
  for (std::uint32_t i = 0; i < n; ++i)
    out[i] = Endpoint{"127.0.0.1", static_cast<std::uint16_t>(base_port + i)};
  return out;
}

TcpNetwork::TcpNetwork(PartyId self, std::vector<Endpoint> topology)
    : self_(self), topology_(std::move(topology)) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw ConfigError("socket() failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = INADDR_ANY;
  addr.sin_port = htons(topology_[self_.index].port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0)
    throw ConfigError("bind() failed on port " +
                      std::to_string(topology_[self_.index].port));
  if (::listen(listen_fd_, 64) < 0) throw ConfigError("listen() failed");
  acceptor_ = std::thread([this] { accept_loop(); });
}

TcpNetwork::~TcpNetwork() { shutdown(); }

void TcpNetwork::shutdown() {
  {
    std::lock_guard lock(mu_);
    if (stopping_) return;
    stopping_ = true;
    if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    for (auto& [peer, fd] : out_fds_) {
      ::shutdown(fd, SHUT_RDWR);
      ::close(fd);
    }
    out_fds_.clear();
    // Readers block in recv on the accepted sockets; unblock them too.
    for (int fd : in_fds_) ::shutdown(fd, SHUT_RDWR);
    in_fds_.clear();
  }
  if (acceptor_.joinable()) acceptor_.join();
  for (auto& t : readers_)
    if (t.joinable()) t.join();
}

void TcpNetwork::register_sink(PartyId to, std::function<void(Bytes)> sink) {
  if (to != self_) throw ConfigError("TcpNetwork serves exactly one party");
  sink_ = std::move(sink);
}

void TcpNetwork::accept_loop() {
  while (true) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) return;  // shutdown
    std::lock_guard lock(mu_);
    if (stopping_) {
      ::close(fd);
      return;
    }
    in_fds_.push_back(fd);
    readers_.emplace_back([this, fd] { reader_loop(fd); });
  }
}

void TcpNetwork::reader_loop(int fd) {
  while (true) {
    std::uint8_t len_buf[4];
    if (!read_exact(fd, len_buf, 4)) break;
    std::uint32_t len = (std::uint32_t{len_buf[0]} << 24) |
                        (std::uint32_t{len_buf[1]} << 16) |
                        (std::uint32_t{len_buf[2]} << 8) |
                        std::uint32_t{len_buf[3]};
    if (len > (1u << 24)) break;  // oversized frame: drop connection
    Bytes frame(len);
    if (!read_exact(fd, frame.data(), len)) break;
    if (!sink_) continue;
    if (executor_) {
      executor_([this, f = std::move(frame)]() mutable { sink_(std::move(f)); });
    } else {
      sink_(std::move(frame));
    }
  }
  ::close(fd);
}

int TcpNetwork::connect_to(std::uint32_t peer) {
  const Endpoint& ep = topology_.at(peer);
  for (int attempt = 0; attempt < 100; ++attempt) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) return -1;
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(ep.port);
    if (::inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) != 1) {
      ::close(fd);
      return -1;
    }
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0)
      return fd;
    ::close(fd);
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    std::lock_guard lock(mu_);
    if (stopping_) return -1;
  }
  return -1;
}

void TcpNetwork::send_frame(PartyId from, PartyId to, Bytes frame) {
  if (from != self_) throw ConfigError("TcpNetwork sends only for its party");
  if (to == self_) {
    if (!sink_) return;
    if (executor_) {
      executor_([this, f = std::move(frame)]() mutable { sink_(std::move(f)); });
    } else {
      sink_(std::move(frame));
    }
    return;
  }
  int fd = -1;
  {
    std::lock_guard lock(mu_);
    if (stopping_) return;
    auto it = out_fds_.find(to.index);
    if (it != out_fds_.end()) fd = it->second;
  }
  if (fd < 0) {
    fd = connect_to(to.index);
    if (fd < 0) return;  // peer unreachable: drop (fail-stop model)
    std::lock_guard lock(mu_);
    auto [it, inserted] = out_fds_.emplace(to.index, fd);
    if (!inserted) {
      ::close(fd);
      fd = it->second;
    }
  }
  std::uint8_t len_buf[4];
  std::uint32_t len = static_cast<std::uint32_t>(frame.size());
  len_buf[0] = static_cast<std::uint8_t>(len >> 24);
  len_buf[1] = static_cast<std::uint8_t>(len >> 16);
  len_buf[2] = static_cast<std::uint8_t>(len >> 8);
  len_buf[3] = static_cast<std::uint8_t>(len);
  std::lock_guard lock(mu_);
  if (stopping_) return;
  if (!write_all(fd, len_buf, 4) ||
      !write_all(fd, frame.data(), frame.size())) {
    auto it = out_fds_.find(to.index);
    if (it != out_fds_.end() && it->second == fd) {
      ::close(fd);
      out_fds_.erase(it);
    }
  }
}

}  // namespace qof::net
