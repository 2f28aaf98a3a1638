#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "qof/transport.hpp"

namespace qof::net {

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};

/// Topology file: one line per party, "<id> <host>:<port>".
std::vector<Endpoint> parse_topology(const std::string& text);
std::vector<Endpoint> load_topology(const std::string& path);
std::vector<Endpoint> local_topology(std::uint32_t n, std::uint16_t base_port);

/// TCP frame fabric for one party: one persistent connection per ordered
/// pair of parties, frames as a 4-byte big-endian length prefix followed by
/// the authenticated link bytes (the MAC travels inside the frame).
///
/// The registered sink runs on reader threads; wire it to post into the
/// party's scheduler.
class TcpNetwork final : public FrameNetwork {
 public:
  TcpNetwork(PartyId self, std::vector<Endpoint> topology);
  ~TcpNetwork() override;

  void send_frame(PartyId from, PartyId to, Bytes frame) override;
  void register_sink(PartyId to, std::function<void(Bytes)> sink) override;

  /// Frames arrive on reader threads; the executor hops delivery onto the
  /// party's event loop (post into its scheduler). Without one, the sink
  /// runs on the reader thread.
  void set_executor(std::function<void(std::function<void()>)> ex) {
    executor_ = std::move(ex);
  }

  void shutdown();

 private:
  int connect_to(std::uint32_t peer);
  void reader_loop(int fd);
  void accept_loop();

  PartyId self_;
  std::vector<Endpoint> topology_;
  std::function<void(Bytes)> sink_;
  std::function<void(std::function<void()>)> executor_;

  std::mutex mu_;
  std::map<std::uint32_t, int> out_fds_;
  std::vector<int> in_fds_;
  std::vector<std::thread> readers_;
  std::thread acceptor_;
  int listen_fd_ = -1;
  bool stopping_ = false;
};

}  // namespace qof::net
