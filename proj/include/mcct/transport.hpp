#pragma once

#include "mcct/scenario.hpp"
#include "mcct/simulation.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace mcct {

class NetworkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The peer closed its end while we were still writing.
class PeerClosed : public NetworkError {
 public:
  using NetworkError::NetworkError;
};

/// Blocking TCP stream carrying '\n'-terminated frames.
class LineSocket {
 public:
  explicit LineSocket(int fd);
  ~LineSocket();
  LineSocket(const LineSocket&) = delete;
  LineSocket& operator=(const LineSocket&) = delete;

  /// Next frame including its '\n'; empty at end of stream.
  std::optional<std::string> read_line();
  void write(const std::string& bytes);
  /// Unblocks a pending read_line on another thread.
  void shutdown();

 private:
  int fd_;
  std::string buffer_;
};

class TcpListener {
 public:
  TcpListener(const std::string& host, std::uint16_t port);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const { return port_; }
  /// Waits up to timeout_ms for a connection.
  std::unique_ptr<LineSocket> accept(int timeout_ms);

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

/// "host:port" split; throws std::invalid_argument.
std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& endpoint);

/// Retries until the peer accepts or timeout_s elapses.
std::unique_ptr<LineSocket> connect_tcp(const std::string& host, std::uint16_t port, double timeout_s);

struct ServeOptions {
  std::string listen = "127.0.0.1:7400";
  std::string port_file;          // written with the bound port once listening
  double register_timeout = 30.0; // s to wait for every platoon agent
  double tick_timeout = 30.0;     // s to wait for a lockstep barrier
  double realtime_speed = 1.0;
  bool verbose = false;
};

/// Coordinator service. Agents and consoles connect and register; once
/// every platoon vehicle has an agent the scenario runs, in lockstep (a
/// tick barrier per physics step) or paced to the wall clock.
RunResult serve(const Scenario& sc, const ServeOptions& opt, const SimulationHooks& extra = {});

struct AgentOptions {
  std::string connect = "127.0.0.1:7400";
  std::string id;
  std::string kind;  // virtual | physical | hdv-script
  double connect_timeout = 10.0;
};

/// Vehicle agent process body. Returns when the coordinator closes the
/// stream, including a close that races with the agent's last reply.
void run_agent(const Scenario& sc, const AgentOptions& opt);

}  // namespace mcct
