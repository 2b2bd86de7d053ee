#include "mcct/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

namespace mcct {

namespace {

constexpr std::size_t kMaxFrame = 1 << 20;

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (host.empty() || host == "0.0.0.0" || host == "*") {
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    return addr;
  }
  if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || !res)
    throw NetworkError("cannot resolve host '" + host + "'");
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  freeaddrinfo(res);
  return addr;
}

}  // namespace

LineSocket::LineSocket(int fd) : fd_(fd) {
  int one = 1;
  setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

LineSocket::~LineSocket() {
  if (fd_ >= 0) ::close(fd_);
}

std::optional<std::string> LineSocket::read_line() {
  for (;;) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl + 1);
      buffer_.erase(0, nl + 1);
      return line;
    }
    if (buffer_.size() > kMaxFrame) throw NetworkError("frame exceeds 1 MiB");
    char chunk[4096];
    const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n == 0) return std::nullopt;
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == ECONNRESET || errno == ENOTCONN || errno == EBADF) return std::nullopt;
      throw NetworkError(errno_text("recv"));
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void LineSocket::write(const std::string& bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EPIPE || errno == ECONNRESET) throw PeerClosed(errno_text("send"));
      throw NetworkError(errno_text("send"));
    }
    sent += static_cast<std::size_t>(n);
  }
}

void LineSocket::shutdown() { ::shutdown(fd_, SHUT_RDWR); }

TcpListener::TcpListener(const std::string& host, std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw NetworkError(errno_text("socket"));
  int one = 1;
  setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr = resolve(host, port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
    const std::string err = errno_text("bind");
    ::close(fd_);
    throw NetworkError(err + " (" + host + ":" + std::to_string(port) + ")");
  }
  if (::listen(fd_, 64) < 0) {
    const std::string err = errno_text("listen");
    ::close(fd_);
    throw NetworkError(err);
  }
  socklen_t len = sizeof addr;
  getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<LineSocket> TcpListener::accept(int timeout_ms) {
  pollfd p{fd_, POLLIN, 0};
  const int r = ::poll(&p, 1, timeout_ms);
  if (r <= 0) return nullptr;
  const int c = ::accept(fd_, nullptr, nullptr);
  if (c < 0) return nullptr;
  return std::make_unique<LineSocket>(c);
}

std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& endpoint) {
  const auto colon = endpoint.rfind(':');
  if (colon == std::string::npos) throw std::invalid_argument("endpoint '" + endpoint + "' is not host:port");
  const std::string host = endpoint.substr(0, colon);
  int port = -1;
  try {
    std::size_t used = 0;
    port = std::stoi(endpoint.substr(colon + 1), &used);
    if (used != endpoint.size() - colon - 1) port = -1;
  } catch (const std::exception&) {
    port = -1;
  }
  if (port < 0 || port > 65535) throw std::invalid_argument("endpoint '" + endpoint + "' has an invalid port");
  return {host, static_cast<std::uint16_t>(port)};
}

std::unique_ptr<LineSocket> connect_tcp(const std::string& host, std::uint16_t port, double timeout_s) {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
  const sockaddr_in addr = resolve(host, port);
  for (;;) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw NetworkError(errno_text("socket"));
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) == 0)
      return std::make_unique<LineSocket>(fd);
    const std::string err = errno_text("connect");
    ::close(fd);
    if (std::chrono::steady_clock::now() >= deadline)
      throw NetworkError(err + " (" + host + ":" + std::to_string(port) + ")");
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

namespace {

/// Ingress from every connection, drained by the single control loop.
struct NetEvent {
  enum class Kind { Accepted, Message, Closed } kind = Kind::Message;
  std::size_t conn = 0;
  std::shared_ptr<LineSocket> socket;
  wire::Message msg;
};

class EventQueue {
 public:
  void push(NetEvent e) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      q_.push_back(std::move(e));
    }
    cv_.notify_one();
  }
  template <typename Deadline>
  std::optional<NetEvent> pop(Deadline deadline) {
    std::unique_lock<std::mutex> lock(mu_);
    if (!cv_.wait_until(lock, deadline, [&] { return !q_.empty(); })) return std::nullopt;
    NetEvent e = std::move(q_.front());
    q_.pop_front();
    return e;
  }
  std::optional<NetEvent> try_pop() {
    std::lock_guard<std::mutex> lock(mu_);
    if (q_.empty()) return std::nullopt;
    NetEvent e = std::move(q_.front());
    q_.pop_front();
    return e;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<NetEvent> q_;
};

struct Peer {
  std::shared_ptr<LineSocket> socket;
  std::string id;  // registered entity id, empty until registration
  EntityKind kind = EntityKind::Console;
  bool open = true;
};

/// Remote agents behind TCP connections, owned by the control loop.
class RemoteAgentPool : public AgentPool {
 public:
  RemoteAgentPool(const Scenario& sc, const ServeOptions& opt, EventQueue& events, bool lockstep)
      : sc_(sc), opt_(opt), events_(events), lockstep_(lockstep) {
    for (const auto& v : sc.vehicles) kinds_[v.spec.id] = v.spec.kind;
  }

  void wait_for_agents() {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(opt_.register_timeout);
    while (agent_conn_.size() < sc_.vehicles.size()) {
      auto e = events_.pop(deadline);
      if (!e) throw NetworkError("timed out waiting for " + std::to_string(sc_.vehicles.size() - agent_conn_.size()) +
                                 " agent(s) to register");
      handle(std::move(*e));
    }
  }

  std::vector<Routed> tick(double t, std::int64_t step, bool report_tick) override {
    (void)report_tick;
    const std::string frame = wire::encode(wire::Tick{t, step});
    for (const auto& v : sc_.vehicles) send_to(agent_conn_.at(v.spec.id), frame);

    if (lockstep_) {
      acked_.clear();
      const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(opt_.tick_timeout);
      while (acked_.size() < sc_.vehicles.size()) {
        auto e = events_.pop(deadline);
        if (!e) throw NetworkError("lockstep barrier timed out at step " + std::to_string(step));
        handle(std::move(*e), step);
      }
    } else {
      while (auto e = events_.try_pop()) handle(std::move(*e), step);
    }

    std::vector<Routed> out;
    for (const auto& v : sc_.vehicles) {
      auto& buf = pending_[v.spec.id];
      for (auto& m : buf) out.push_back(route_upstream(v.spec.kind, v.spec.id, std::move(m)));
      buf.clear();
    }
    return out;
  }

  bool deliver(const Envelope& e) override {
    for (const auto& [id, conn] : agent_conn_) {
      if (e.recipient_id == id || e.recipient_id == driver_id(id)) {
        send_to(conn, wire::encode(e.payload));
        return true;
      }
    }
    return false;
  }

  void deliver_external(const Envelope& e) {
    for (auto& [conn, peer] : peers_)
      if (peer.open && peer.kind == EntityKind::Console && peer.id == e.recipient_id) send_to(conn, wire::encode(e.payload));
  }

  std::vector<std::pair<std::string, wire::Message>> take_external() {
    if (!lockstep_)
      while (auto e = events_.try_pop()) handle(std::move(*e));
    std::vector<std::pair<std::string, wire::Message>> out;
    out.swap(external_);
    return out;
  }

  void close_all() {
    for (auto& [conn, peer] : peers_) {
      if (peer.socket) peer.socket->shutdown();
      peer.open = false;
    }
  }

 private:
  void send_to(std::size_t conn, const std::string& frame) {
    Peer& p = peers_.at(conn);
    if (!p.open) return;
    try {
      p.socket->write(frame);
    } catch (const NetworkError&) {
      p.open = false;
      if (p.kind != EntityKind::Console) throw NetworkError("lost connection to agent '" + p.id + "'");
    }
  }

  void handle(NetEvent e, std::int64_t step = -1) {
    switch (e.kind) {
      case NetEvent::Kind::Accepted: peers_[e.conn] = Peer{e.socket, "", EntityKind::Console, true}; return;
      case NetEvent::Kind::Closed: {
        Peer& p = peers_[e.conn];
        p.open = false;
        if (!p.id.empty() && p.kind != EntityKind::Console) throw NetworkError("agent '" + p.id + "' disconnected");
        return;
      }
      case NetEvent::Kind::Message: break;
    }
    Peer& p = peers_.at(e.conn);
    if (p.id.empty()) {
      register_peer(e.conn, p, e.msg);
      return;
    }
    if (p.kind == EntityKind::Console) {
      external_.emplace_back(p.id, std::move(e.msg));
      return;
    }
    if (const auto* ack = std::get_if<wire::TickAck>(&e.msg)) {
      if (ack->step == step && ack->id == p.id) acked_.insert(p.id);
      return;
    }
    pending_[p.id].push_back(std::move(e.msg));
  }

  void register_peer(std::size_t conn, Peer& p, const wire::Message& msg) {
    const auto* reg = std::get_if<wire::Register>(&msg);
    if (!reg) {
      reject(p, "first frame must be a register message");
      return;
    }
    const EntityKind kind = parse_entity_kind(reg->kind);
    if (kind == EntityKind::Console) {
      if (console_ids_.count(reg->id) || kinds_.count(reg->id)) {
        reject(p, "id '" + reg->id + "' is taken");
        return;
      }
      p.id = reg->id;
      p.kind = kind;
      console_ids_.insert(reg->id);
      external_.emplace_back(reg->id, msg);
      if (opt_.verbose) std::cerr << "console '" << reg->id << "' connected\n";
      return;
    }
    const auto it = kinds_.find(reg->id);
    if (it == kinds_.end() || it->second != kind || agent_conn_.count(reg->id)) {
      reject(p, "no free platoon slot for " + reg->kind + " '" + reg->id + "'");
      return;
    }
    p.id = reg->id;
    p.kind = kind;
    agent_conn_[reg->id] = conn;
    const auto v = std::find_if(sc_.vehicles.begin(), sc_.vehicles.end(),
                                [&](const ScenarioVehicle& s) { return s.spec.id == reg->id; });
    const VehicleState s0 = initial_state(sc_, *v);
    send_to(conn, wire::encode(wire::State{reg->id, 0.0, s0.pose.x, s0.pose.y, s0.pose.theta, s0.v}));
    if (opt_.verbose) std::cerr << "agent '" << reg->id << "' (" << reg->kind << ") registered\n";
  }

  void reject(Peer& p, const std::string& why) {
    if (opt_.verbose) std::cerr << "rejecting connection: " << why << "\n";
    p.open = false;
    p.socket->shutdown();
  }

  const Scenario& sc_;
  const ServeOptions& opt_;
  EventQueue& events_;
  bool lockstep_;
  std::map<std::string, EntityKind> kinds_;
  std::map<std::size_t, Peer> peers_;
  std::map<std::string, std::size_t> agent_conn_;
  std::set<std::string> console_ids_;
  std::map<std::string, std::vector<wire::Message>> pending_;
  std::set<std::string> acked_;
  std::vector<std::pair<std::string, wire::Message>> external_;
};

void read_loop(std::size_t conn, std::shared_ptr<LineSocket> socket, EventQueue& events) {
  try {
    while (auto line = socket->read_line()) {
      try {
        events.push({NetEvent::Kind::Message, conn, nullptr, wire::decode(*line)});
      } catch (const wire::MalformedFrame& e) {
        std::cerr << "connection " << conn << ": dropped malformed frame: " << e.what() << "\n";
      }
    }
  } catch (const NetworkError& e) {
    std::cerr << "connection " << conn << ": " << e.what() << "\n";
  }
  events.push({NetEvent::Kind::Closed, conn, nullptr, {}});
}

}  // namespace

RunResult serve(const Scenario& sc, const ServeOptions& opt, const SimulationHooks& extra) {
  const auto [host, port] = parse_endpoint(opt.listen);
  TcpListener listener(host, port);
  if (!opt.port_file.empty()) {
    std::ofstream pf(opt.port_file);
    pf << listener.port() << "\n";
  }
  if (opt.verbose) std::cerr << "listening on " << host << ":" << listener.port() << "\n";

  EventQueue events;
  std::atomic<bool> stopping{false};
  std::vector<std::thread> readers;
  std::mutex readers_mu;
  std::thread acceptor([&] {
    std::size_t next = 0;
    while (!stopping) {
      auto sock = listener.accept(100);
      if (!sock) continue;
      std::shared_ptr<LineSocket> shared(std::move(sock));
      const std::size_t conn = next++;
      events.push({NetEvent::Kind::Accepted, conn, shared, {}});
      std::lock_guard<std::mutex> lock(readers_mu);
      readers.emplace_back(read_loop, conn, shared, std::ref(events));
    }
  });

  const bool lockstep = sc.mode == RunMode::Lockstep;
  RemoteAgentPool pool(sc, opt, events, lockstep);
  auto shutdown = [&] {
    pool.close_all();
    stopping = true;
    acceptor.join();
    std::lock_guard<std::mutex> lock(readers_mu);
    for (auto& r : readers) r.join();
  };

  try {
    pool.wait_for_agents();
    SimulationHooks hooks = extra;
    hooks.poll_external = [&](double) { return pool.take_external(); };
    hooks.on_external_delivery = [&](const Envelope& e) { pool.deliver_external(e); };
    if (!lockstep && !hooks.pace) hooks.pace = wall_clock_pacer(opt.realtime_speed);
    RunResult r = run_simulation(sc, pool, hooks);
    shutdown();
    return r;
  } catch (...) {
    shutdown();
    throw;
  }
}

namespace {

void serve_ticks(LineSocket& sock, VehicleAgent& agent, double dt, std::int64_t spc, const std::string& id) {
  while (auto line = sock.read_line()) {
    wire::Message msg;
    try {
      msg = wire::decode(*line);
    } catch (const wire::MalformedFrame& e) {
      std::cerr << "agent " << id << ": dropped malformed frame: " << e.what() << "\n";
      continue;
    }
    if (const auto* tick = std::get_if<wire::Tick>(&msg)) {
      agent.advance(tick->t, dt);
      for (const auto& m : agent.emit(tick->t, tick->step % spc == 0)) sock.write(wire::encode(m));
      sock.write(wire::encode(wire::TickAck{tick->step, id}));
    } else {
      agent.receive(msg);
    }
  }
}

}  // namespace

void run_agent(const Scenario& sc, const AgentOptions& opt) {
  const std::string kind_name = opt.kind == "hdv-script" ? "hdv" : opt.kind;
  const EntityKind kind = parse_entity_kind(kind_name);
  const auto v = std::find_if(sc.vehicles.begin(), sc.vehicles.end(),
                              [&](const ScenarioVehicle& s) { return s.spec.id == opt.id; });
  if (v == sc.vehicles.end()) throw std::invalid_argument("scenario has no vehicle '" + opt.id + "'");
  if (v->spec.kind != kind)
    throw std::invalid_argument("vehicle '" + opt.id + "' is " + entity_kind_name(v->spec.kind) + " in the scenario");

  const auto [host, port] = parse_endpoint(opt.connect);
  auto sock = connect_tcp(host, port, opt.connect_timeout);
  sock->write(wire::encode(wire::Register{v->spec.id, kind_name, kind == EntityKind::EmulatedPhysical ? "mini" : "full"}));

  const auto first = sock->read_line();
  if (!first) throw NetworkError("coordinator closed the stream during registration");
  const wire::Message reply = wire::decode(*first);
  const auto* s0 = std::get_if<wire::State>(&reply);
  if (!s0 || s0->id != opt.id) throw NetworkError("expected the initial state after registration");
  VehicleState init = initial_state(sc, *v);
  init.pose = {s0->x, s0->y, s0->theta};
  init.v = s0->v;
  init.timestamp = s0->t;
  VehicleAgent agent(v->spec.id, v->spec.kind, v->params, init, sc.track, sc.seed, sc.localization, v->script);

  const auto spc = static_cast<std::int64_t>(sc.physics_steps_per_control());
  try {
    serve_ticks(*sock, agent, sc.physics_dt, spc, opt.id);
  } catch (const PeerClosed&) {
    // The coordinator finished while a reply was in flight.
  }
}

}  // namespace mcct
