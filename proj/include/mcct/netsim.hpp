#pragma once

#include "mcct/rng.hpp"
#include "mcct/wire.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcct {

/// The eight cloud links. Pairs share one measured delay distribution:
/// vehicle up/down, camera up / facility down, virtual platform up/down,
/// HMI up/down.
enum class LinkId : std::uint8_t { VehicleUp, VehicleDown, CameraUp, FacilityDown, UnityUp, UnityDown, HmiUp, HmiDown };

inline constexpr std::array<LinkId, 8> kAllLinks{LinkId::VehicleUp, LinkId::VehicleDown, LinkId::CameraUp,
                                                 LinkId::FacilityDown, LinkId::UnityUp, LinkId::UnityDown,
                                                 LinkId::HmiUp, LinkId::HmiDown};

const char* link_name(LinkId id);

/// Delay distribution of one link, in milliseconds.
///
/// Delays are drawn from a latent Gaussian clamped at zero. The latent mean
/// and std are solved so that the clamped samples keep the configured mean
/// and std; for the links whose std exceeds the mean a plain clamp of
/// N(mean, std) would inflate the mean by up to 2x. The upper clamp is
/// max(2 * p99, latent mean + 6 latent std).
class LinkModel {
 public:
  LinkModel() = default;
  LinkModel(LinkId id, double delay_mean, double delay_std, double delay_p99);

  /// Measured values for the pair a link belongs to.
  static LinkModel measured(LinkId id);
  static LinkModel zero(LinkId id) { return {id, 0.0, 0.0, 0.0}; }

  LinkId id() const { return id_; }
  double delay_mean() const { return mean_; }
  double delay_std() const { return std_; }
  double delay_p99() const { return p99_; }
  double latent_mean() const { return latent_mean_; }
  double latent_std() const { return latent_std_; }
  double upper_clamp() const { return upper_; }

  /// One delay sample in seconds.
  double sample_seconds(std::mt19937_64& rng) const;

 private:
  LinkId id_ = LinkId::VehicleUp;
  double mean_ = 0.0;
  double std_ = 0.0;
  double p99_ = 0.0;
  double latent_mean_ = 0.0;
  double latent_std_ = 0.0;
  double upper_ = 0.0;
};

/// Mean and std of max(0, X) for X ~ N(mu, sigma).
std::pair<double, double> rectified_gaussian_moments(double mu, double sigma);

class UnknownLink : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

struct Envelope {
  std::uint64_t seq = 0;
  std::string sender_id;
  std::string recipient_id;
  LinkId link = LinkId::VehicleUp;
  double send_time = 0.0;
  double deliver_time = 0.0;
  wire::Message payload;
};

/// Delay-injecting priority queue. Delivery order is (deliver_time,
/// sender_id, seq). Each sender's messages arrive in the order they were
/// sent: a sampled delivery time earlier than the sender's previous one is
/// raised to it.
class MessageBus {
 public:
  explicit MessageBus(std::uint64_t seed = 0) : seed_(seed) {}

  void register_link(const LinkModel& model);
  bool has_link(LinkId id) const { return links_.count(id) != 0; }
  const LinkModel& link(LinkId id) const;

  /// Queues a message using the bus's own per-link random stream.
  const Envelope& send(LinkId link, const std::string& sender, const std::string& recipient, wire::Message msg,
                       double t_now);
  /// Queues a message with an explicitly supplied random stream.
  const Envelope& send(LinkId link, const std::string& sender, const std::string& recipient, wire::Message msg,
                       double t_now, std::mt19937_64& rng);
  /// Queues a message with a fixed delay (seconds); used for replaying
  /// decisions and by tests.
  const Envelope& send_with_delay(LinkId link, const std::string& sender, const std::string& recipient,
                                  wire::Message msg, double t_now, double delay);

  /// Removes and returns every envelope with deliver_time <= t_now. A
  /// nanosecond of slack absorbs rounding in tick arithmetic.
  static constexpr double kDeliverySlack = 1e-9;
  std::vector<Envelope> deliver_due(double t_now);

  std::size_t pending() const { return queue_.size(); }
  std::optional<double> next_delivery_time() const;

 private:
  std::mt19937_64 make_link_stream(LinkId id) const;
  const Envelope& enqueue(LinkId link, const std::string& sender, const std::string& recipient, wire::Message msg,
                          double t_now, double delay);

  struct Later {
    bool operator()(const Envelope& a, const Envelope& b) const;
  };

  std::uint64_t seed_;
  std::map<LinkId, LinkModel> links_;
  std::map<LinkId, std::mt19937_64> streams_;
  std::map<std::string, std::uint64_t> next_seq_;
  std::map<std::string, double> last_deliver_;
  std::priority_queue<Envelope, std::vector<Envelope>, Later> queue_;
  Envelope last_sent_;
};

}  // namespace mcct
