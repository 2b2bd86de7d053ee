#include "mcct/netsim.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>

namespace mcct {

namespace {

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * EIGEN_PI); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// mean / std of max(0, X), X ~ N(z, 1); increasing in z.
double rectified_ratio(double z) {
  const auto [m, s] = rectified_gaussian_moments(z, 1.0);
  return m / s;
}

}  // namespace

const char* link_name(LinkId id) {
  switch (id) {
    case LinkId::VehicleUp: return "VehicleUp";
    case LinkId::VehicleDown: return "VehicleDown";
    case LinkId::CameraUp: return "CameraUp";
    case LinkId::FacilityDown: return "FacilityDown";
    case LinkId::UnityUp: return "UnityUp";
    case LinkId::UnityDown: return "UnityDown";
    case LinkId::HmiUp: return "HmiUp";
    case LinkId::HmiDown: return "HmiDown";
  }
  return "?";
}

std::pair<double, double> rectified_gaussian_moments(double mu, double sigma) {
  if (sigma <= 0.0) return {std::max(mu, 0.0), 0.0};
  const double z = mu / sigma;
  const double cdf = normal_cdf(z);
  const double pdf = normal_pdf(z);
  const double m1 = sigma * (z * cdf + pdf);
  const double m2 = sigma * sigma * ((z * z + 1.0) * cdf + z * pdf);
  return {m1, std::sqrt(std::max(m2 - m1 * m1, 0.0))};
}

LinkModel::LinkModel(LinkId id, double delay_mean, double delay_std, double delay_p99)
    : id_(id), mean_(delay_mean), std_(delay_std), p99_(delay_p99) {
  if (!(delay_mean >= 0.0) || !(delay_std >= 0.0) || !(delay_p99 >= 0.0))
    throw std::invalid_argument(std::string("link ") + link_name(id) + ": delay parameters must be >= 0");
  if (delay_std == 0.0 || delay_mean == 0.0) {
    latent_mean_ = delay_mean;
    latent_std_ = delay_mean == 0.0 ? 0.0 : delay_std;
  } else {
    const double target = delay_mean / delay_std;
    double lo = -10.0;
    double hi = std::max(10.0, 2.0 * target);
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (rectified_ratio(mid) < target ? lo : hi) = mid;
    }
    const double z = 0.5 * (lo + hi);
    latent_std_ = delay_mean / rectified_gaussian_moments(z, 1.0).first;
    latent_mean_ = z * latent_std_;
  }
  upper_ = std::max(2.0 * p99_, latent_mean_ + 6.0 * latent_std_);
}

LinkModel LinkModel::measured(LinkId id) {
  switch (id) {
    case LinkId::VehicleUp:
    case LinkId::VehicleDown: return {id, 1.33, 0.66, 2.86};
    case LinkId::CameraUp:
    case LinkId::FacilityDown: return {id, 4.23, 1.72, 8.23};
    case LinkId::UnityUp:
    case LinkId::UnityDown: return {id, 0.38, 1.17, 3.09};
    case LinkId::HmiUp:
    case LinkId::HmiDown: return {id, 0.36, 2.74, 6.74};
  }
  throw UnknownLink("unknown link id");
}

double LinkModel::sample_seconds(std::mt19937_64& rng) const {
  if (latent_std_ == 0.0) return std::clamp(latent_mean_, 0.0, upper_) * 1e-3;
  std::normal_distribution<double> d(latent_mean_, latent_std_);
  return std::clamp(d(rng), 0.0, upper_) * 1e-3;
}

bool MessageBus::Later::operator()(const Envelope& a, const Envelope& b) const {
  if (a.deliver_time != b.deliver_time) return a.deliver_time > b.deliver_time;
  if (a.sender_id != b.sender_id) return a.sender_id > b.sender_id;
  return a.seq > b.seq;
}

void MessageBus::register_link(const LinkModel& model) {
  links_[model.id()] = model;
  streams_.insert_or_assign(model.id(), make_link_stream(model.id()));
}

std::mt19937_64 MessageBus::make_link_stream(LinkId id) const {
  return make_stream(seed_, std::string("link:") + link_name(id));
}

const LinkModel& MessageBus::link(LinkId id) const {
  const auto it = links_.find(id);
  if (it == links_.end()) throw UnknownLink(std::string("link ") + link_name(id) + " is not registered");
  return it->second;
}

const Envelope& MessageBus::send(LinkId link_id, const std::string& sender, const std::string& recipient,
                                 wire::Message msg, double t_now) {
  const LinkModel& model = link(link_id);
  return enqueue(link_id, sender, recipient, std::move(msg), t_now, model.sample_seconds(streams_.at(link_id)));
}

const Envelope& MessageBus::send(LinkId link_id, const std::string& sender, const std::string& recipient,
                                 wire::Message msg, double t_now, std::mt19937_64& rng) {
  const LinkModel& model = link(link_id);
  return enqueue(link_id, sender, recipient, std::move(msg), t_now, model.sample_seconds(rng));
}

const Envelope& MessageBus::send_with_delay(LinkId link_id, const std::string& sender, const std::string& recipient,
                                            wire::Message msg, double t_now, double delay) {
  link(link_id);
  if (!(delay >= 0.0)) throw std::invalid_argument("delay must be >= 0");
  return enqueue(link_id, sender, recipient, std::move(msg), t_now, delay);
}

const Envelope& MessageBus::enqueue(LinkId link_id, const std::string& sender, const std::string& recipient,
                                    wire::Message msg, double t_now, double delay) {
  Envelope e;
  e.seq = next_seq_[sender]++;
  e.sender_id = sender;
  e.recipient_id = recipient;
  e.link = link_id;
  e.send_time = t_now;
  e.deliver_time = t_now + delay;
  auto [it, fresh] = last_deliver_.try_emplace(sender, e.deliver_time);
  if (!fresh) {
    e.deliver_time = std::max(e.deliver_time, it->second);
    it->second = e.deliver_time;
  }
  e.payload = std::move(msg);
  queue_.push(e);
  last_sent_ = std::move(e);
  return last_sent_;
}

std::vector<Envelope> MessageBus::deliver_due(double t_now) {
  std::vector<Envelope> out;
  while (!queue_.empty() && queue_.top().deliver_time <= t_now + kDeliverySlack) {
    out.push_back(queue_.top());
    queue_.pop();
  }
  return out;
}

std::optional<double> MessageBus::next_delivery_time() const {
  if (queue_.empty()) return std::nullopt;
  return queue_.top().deliver_time;
}

}  // namespace mcct
