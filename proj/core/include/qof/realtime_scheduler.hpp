#pragma once

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <queue>
#include <thread>

#include "qof/scheduler.hpp"

namespace qof {

/// Wall-clock scheduler backing one party in the TCP deployment: a single
/// worker thread runs all of the party's handlers, so component code keeps
/// the same single-logical-event-loop contract as under simulation. post()
/// is safe from any thread (socket readers hand frames over with it).
class RealtimeScheduler final : public Scheduler {
 public:
  RealtimeScheduler() : epoch_(std::chrono::steady_clock::now()) {
    worker_ = std::thread([this] { loop(); });
  }

  ~RealtimeScheduler() override { stop(); }

  std::uint64_t now_us() const override {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::microseconds>(
            std::chrono::steady_clock::now() - epoch_)
            .count());
  }

  void post(std::uint64_t at_us, std::int32_t,
            std::function<void()> fn) override {
    {
      std::lock_guard lock(mu_);
      if (stopping_) return;
      queue_.push(Item{at_us, seq_++, std::move(fn)});
    }
    cv_.notify_one();
  }

  void stop() {
    {
      std::lock_guard lock(mu_);
      if (stopping_) return;
      stopping_ = true;
    }
    cv_.notify_one();
    if (worker_.joinable()) worker_.join();
  }

 private:
  struct Item {
    std::uint64_t at;
    std::uint64_t seq;
    std::function<void()> fn;
    bool operator>(const Item& o) const {
      if (at != o.at) return at > o.at;
      return seq > o.seq;
    }
  };

  void loop() {
    std::unique_lock lock(mu_);
    while (true) {
      if (stopping_) return;
      if (queue_.empty()) {
        cv_.wait(lock);
        continue;
      }
      std::uint64_t due = queue_.top().at;
      std::uint64_t now = now_us();
      if (due > now) {
        cv_.wait_for(lock, std::chrono::microseconds(due - now));
        continue;
      }
      auto fn = std::move(const_cast<Item&>(queue_.top()).fn);
      queue_.pop();
      lock.unlock();
      fn();
      lock.lock();
    }
  }

  std::chrono::steady_clock::time_point epoch_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue_;
  std::uint64_t seq_ = 0;
  bool stopping_ = false;
  std::thread worker_;
};

}  // namespace qof
