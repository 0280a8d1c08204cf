#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "consentlog/splog.hpp"

namespace consentlog {

/// Time source for the pipeline. The wall clock backs real runs; benchmark
/// virtual-time mode bypasses the broker clock entirely and stamps records
/// analytically.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_ns() = 0;
  virtual void sleep_ns(std::int64_t ns) = 0;
};

/// Monotonic clock starting at zero when constructed.
class WallClock final : public Clock {
 public:
  WallClock();
  std::int64_t now_ns() override;
  void sleep_ns(std::int64_t ns) override;

 private:
  std::int64_t epoch_ns_;
};

struct Record {
  std::string key;
  std::string value;
  std::uint64_t offset = 0;
  std::int64_t enqueue_ns = 0;
};

struct PolledRecord {
  std::uint32_t partition = 0;
  Record record;
};

/// Per-record fixed framing overhead counted by storage accounting.
inline constexpr std::uint64_t kRecordHeaderBytes = 16;

/// Stable keyed partitioning (FNV-1a 64).
std::uint64_t stable_hash(std::string_view key) noexcept;

/// In-process partitioned commit log: append-only partitions, keyed
/// producers, consumer groups with exclusive balanced assignment, committed
/// offsets. Internally synchronized; any number of producers and consumers
/// may operate concurrently.
class Broker {
 public:
  explicit Broker(Clock* clock = nullptr);

  // --- topics -------------------------------------------------------------

  void create_topic(const std::string& name, std::uint32_t n_partitions,
                    std::uint32_t replication_factor);
  bool has_topic(const std::string& name) const;
  std::uint32_t partition_count(const std::string& topic) const;
  std::uint32_t replication_factor(const std::string& topic) const;
  std::uint32_t partition_for(const std::string& topic,
                              std::string_view key) const;

  std::pair<std::uint32_t, std::uint64_t> produce(const std::string& topic,
                                                  std::string key,
                                                  std::string value);
  std::pair<std::uint32_t, std::uint64_t> produce_at(const std::string& topic,
                                                     std::string key,
                                                     std::string value,
                                                     std::int64_t enqueue_ns);

  std::uint64_t partition_size(const std::string& topic,
                               std::uint32_t partition) const;
  Record read_record(const std::string& topic, std::uint32_t partition,
                     std::uint64_t offset) const;

  /// Sum of value, key and fixed header bytes over all records, times the
  /// topic's replication factor.
  std::uint64_t storage_bytes(const std::string& topic) const;

  // --- consumer groups ------------------------------------------------------

  using Assignment = std::map<std::uint32_t, std::string>;

  /// Adds a member and rebalances: partitions are redistributed round-robin
  /// over the sorted member ids, so assignments are deterministic and member
  /// partition counts differ by at most one. Committed offsets survive;
  /// uncommitted read positions rewind (at-least-once across rebalances).
  Assignment join_group(const std::string& group, const std::string& topic,
                        const std::string& consumer);
  Assignment leave_group(const std::string& group, const std::string& consumer);

  std::vector<PolledRecord> poll(const std::string& group,
                                 const std::string& consumer,
                                 std::size_t max_records);
  void commit(const std::string& group, const std::string& consumer,
              std::uint32_t partition, std::uint64_t offset);

  Assignment assignment(const std::string& group) const;
  std::map<std::uint32_t, std::int64_t> committed(const std::string& group) const;
  std::vector<std::string> group_members(const std::string& group) const;
  std::vector<std::string> group_names() const;
  std::vector<std::string> topic_names() const;

  ordered_json inspect(const std::string& topic) const;

  Clock& clock() { return *clock_; }

 private:
  struct Partition {
    mutable std::mutex mu;
    std::deque<Record> records;
    std::uint64_t payload_bytes = 0;
  };

  struct Topic {
    std::uint32_t replication = 1;
    std::vector<std::unique_ptr<Partition>> partitions;
  };

  struct Group {
    mutable std::mutex mu;
    std::string topic;
    std::set<std::string> members;
    Assignment assignment;
    std::map<std::uint32_t, std::int64_t> committed;  // last committed offset
    std::map<std::uint32_t, std::uint64_t> position;  // next fetch offset
  };

  const Topic& topic_ref(const std::string& name) const;
  Group& group_ref(const std::string& name) const;
  static void rebalance_locked(Group& g, std::uint32_t n_partitions);

  std::unique_ptr<Clock> owned_clock_;
  Clock* clock_;
  mutable std::mutex topics_mu_;
  std::map<std::string, Topic> topics_;
  mutable std::mutex groups_mu_;
  mutable std::map<std::string, std::unique_ptr<Group>> groups_;
};

/// Per-user consent history: assertions and revocations ordered by validity
/// time, at most one active policy per user at any instant. apply() is
/// idempotent on entry ids, so redelivered records do not duplicate history.
class ConsentStore {
 public:
  struct Resolution {
    enum class Kind : std::uint8_t { NoConsent, Revoked, Active };
    Kind kind = Kind::NoConsent;
    std::shared_ptr<const GeneralPolicy> policy;  // Active only
    std::string entry_id;                         // assertion or revocation id
  };

  void apply(const LogEntry& e);
  Resolution resolve(const std::string& user, TimestampMs at) const;
  std::size_t user_count() const;

 private:
  struct Item {
    TimestampMs at;
    bool revocation;
    std::shared_ptr<const GeneralPolicy> policy;
    std::string entry_id;
  };

  mutable std::mutex mu_;
  std::map<std::string, std::vector<Item>> history_;
  std::set<std::string> seen_;
};

struct CheckerOptions {
  std::string group = "checkers";
  std::string compliance_topic;
  std::int64_t injected_delay_ns = 0;
  std::atomic<bool>* stop = nullptr;
  std::size_t max_poll = 64;
  std::int64_t idle_backoff_ns = 200'000;
  /// Maps clock ns to wall timestamps for ComplianceRecord.check_time.
  TimestampMs epoch_ms = 0;
};

struct CheckerStats {
  std::size_t records_processed = 0;
  std::size_t events_checked = 0;
  std::size_t consents_applied = 0;
  std::size_t malformed = 0;
};

/// Pure checking step shared by the threaded checker and the virtual-time
/// simulator: resolves consent at the event's validity time and decides
/// compliance.
struct CheckOutcome {
  bool compliant = false;
  ComplianceReason reason = ComplianceReason::NoMatch;
  std::optional<std::string> consent_entry_id;
};
CheckOutcome check_event(const LogEntry& event, const ConsentStore& store,
                         const Taxonomy& taxonomy);

/// Consumer loop: polls the application topic via the given group, applies
/// consent entries to the store, checks data events, appends a
/// ComplianceRecord per event to the compliance topic (keyed by user) and
/// commits after each append. Malformed records yield a NoMatch record with a
/// parse-error message and never halt the loop. Runs until *stop is set.
CheckerStats run_checker(Broker& broker, const std::string& consumer_id,
                         const std::string& app_topic, ConsentStore& store,
                         const Taxonomy& taxonomy, const CheckerOptions& opts);

}  // namespace consentlog
