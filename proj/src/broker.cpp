#include "consentlog/broker.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

namespace consentlog {

WallClock::WallClock()
    : epoch_ns_(std::chrono::duration_cast<std::chrono::nanoseconds>(
                    std::chrono::steady_clock::now().time_since_epoch())
                    .count()) {}

std::int64_t WallClock::now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
             .count() -
         epoch_ns_;
}

void WallClock::sleep_ns(std::int64_t ns) {
  if (ns > 0) std::this_thread::sleep_for(std::chrono::nanoseconds(ns));
}

std::uint64_t stable_hash(std::string_view key) noexcept {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : key) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Broker::Broker(Clock* clock) {
  if (clock) {
    clock_ = clock;
  } else {
    owned_clock_ = std::make_unique<WallClock>();
    clock_ = owned_clock_.get();
  }
}

void Broker::create_topic(const std::string& name, std::uint32_t n_partitions,
                          std::uint32_t replication_factor) {
  if (n_partitions < 1) {
    raise(Errc::BadPartitionCount, "topic " + name + " needs >= 1 partition");
  }
  if (replication_factor < 1) {
    raise(Errc::BadPartitionCount,
          "topic " + name + " needs replication factor >= 1");
  }
  std::lock_guard lk(topics_mu_);
  if (topics_.contains(name)) {
    raise(Errc::DuplicateTopic, "topic " + name + " already exists");
  }
  Topic& t = topics_[name];
  t.replication = replication_factor;
  t.partitions.reserve(n_partitions);
  for (std::uint32_t i = 0; i < n_partitions; ++i) {
    t.partitions.push_back(std::make_unique<Partition>());
  }
}

bool Broker::has_topic(const std::string& name) const {
  std::lock_guard lk(topics_mu_);
  return topics_.contains(name);
}

const Broker::Topic& Broker::topic_ref(const std::string& name) const {
  std::lock_guard lk(topics_mu_);
  const auto it = topics_.find(name);
  if (it == topics_.end()) {
    raise(Errc::UnknownTopic, "topic " + name + " does not exist");
  }
  return it->second;
}

std::uint32_t Broker::partition_count(const std::string& topic) const {
  return static_cast<std::uint32_t>(topic_ref(topic).partitions.size());
}

std::uint32_t Broker::replication_factor(const std::string& topic) const {
  return topic_ref(topic).replication;
}

std::uint32_t Broker::partition_for(const std::string& topic,
                                    std::string_view key) const {
  const auto& t = topic_ref(topic);
  return static_cast<std::uint32_t>(stable_hash(key) % t.partitions.size());
}

std::pair<std::uint32_t, std::uint64_t> Broker::produce(
    const std::string& topic, std::string key, std::string value) {
  return produce_at(topic, std::move(key), std::move(value), clock_->now_ns());
}

std::pair<std::uint32_t, std::uint64_t> Broker::produce_at(
    const std::string& topic, std::string key, std::string value,
    std::int64_t enqueue_ns) {
  const auto& t = topic_ref(topic);
  const auto p =
      static_cast<std::uint32_t>(stable_hash(key) % t.partitions.size());
  Partition& part = *t.partitions[p];
  std::lock_guard lk(part.mu);
  const std::uint64_t offset = part.records.size();
  part.payload_bytes += key.size() + value.size() + kRecordHeaderBytes;
  part.records.push_back(
      Record{std::move(key), std::move(value), offset, enqueue_ns});
  return {p, offset};
}

std::uint64_t Broker::partition_size(const std::string& topic,
                                     std::uint32_t partition) const {
  const auto& t = topic_ref(topic);
  const Partition& part = *t.partitions.at(partition);
  std::lock_guard lk(part.mu);
  return part.records.size();
}

Record Broker::read_record(const std::string& topic, std::uint32_t partition,
                           std::uint64_t offset) const {
  const auto& t = topic_ref(topic);
  const Partition& part = *t.partitions.at(partition);
  std::lock_guard lk(part.mu);
  return part.records.at(offset);
}

std::uint64_t Broker::storage_bytes(const std::string& topic) const {
  const auto& t = topic_ref(topic);
  std::uint64_t sum = 0;
  for (const auto& part : t.partitions) {
    std::lock_guard lk(part->mu);
    sum += part->payload_bytes;
  }
  return sum * t.replication;
}

Broker::Group& Broker::group_ref(const std::string& name) const {
  std::lock_guard lk(groups_mu_);
  const auto it = groups_.find(name);
  if (it == groups_.end()) {
    raise(Errc::UnknownMember, "consumer group " + name + " does not exist");
  }
  return *it->second;
}

void Broker::rebalance_locked(Group& g, std::uint32_t n_partitions) {
  g.assignment.clear();
  g.position.clear();
  if (g.members.empty()) return;
  std::vector<std::string> members(g.members.begin(), g.members.end());
  for (std::uint32_t p = 0; p < n_partitions; ++p) {
    g.assignment[p] = members[p % members.size()];
    const auto it = g.committed.find(p);
    g.position[p] =
        it == g.committed.end() ? 0 : static_cast<std::uint64_t>(it->second + 1);
  }
}

Broker::Assignment Broker::join_group(const std::string& group,
                                      const std::string& topic,
                                      const std::string& consumer) {
  const auto n_partitions = partition_count(topic);
  std::unique_lock glk(groups_mu_);
  auto& slot = groups_[group];
  if (!slot) {
    slot = std::make_unique<Group>();
    slot->topic = topic;
  }
  Group& g = *slot;
  glk.unlock();

  std::lock_guard lk(g.mu);
  if (g.topic != topic) {
    raise(Errc::ConfigError, "group " + group + " is bound to topic " + g.topic);
  }
  if (!g.members.insert(consumer).second) {
    raise(Errc::ConfigError,
          consumer + " is already a member of group " + group);
  }
  rebalance_locked(g, n_partitions);
  return g.assignment;
}

Broker::Assignment Broker::leave_group(const std::string& group,
                                       const std::string& consumer) {
  Group& g = group_ref(group);
  const auto n_partitions = partition_count(g.topic);
  std::lock_guard lk(g.mu);
  if (g.members.erase(consumer) == 0) {
    raise(Errc::UnknownMember,
          consumer + " is not a member of group " + group);
  }
  rebalance_locked(g, n_partitions);
  return g.assignment;
}

std::vector<PolledRecord> Broker::poll(const std::string& group,
                                       const std::string& consumer,
                                       std::size_t max_records) {
  Group& g = group_ref(group);
  const auto& t = topic_ref(g.topic);

  std::lock_guard lk(g.mu);
  if (!g.members.contains(consumer)) {
    raise(Errc::NotAssigned, consumer + " is not a member of group " + group);
  }
  std::vector<PolledRecord> out;
  for (const auto& [p, owner] : g.assignment) {
    if (owner != consumer) continue;
    if (out.size() >= max_records) break;
    Partition& part = *t.partitions[p];
    std::lock_guard plk(part.mu);
    std::uint64_t& pos = g.position[p];
    while (pos < part.records.size() && out.size() < max_records) {
      out.push_back(PolledRecord{p, part.records[pos]});
      ++pos;
    }
  }
  return out;
}

void Broker::commit(const std::string& group, const std::string& consumer,
                    std::uint32_t partition, std::uint64_t offset) {
  Group& g = group_ref(group);
  std::lock_guard lk(g.mu);
  const auto it = g.assignment.find(partition);
  if (it == g.assignment.end() || it->second != consumer) {
    raise(Errc::NotAssigned, consumer + " does not own partition " +
                                 std::to_string(partition) + " of group " +
                                 group);
  }
  auto& committed = g.committed[partition];
  if (static_cast<std::int64_t>(offset) < committed) {
    raise(Errc::RewindRejected,
          "commit would move partition " + std::to_string(partition) +
              " back from " + std::to_string(committed) + " to " +
              std::to_string(offset));
  }
  committed = static_cast<std::int64_t>(offset);
  auto& pos = g.position[partition];
  pos = std::max(pos, offset + 1);
}

Broker::Assignment Broker::assignment(const std::string& group) const {
  Group& g = group_ref(group);
  std::lock_guard lk(g.mu);
  return g.assignment;
}

std::map<std::uint32_t, std::int64_t> Broker::committed(
    const std::string& group) const {
  Group& g = group_ref(group);
  std::lock_guard lk(g.mu);
  return g.committed;
}

std::vector<std::string> Broker::group_members(const std::string& group) const {
  Group& g = group_ref(group);
  std::lock_guard lk(g.mu);
  return {g.members.begin(), g.members.end()};
}

std::vector<std::string> Broker::group_names() const {
  std::lock_guard lk(groups_mu_);
  std::vector<std::string> out;
  for (const auto& [name, g] : groups_) out.push_back(name);
  return out;
}

std::vector<std::string> Broker::topic_names() const {
  std::lock_guard lk(topics_mu_);
  std::vector<std::string> out;
  for (const auto& [name, t] : topics_) out.push_back(name);
  return out;
}

ordered_json Broker::inspect(const std::string& topic) const {
  const auto& t = topic_ref(topic);
  ordered_json out;
  out["topic"] = topic;
  out["replicationFactor"] = t.replication;
  ordered_json parts = ordered_json::array();
  std::uint64_t total = 0;
  for (std::size_t p = 0; p < t.partitions.size(); ++p) {
    const Partition& part = *t.partitions[p];
    std::lock_guard lk(part.mu);
    parts.push_back(ordered_json{{"partition", p},
                                 {"records", part.records.size()},
                                 {"payloadBytes", part.payload_bytes}});
    total += part.records.size();
  }
  out["partitions"] = parts;
  out["totalRecords"] = total;
  out["storageBytes"] = storage_bytes(topic);

  ordered_json groups = ordered_json::object();
  std::vector<std::string> names = group_names();
  for (const auto& name : names) {
    Group& g = group_ref(name);
    std::lock_guard lk(g.mu);
    if (g.topic != topic) continue;
    ordered_json gj;
    gj["members"] = std::vector<std::string>(g.members.begin(), g.members.end());
    ordered_json assign = ordered_json::object();
    for (const auto& [p, owner] : g.assignment) {
      assign[std::to_string(p)] = owner;
    }
    gj["assignment"] = assign;
    ordered_json comm = ordered_json::object();
    for (const auto& [p, off] : g.committed) comm[std::to_string(p)] = off;
    gj["committed"] = comm;
    groups[name] = gj;
  }
  out["groups"] = groups;
  return out;
}

// --- consent store ----------------------------------------------------------------

void ConsentStore::apply(const LogEntry& e) {
  if (!is_policy_entry(e.kind)) {
    raise(Errc::ValidationError,
          "consent store only accepts policy entries, got " +
              std::string(to_string(e.kind)));
  }
  if (!e.data_subject) {
    raise(Errc::ValidationError,
          "policy entry " + e.entry_id + " has no data subject");
  }
  std::lock_guard lk(mu_);
  if (!seen_.insert(e.entry_id).second) return;  // redelivery
  Item item;
  item.at = e.validity_time;
  item.revocation = e.kind == EntryKind::ConsentRevocation;
  item.entry_id = e.entry_id;
  if (!item.revocation) {
    item.policy = std::make_shared<const GeneralPolicy>(*e.policy);
  }
  auto& hist = history_[*e.data_subject];
  const auto pos = std::upper_bound(
      hist.begin(), hist.end(), item.at,
      [](TimestampMs at, const Item& i) { return at < i.at; });
  hist.insert(pos, std::move(item));
}

ConsentStore::Resolution ConsentStore::resolve(const std::string& user,
                                               TimestampMs at) const {
  std::lock_guard lk(mu_);
  Resolution r;
  const auto it = history_.find(user);
  if (it == history_.end()) return r;
  const auto& hist = it->second;
  const auto pos = std::upper_bound(
      hist.begin(), hist.end(), at,
      [](TimestampMs t, const Item& i) { return t < i.at; });
  if (pos == hist.begin()) return r;
  const Item& item = *std::prev(pos);
  r.entry_id = item.entry_id;
  if (item.revocation) {
    r.kind = Resolution::Kind::Revoked;
  } else {
    r.kind = Resolution::Kind::Active;
    r.policy = item.policy;
  }
  return r;
}

std::size_t ConsentStore::user_count() const {
  std::lock_guard lk(mu_);
  return history_.size();
}

// --- checker ----------------------------------------------------------------------

CheckOutcome check_event(const LogEntry& event, const ConsentStore& store,
                         const Taxonomy& taxonomy) {
  CheckOutcome out;
  if (!event.data_subject) {
    out.reason = ComplianceReason::NoConsent;
    return out;
  }
  const auto res = store.resolve(*event.data_subject, event.validity_time);
  switch (res.kind) {
    case ConsentStore::Resolution::Kind::NoConsent:
      out.reason = ComplianceReason::NoConsent;
      return out;
    case ConsentStore::Resolution::Kind::Revoked:
      out.reason = ComplianceReason::Revoked;
      out.consent_entry_id = res.entry_id;
      return out;
    case ConsentStore::Resolution::Kind::Active:
      break;
  }
  const ComplianceResult r = complies(*event.content, *res.policy, taxonomy);
  out.compliant = r.compliant;
  out.reason = r.reason;
  out.consent_entry_id = res.entry_id;
  return out;
}

CheckerStats run_checker(Broker& broker, const std::string& consumer_id,
                         const std::string& app_topic, ConsentStore& store,
                         const Taxonomy& taxonomy, const CheckerOptions& opts) {
  CheckerStats stats;
  Clock& clock = broker.clock();
  while (!(opts.stop && opts.stop->load(std::memory_order_acquire))) {
    const auto batch = broker.poll(opts.group, consumer_id, opts.max_poll);
    if (batch.empty()) {
      clock.sleep_ns(opts.idle_backoff_ns);
      continue;
    }
    for (const auto& polled : batch) {
      ++stats.records_processed;
      std::optional<LogEntry> entry;
      std::string parse_note;
      try {
        entry = entry_from_json(polled.record.value);
      } catch (const Error& e) {
        parse_note = e.what();
      }

      if (entry && is_policy_entry(entry->kind)) {
        store.apply(*entry);
        ++stats.consents_applied;
        broker.commit(opts.group, consumer_id, polled.partition,
                      polled.record.offset);
        continue;
      }

      ComplianceRecord rec;
      if (entry) {
        if (opts.injected_delay_ns > 0) clock.sleep_ns(opts.injected_delay_ns);
        const auto outcome = check_event(*entry, store, taxonomy);
        rec.entry = std::move(*entry);
        rec.compliant = outcome.compliant;
        rec.reason = outcome.reason;
        rec.consent_entry_id = outcome.consent_entry_id;
        ++stats.events_checked;
      } else {
        // Poisoned record: report it, never halt the pipeline.
        rec.entry.entry_id = "malformed-" + std::to_string(polled.partition) +
                             "-" + std::to_string(polled.record.offset);
        rec.entry.log_id = app_topic;
        rec.entry.kind = EntryKind::ProcessingEvent;
        rec.entry.message = "unparseable record: " + parse_note;
        rec.compliant = false;
        rec.reason = ComplianceReason::NoMatch;
        ++stats.malformed;
      }
      const std::int64_t done_ns = clock.now_ns();
      rec.checker_id = consumer_id;
      rec.check_time = opts.epoch_ms + done_ns / 1'000'000;
      rec.latency_ns = std::max<std::int64_t>(0, done_ns - polled.record.enqueue_ns);
      const std::string key =
          rec.entry.data_subject ? *rec.entry.data_subject : rec.entry.entry_id;
      broker.produce_at(opts.compliance_topic, key, to_json(rec), done_ns);
      broker.commit(opts.group, consumer_id, polled.partition,
                    polled.record.offset);
    }
  }
  return stats;
}

}  // namespace consentlog
