#pragma once

#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "consentlog/broker.hpp"

namespace consentlog::testing {

/// Random produce/poll/commit/join/leave interleavings against one topic,
/// verified by a replay oracle:
///   - assignments stay balanced (sizes differ by at most one), cover every
///     partition while members exist, and map each partition to one consumer;
///   - committed offsets never regress;
///   - per (consumer, partition, rebalance-epoch) deliveries are contiguous
///     ascending offsets;
///   - delivered payloads match what was produced;
///   - after a final drain, every produced record was delivered at least once.
struct BrokerFuzzStats {
  std::size_t rounds = 0;
  std::size_t produced = 0;
  std::size_t delivered = 0;
  std::size_t rebalances = 0;
  std::size_t violations = 0;
  std::string first_violation;
};

inline BrokerFuzzStats broker_interleaving_fuzz(std::uint64_t seed, int rounds) {
  std::mt19937_64 rng(seed);
  BrokerFuzzStats stats;
  stats.rounds = static_cast<std::size_t>(rounds);

  const auto fail = [&](const std::string& what, int round) {
    ++stats.violations;
    if (stats.first_violation.empty()) {
      stats.first_violation = "round " + std::to_string(round) + ": " + what;
    }
  };

  for (int round = 0; round < rounds; ++round) {
    Broker broker;
    const std::string topic = "t";
    const auto n_partitions = static_cast<std::uint32_t>(1 + rng() % 12);
    broker.create_topic(topic, n_partitions, 1 + rng() % 2);

    struct Delivery {
      std::size_t epoch;
      std::string consumer;
      std::uint32_t partition;
      std::uint64_t offset;
    };
    std::vector<Delivery> trace;
    std::vector<std::vector<std::string>> produced(n_partitions);
    std::set<std::string> members;
    std::map<std::uint32_t, std::int64_t> last_committed;
    std::map<std::string, std::map<std::uint32_t, std::uint64_t>> delivered_high;
    std::size_t epoch = 0;
    int next_consumer = 0;

    const auto verify_assignment = [&] {
      const auto assign = broker.assignment("g");
      std::map<std::string, std::size_t> load;
      for (const auto& m : members) load[m] = 0;
      if (!members.empty() && assign.size() != n_partitions) {
        fail("unassigned partitions with live members", round);
      }
      for (const auto& [p, owner] : assign) {
        if (!members.contains(owner)) fail("assignment to non-member", round);
        ++load[owner];
      }
      if (!load.empty()) {
        std::size_t lo = SIZE_MAX, hi = 0;
        for (const auto& [m, n] : load) {
          lo = std::min(lo, n);
          hi = std::max(hi, n);
        }
        if (hi - lo > 1) fail("unbalanced assignment", round);
      }
    };

    const auto do_join = [&] {
      const std::string name = "c" + std::to_string(next_consumer++);
      broker.join_group("g", topic, name);
      members.insert(name);
      delivered_high[name].clear();
      ++epoch;
      ++stats.rebalances;
      verify_assignment();
    };

    const auto do_poll = [&](const std::string& member, std::size_t max) {
      const auto batch = broker.poll("g", member, max);
      for (const auto& polled : batch) {
        ++stats.delivered;
        trace.push_back(Delivery{epoch, member, polled.partition,
                                 polled.record.offset});
        if (polled.record.offset >= produced[polled.partition].size() ||
            produced[polled.partition][polled.record.offset] !=
                polled.record.value) {
          fail("delivered value does not match produced value", round);
        }
        delivered_high[member][polled.partition] = polled.record.offset;
      }
    };

    do_join();
    const int ops = 30 + static_cast<int>(rng() % 120);
    for (int op = 0; op < ops; ++op) {
      switch (rng() % 6) {
        case 0:
        case 1: {  // produce
          const std::string key = "k" + std::to_string(rng() % 17);
          const std::string value =
              "v" + std::to_string(round) + "-" + std::to_string(op);
          const auto [p, off] = broker.produce(topic, key, value);
          if (off != produced[p].size()) fail("offset not dense", round);
          produced[p].push_back(value);
          ++stats.produced;
          break;
        }
        case 2:
        case 3: {  // poll
          if (members.empty()) break;
          auto it = members.begin();
          std::advance(it, rng() % members.size());
          do_poll(*it, 1 + rng() % 8);
          break;
        }
        case 4: {  // commit the highest delivered offset of one partition
          if (members.empty()) break;
          auto it = members.begin();
          std::advance(it, rng() % members.size());
          const auto& highs = delivered_high[*it];
          if (highs.empty()) break;
          auto hit = highs.begin();
          std::advance(hit, rng() % highs.size());
          try {
            broker.commit("g", *it, hit->first, hit->second);
          } catch (const Error& e) {
            // losing the partition or a higher prior commit are both fine
            if (e.code() != Errc::NotAssigned &&
                e.code() != Errc::RewindRejected) {
              fail(std::string("unexpected commit error: ") + e.what(), round);
            }
          }
          const auto committed = broker.committed("g");
          for (const auto& [p, off] : committed) {
            auto lit = last_committed.find(p);
            if (lit != last_committed.end() && off < lit->second) {
              fail("committed offset regressed", round);
            }
            last_committed[p] = off;
          }
          break;
        }
        case 5: {  // membership change
          if (members.size() > 1 && rng() % 2 == 0) {
            auto it = members.begin();
            std::advance(it, rng() % members.size());
            const std::string leaving = *it;
            broker.leave_group("g", leaving);
            members.erase(leaving);
            delivered_high.erase(leaving);
            ++epoch;
            ++stats.rebalances;
            verify_assignment();
          } else {
            do_join();
          }
          break;
        }
      }
    }

    // Drain: poll every member until a full sweep comes back empty.
    if (members.empty()) do_join();
    bool any = true;
    while (any) {
      any = false;
      for (const auto& m : std::vector<std::string>(members.begin(),
                                                    members.end())) {
        const std::size_t before = trace.size();
        do_poll(m, 64);
        if (trace.size() != before) any = true;
      }
    }

    // Replay oracle over the trace.
    std::vector<std::set<std::uint64_t>> seen(n_partitions);
    std::map<std::tuple<std::size_t, std::string, std::uint32_t>,
             std::uint64_t>
        tenure_last;
    for (const auto& d : trace) {
      seen[d.partition].insert(d.offset);
      const auto key = std::make_tuple(d.epoch, d.consumer, d.partition);
      const auto it = tenure_last.find(key);
      if (it != tenure_last.end() && d.offset != it->second + 1) {
        fail("non-contiguous delivery within a tenure", round);
      }
      tenure_last[key] = d.offset;
    }
    for (std::uint32_t p = 0; p < n_partitions; ++p) {
      if (seen[p].size() != produced[p].size()) {
        std::ostringstream os;
        os << "partition " << p << " delivered " << seen[p].size() << " of "
           << produced[p].size() << " records";
        fail(os.str(), round);
      }
    }
  }
  return stats;
}

}  // namespace consentlog::testing
