#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "consentlog/policy.hpp"
#include "consentlog/reasoner.hpp"

namespace consentlog {

using ordered_json = nlohmann::ordered_json;

enum class EntryKind : std::uint8_t {
  ConsentAssertion,
  ConsentRevocation,
  ProcessingEvent,
  SharingEvent,
};

const char* to_string(EntryKind k) noexcept;
std::optional<EntryKind> entry_kind_from_string(std::string_view s) noexcept;

bool is_data_event(EntryKind k) noexcept;
bool is_policy_entry(EntryKind k) noexcept;

/// Milliseconds since the Unix epoch, UTC.
using TimestampMs = std::int64_t;

/// RFC 3339 with 'Z'; fractional milliseconds emitted only when nonzero, so
/// formatting round-trips byte-stably.
std::string format_rfc3339_ms(TimestampMs ms);
TimestampMs parse_rfc3339_ms(std::string_view s);

/// One entry of the application log: a data processing/sharing event or a
/// consent assertion/revocation.
struct LogEntry {
  std::string entry_id;
  std::string log_id;
  EntryKind kind = EntryKind::ProcessingEvent;
  std::optional<std::string> data_subject;  // absent for anonymised logs
  TimestampMs validity_time = 0;            // when the event occurred
  std::optional<TimestampMs> transaction_time;  // when it was recorded
  std::optional<std::string> message;
  std::optional<LogContent> content;     // data events
  std::optional<GeneralPolicy> policy;   // consent assertions
  std::optional<std::string> revokes;    // replaced/revoked entry id
  std::vector<std::string> recipient_instances;  // sharing events
  std::optional<std::string> immutable_record;   // opaque reference
  std::optional<std::string> bpm_activity;       // opaque
  std::optional<std::string> bpm_case;           // opaque
  ordered_json extra = ordered_json::object();   // lenient-mode passthrough

  bool operator==(const LogEntry& o) const = default;
};

/// Non-fatal observations, e.g. a transaction time earlier than the validity
/// time (allowed: events may be recorded before they take effect).
std::vector<std::string> entry_warnings(const LogEntry& e);

/// A compliance-checked event as written to the compliance topic.
struct ComplianceRecord {
  LogEntry entry;
  bool compliant = false;
  ComplianceReason reason = ComplianceReason::NoMatch;
  std::optional<std::string> consent_entry_id;
  std::string checker_id;
  TimestampMs check_time = 0;
  std::int64_t latency_ns = 0;

  bool operator==(const ComplianceRecord& o) const = default;
};

/// A set of data events sharing identical (normalized) content, summarised by
/// a validity interval and the distinct data subjects involved.
struct LogEntryGroup {
  std::string group_id;
  TimestampMs validity_start = 0;
  TimestampMs validity_end = 0;
  LogContent dimension;
  std::vector<std::string> subject_group;
  std::optional<std::vector<std::string>> entry_members;

  bool operator==(const LogEntryGroup& o) const = default;
};

/// Unknown-field handling for from_json.
enum class ParseMode : std::uint8_t { Strict, Lenient };

using PrefixMap = std::map<std::string, std::string>;

/// The fixed compaction table used on emission (the built-in vocabulary
/// prefixes). Parsing accepts these plus any extra prefixes supplied.
const PrefixMap& builtin_prefixes();

// --- JSON ---------------------------------------------------------------------

/// Deterministic single-line UTF-8 JSON with documented key order. Equal
/// values produce identical bytes.
std::string to_json(const LogEntry& e);
std::string to_json(const ComplianceRecord& r);
std::string to_json(const LogEntryGroup& g);

ordered_json content_to_json(const LogContent& c);
ordered_json policy_to_json(const GeneralPolicy& p);
LogContent content_from_json(const ordered_json& j, const PrefixMap* extra = nullptr);
GeneralPolicy policy_from_json(const ordered_json& j, const PrefixMap* extra = nullptr);

LogEntry entry_from_json(std::string_view bytes,
                         ParseMode mode = ParseMode::Strict,
                         const PrefixMap* extra = nullptr);
ComplianceRecord record_from_json(std::string_view bytes,
                                  ParseMode mode = ParseMode::Strict,
                                  const PrefixMap* extra = nullptr);
LogEntryGroup group_from_json(std::string_view bytes,
                              ParseMode mode = ParseMode::Strict,
                              const PrefixMap* extra = nullptr);

using ParsedAny = std::variant<LogEntry, ComplianceRecord, LogEntryGroup>;

/// Dispatches on the object shape: "kind" -> LogEntry, "entry" ->
/// ComplianceRecord, "groupId" -> LogEntryGroup.
ParsedAny from_json(std::string_view bytes, ParseMode mode = ParseMode::Strict,
                    const PrefixMap* extra = nullptr);

/// Static JSON-LD context naming the emitted fields; written alongside
/// generated corpora, never processed.
ordered_json jsonld_context();

// --- Turtle (emit only) --------------------------------------------------------

/// Prefix header shared by every emitted Turtle document.
std::string ttl_prefix_header();

/// Turtle rendering of one entry using the splog/spl vocabulary. Emit only;
/// no parser is provided.
std::string to_ttl(const LogEntry& e);

// --- grouping -------------------------------------------------------------------

/// Partitions data events by identical normalized content. Group validity
/// intervals span the members' validity times; subject groups list distinct
/// data subjects in first-seen order.
std::vector<LogEntryGroup> group_entries(std::span<const LogEntry> entries,
                                         bool keep_members = false);

}  // namespace consentlog
