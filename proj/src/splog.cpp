#include "consentlog/splog.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_map>

namespace consentlog {

const char* to_string(EntryKind k) noexcept {
  switch (k) {
    case EntryKind::ConsentAssertion: return "ConsentAssertion";
    case EntryKind::ConsentRevocation: return "ConsentRevocation";
    case EntryKind::ProcessingEvent: return "ProcessingEvent";
    case EntryKind::SharingEvent: return "SharingEvent";
  }
  return "?";
}

std::optional<EntryKind> entry_kind_from_string(std::string_view s) noexcept {
  if (s == "ConsentAssertion") return EntryKind::ConsentAssertion;
  if (s == "ConsentRevocation") return EntryKind::ConsentRevocation;
  if (s == "ProcessingEvent") return EntryKind::ProcessingEvent;
  if (s == "SharingEvent") return EntryKind::SharingEvent;
  return std::nullopt;
}

bool is_data_event(EntryKind k) noexcept {
  return k == EntryKind::ProcessingEvent || k == EntryKind::SharingEvent;
}

bool is_policy_entry(EntryKind k) noexcept { return !is_data_event(k); }

// --- timestamps -----------------------------------------------------------------

namespace {

// Proleptic-Gregorian civil-date conversion on day counts since 1970-01-01.
std::int64_t days_from_civil(std::int64_t y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2) / 5 +
                       static_cast<unsigned>(d) - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y += (m <= 2);
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  return a / b - ((a % b != 0) && ((a % b < 0) != (b < 0)));
}

}  // namespace

std::string format_rfc3339_ms(TimestampMs ms) {
  const std::int64_t days = floor_div(ms, 86'400'000);
  std::int64_t rem = ms - days * 86'400'000;
  const int milli = static_cast<int>(rem % 1000);
  rem /= 1000;
  const int sec = static_cast<int>(rem % 60);
  const int min = static_cast<int>((rem / 60) % 60);
  const int hour = static_cast<int>(rem / 3600);
  std::int64_t y;
  int mo, d;
  civil_from_days(days, y, mo, d);
  char buf[40];
  if (milli != 0) {
    std::snprintf(buf, sizeof buf, "%04lld-%02d-%02dT%02d:%02d:%02d.%03dZ",
                  static_cast<long long>(y), mo, d, hour, min, sec, milli);
  } else {
    std::snprintf(buf, sizeof buf, "%04lld-%02d-%02dT%02d:%02d:%02dZ",
                  static_cast<long long>(y), mo, d, hour, min, sec);
  }
  return buf;
}

TimestampMs parse_rfc3339_ms(std::string_view s) {
  const auto bad = [&]() -> TimestampMs {
    raise(Errc::ParseError, "bad RFC 3339 timestamp: '" + std::string(s) + "'");
  };
  const auto digits = [&](std::size_t pos, std::size_t n) -> std::int64_t {
    std::int64_t v = 0;
    if (pos + n > s.size()) bad();
    for (std::size_t i = 0; i < n; ++i) {
      const char c = s[pos + i];
      if (c < '0' || c > '9') bad();
      v = v * 10 + (c - '0');
    }
    return v;
  };
  if (s.size() < 20) bad();
  const std::int64_t y = digits(0, 4);
  if (s[4] != '-') bad();
  const int mo = static_cast<int>(digits(5, 2));
  if (s[7] != '-') bad();
  const int d = static_cast<int>(digits(8, 2));
  if (s[10] != 'T' && s[10] != 't') bad();
  const int h = static_cast<int>(digits(11, 2));
  if (s[13] != ':') bad();
  const int mi = static_cast<int>(digits(14, 2));
  if (s[16] != ':') bad();
  const int sec = static_cast<int>(digits(17, 2));
  std::size_t pos = 19;
  int milli = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    std::size_t nd = 0;
    std::int64_t frac = 0;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      if (nd < 3) frac = frac * 10 + (s[pos] - '0');
      ++nd;
      ++pos;
    }
    if (nd == 0) bad();
    while (nd < 3) {
      frac *= 10;
      ++nd;
    }
    milli = static_cast<int>(frac);
  }
  if (pos + 1 != s.size() || (s[pos] != 'Z' && s[pos] != 'z')) bad();
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec > 60) bad();
  return days_from_civil(y, mo, d) * 86'400'000 + h * 3'600'000 + mi * 60'000 +
         sec * 1000 + milli;
}

// --- prefixes -------------------------------------------------------------------

const PrefixMap& builtin_prefixes() {
  static const PrefixMap p = [] {
    PrefixMap m;
    const Taxonomy builtin = Taxonomy::builtin_special();
    for (const auto& [prefix, ns] : builtin.prefixes()) m[prefix] = ns;
    m["splog"] = std::string(iri::kSplogPrefix);
    return m;
  }();
  return p;
}

namespace {

std::string expand_name(const std::string& name, const PrefixMap* extra) {
  if (name.find("://") != std::string::npos) return name;
  const auto colon = name.find(':');
  if (colon == std::string::npos) {
    raise(Errc::ValidationError,
          "class name '" + name + "' is neither an IRI nor prefix:Local");
  }
  const std::string prefix = name.substr(0, colon);
  const auto& builtin = builtin_prefixes();
  if (auto it = builtin.find(prefix); it != builtin.end()) {
    return it->second + name.substr(colon + 1);
  }
  if (extra) {
    if (auto it = extra->find(prefix); it != extra->end()) {
      return it->second + name.substr(colon + 1);
    }
  }
  raise(Errc::ValidationError, "unknown prefix in class name '" + name + "'");
}

std::string compact_name(const std::string& iri) {
  for (const auto& [prefix, ns] : builtin_prefixes()) {
    if (prefix == "splog") continue;
    if (iri.size() > ns.size() && iri.compare(0, ns.size(), ns) == 0) {
      return prefix + ":" + iri.substr(ns.size());
    }
  }
  return iri;
}

const std::string& null_iri() {
  static const std::string n = iri::null_class();
  return n;
}

}  // namespace

// --- class expressions ----------------------------------------------------------

namespace {

ordered_json expr_to_json(const ClassExpr& e) {
  switch (e.kind) {
    case ExprKind::Atom:
      return compact_name(e.atom);
    case ExprKind::Top:
      return compact_name(iri::any_root(e.category));
    case ExprKind::Null:
      return "spl:Null";
    case ExprKind::Union: {
      ordered_json arr = ordered_json::array();
      for (const auto& p : e.parts) arr.push_back(expr_to_json(p));
      return arr;
    }
    case ExprKind::Intersection: {
      ordered_json arr = ordered_json::array();
      for (const auto& p : e.parts) arr.push_back(expr_to_json(p));
      return ordered_json{{"allOf", arr}};
    }
  }
  return nullptr;
}

ClassExpr expr_from_json(const ordered_json& j, Category cat,
                         const PrefixMap* extra) {
  if (j.is_string()) {
    const std::string expanded = expand_name(j.get<std::string>(), extra);
    if (expanded == null_iri()) return ClassExpr::null(cat);
    return ClassExpr::atom_of(expanded);
  }
  if (j.is_array()) {
    if (j.empty()) raise(Errc::EmptyUnion, "empty union array");
    std::vector<ClassExpr> parts;
    parts.reserve(j.size());
    for (const auto& p : j) parts.push_back(expr_from_json(p, cat, extra));
    return ClassExpr::union_of(std::move(parts));
  }
  if (j.is_object()) {
    if (j.size() != 1 || !j.contains("allOf")) {
      raise(Errc::ValidationError,
            "class expression object must be {\"allOf\": [...]}");
    }
    const auto& arr = j.at("allOf");
    if (!arr.is_array() || arr.empty()) {
      raise(Errc::EmptyUnion, "allOf must be a non-empty array");
    }
    std::vector<ClassExpr> parts;
    parts.reserve(arr.size());
    for (const auto& p : arr) parts.push_back(expr_from_json(p, cat, extra));
    return ClassExpr::intersection_of(std::move(parts));
  }
  raise(Errc::ValidationError, "class expression must be string, array or object");
}

ordered_json storage_to_json(const StorageExpr& s) {
  ordered_json out;
  out["location"] = expr_to_json(s.location);
  const auto& d = s.duration;
  if (d.kind == DurationExpr::Kind::Class) {
    out["durationClass"] = compact_name(d.duration_class);
  } else if (d.max_days && *d.max_days == d.min_days) {
    out["durationDays"] = d.min_days;
  } else {
    out["minDays"] = d.min_days;
    if (d.max_days) out["maxDays"] = *d.max_days;
  }
  return out;
}

StorageExpr storage_from_json(const ordered_json& j, const PrefixMap* extra) {
  if (!j.is_object() || !j.contains("location")) {
    raise(Errc::ValidationError, "storage must be an object with a location");
  }
  StorageExpr s;
  s.location = expr_from_json(j.at("location"), Category::Location, extra);
  const bool has_days = j.contains("durationDays");
  const bool has_class = j.contains("durationClass");
  const bool has_min = j.contains("minDays");
  if (has_days + has_class + has_min > 1) {
    raise(Errc::ValidationError,
          "storage must use exactly one of durationDays, durationClass, "
          "minDays/maxDays");
  }
  for (const auto& [key, value] : j.items()) {
    if (key != "location" && key != "durationDays" && key != "durationClass" &&
        key != "minDays" && key != "maxDays") {
      raise(Errc::ValidationError, "unknown storage field '" + key + "'");
    }
  }
  if (has_class) {
    s.duration = DurationExpr::of_class(
        expand_name(j.at("durationClass").get<std::string>(), extra));
  } else if (has_days) {
    s.duration = DurationExpr::days(j.at("durationDays").get<std::int64_t>());
  } else if (has_min) {
    std::optional<std::int64_t> max;
    if (j.contains("maxDays")) max = j.at("maxDays").get<std::int64_t>();
    s.duration = DurationExpr::interval(j.at("minDays").get<std::int64_t>(), max);
  } else if (j.contains("maxDays")) {
    s.duration = DurationExpr::interval(0, j.at("maxDays").get<std::int64_t>());
  } else {
    raise(Errc::ValidationError, "storage is missing a duration");
  }
  return s;
}

}  // namespace

ordered_json content_to_json(const LogContent& c) {
  ordered_json out;
  out["data"] = expr_to_json(c.data);
  out["processing"] = expr_to_json(c.processing);
  out["purpose"] = expr_to_json(c.purpose);
  out["storage"] = storage_to_json(c.storage);
  out["recipient"] = expr_to_json(c.recipient);
  return out;
}

LogContent content_from_json(const ordered_json& j, const PrefixMap* extra) {
  if (!j.is_object()) {
    raise(Errc::ValidationError, "content must be a JSON object");
  }
  for (const auto& [key, value] : j.items()) {
    if (key != "data" && key != "processing" && key != "purpose" &&
        key != "storage" && key != "recipient") {
      raise(Errc::ValidationError, "unknown content field '" + key + "'");
    }
  }
  for (const char* key : {"data", "processing", "purpose", "storage", "recipient"}) {
    if (!j.contains(key)) {
      raise(Errc::ValidationError, std::string("content is missing '") + key + "'");
    }
  }
  LogContent c;
  c.data = expr_from_json(j.at("data"), Category::Data, extra);
  c.processing = expr_from_json(j.at("processing"), Category::Processing, extra);
  c.purpose = expr_from_json(j.at("purpose"), Category::Purpose, extra);
  c.storage = storage_from_json(j.at("storage"), extra);
  c.recipient = expr_from_json(j.at("recipient"), Category::Recipient, extra);
  return c;
}

ordered_json policy_to_json(const GeneralPolicy& p) {
  ordered_json arr = ordered_json::array();
  for (const auto& b : p.basics) arr.push_back(content_to_json(b));
  return ordered_json{{"basics", arr}};
}

GeneralPolicy policy_from_json(const ordered_json& j, const PrefixMap* extra) {
  if (!j.is_object() || !j.contains("basics") || !j.at("basics").is_array()) {
    raise(Errc::ValidationError, "policy must be {\"basics\": [...]}");
  }
  if (j.size() != 1) {
    raise(Errc::ValidationError, "policy object must contain only 'basics'");
  }
  GeneralPolicy p;
  for (const auto& b : j.at("basics")) {
    p.basics.push_back(content_from_json(b, extra));
  }
  if (p.basics.empty()) {
    raise(Errc::ValidationError, "policy needs at least one basic policy");
  }
  return p;
}

// --- entries ----------------------------------------------------------------------

namespace {

const std::vector<std::string>& entry_known_keys() {
  static const std::vector<std::string> keys = {
      "id",      "log",     "kind",    "dataSubject",
      "validityTime", "transactionTime", "message", "content",
      "revokes", "recipientInstances",  "immutableRecord", "bpm"};
  return keys;
}

ordered_json entry_to_json_obj(const LogEntry& e) {
  ordered_json out;
  out["id"] = e.entry_id;
  out["log"] = e.log_id;
  out["kind"] = to_string(e.kind);
  if (e.data_subject) out["dataSubject"] = *e.data_subject;
  out["validityTime"] = format_rfc3339_ms(e.validity_time);
  if (e.transaction_time) {
    out["transactionTime"] = format_rfc3339_ms(*e.transaction_time);
  }
  if (e.message) out["message"] = *e.message;
  if (e.kind == EntryKind::ConsentAssertion && e.policy) {
    out["content"] = policy_to_json(*e.policy);
  } else if (e.content) {
    out["content"] = content_to_json(*e.content);
  }
  if (e.revokes) out["revokes"] = *e.revokes;
  if (!e.recipient_instances.empty()) {
    out["recipientInstances"] = e.recipient_instances;
  }
  if (e.immutable_record) out["immutableRecord"] = *e.immutable_record;
  if (e.bpm_activity || e.bpm_case) {
    ordered_json bpm;
    if (e.bpm_activity) bpm["activity"] = *e.bpm_activity;
    if (e.bpm_case) bpm["case"] = *e.bpm_case;
    out["bpm"] = bpm;
  }
  for (const auto& [key, value] : e.extra.items()) out[key] = value;
  return out;
}

ordered_json parse_object(std::string_view bytes) {
  ordered_json j;
  try {
    j = ordered_json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    raise(Errc::ParseError,
          std::string(e.what()) + " (byte " + std::to_string(e.byte) + ")");
  }
  if (!j.is_object()) raise(Errc::ValidationError, "expected a JSON object");
  return j;
}

LogEntry entry_from_json_obj(const ordered_json& j, ParseMode mode,
                             const PrefixMap* extra) {
  LogEntry e;
  for (const char* key : {"id", "log", "kind", "validityTime"}) {
    if (!j.contains(key)) {
      raise(Errc::ValidationError, std::string("entry is missing '") + key + "'");
    }
  }
  e.entry_id = j.at("id").get<std::string>();
  e.log_id = j.at("log").get<std::string>();
  const auto kind = entry_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) {
    raise(Errc::ValidationError,
          "unknown entry kind '" + j.at("kind").get<std::string>() + "'");
  }
  e.kind = *kind;
  if (j.contains("dataSubject")) {
    e.data_subject = j.at("dataSubject").get<std::string>();
  }
  e.validity_time = parse_rfc3339_ms(j.at("validityTime").get<std::string>());
  if (j.contains("transactionTime")) {
    e.transaction_time =
        parse_rfc3339_ms(j.at("transactionTime").get<std::string>());
  }
  if (j.contains("message")) e.message = j.at("message").get<std::string>();
  if (j.contains("content")) {
    if (e.kind == EntryKind::ConsentAssertion) {
      e.policy = policy_from_json(j.at("content"), extra);
    } else {
      e.content = content_from_json(j.at("content"), extra);
    }
  }
  if (j.contains("revokes")) e.revokes = j.at("revokes").get<std::string>();
  if (j.contains("recipientInstances")) {
    e.recipient_instances =
        j.at("recipientInstances").get<std::vector<std::string>>();
  }
  if (j.contains("immutableRecord")) {
    e.immutable_record = j.at("immutableRecord").get<std::string>();
  }
  if (j.contains("bpm")) {
    const auto& bpm = j.at("bpm");
    if (bpm.contains("activity")) {
      e.bpm_activity = bpm.at("activity").get<std::string>();
    }
    if (bpm.contains("case")) e.bpm_case = bpm.at("case").get<std::string>();
  }
  const auto& known = entry_known_keys();
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      if (mode == ParseMode::Strict) {
        raise(Errc::ValidationError, "unknown entry field '" + key + "'");
      }
      e.extra[key] = value;
    }
  }

  // MUST rules of the log model.
  if (is_data_event(e.kind) && !e.content) {
    raise(Errc::ValidationError,
          "content required: a data event must reference the actual data use");
  }
  if (e.kind == EntryKind::ConsentAssertion && !e.policy) {
    raise(Errc::ValidationError,
          "content required: a consent assertion must carry the usage policy");
  }
  return e;
}

}  // namespace

std::vector<std::string> entry_warnings(const LogEntry& e) {
  std::vector<std::string> w;
  if (e.transaction_time && *e.transaction_time < e.validity_time) {
    w.push_back("transactionTime precedes validityTime (recorded before occurrence)");
  }
  if (!e.data_subject && is_data_event(e.kind)) {
    w.push_back("data event without dataSubject (anonymised log)");
  }
  return w;
}

std::string to_json(const LogEntry& e) { return entry_to_json_obj(e).dump(); }

LogEntry entry_from_json(std::string_view bytes, ParseMode mode,
                         const PrefixMap* extra) {
  return entry_from_json_obj(parse_object(bytes), mode, extra);
}

std::string to_json(const ComplianceRecord& r) {
  ordered_json out;
  out["entry"] = entry_to_json_obj(r.entry);
  out["compliant"] = r.compliant;
  out["reason"] = to_string(r.reason);
  if (r.consent_entry_id) out["consentEntryId"] = *r.consent_entry_id;
  out["checkerId"] = r.checker_id;
  out["checkTime"] = format_rfc3339_ms(r.check_time);
  out["latencyNs"] = r.latency_ns;
  return out.dump();
}

ComplianceRecord record_from_json(std::string_view bytes, ParseMode mode,
                                  const PrefixMap* extra) {
  const ordered_json j = parse_object(bytes);
  for (const char* key : {"entry", "compliant", "reason", "checkerId",
                          "checkTime", "latencyNs"}) {
    if (!j.contains(key)) {
      raise(Errc::ValidationError,
            std::string("compliance record is missing '") + key + "'");
    }
  }
  ComplianceRecord r;
  r.entry = entry_from_json_obj(j.at("entry"), mode, extra);
  r.compliant = j.at("compliant").get<bool>();
  const auto reason = reason_from_string(j.at("reason").get<std::string>());
  if (!reason) {
    raise(Errc::ValidationError,
          "unknown reason '" + j.at("reason").get<std::string>() + "'");
  }
  r.reason = *reason;
  if (j.contains("consentEntryId")) {
    r.consent_entry_id = j.at("consentEntryId").get<std::string>();
  }
  r.checker_id = j.at("checkerId").get<std::string>();
  r.check_time = parse_rfc3339_ms(j.at("checkTime").get<std::string>());
  r.latency_ns = j.at("latencyNs").get<std::int64_t>();
  if (r.latency_ns < 0) {
    raise(Errc::ValidationError, "latencyNs must be non-negative");
  }
  for (const auto& [key, value] : j.items()) {
    static const std::vector<std::string> known = {
        "entry",     "compliant", "reason", "consentEntryId",
        "checkerId", "checkTime", "latencyNs"};
    if (std::find(known.begin(), known.end(), key) == known.end() &&
        mode == ParseMode::Strict) {
      raise(Errc::ValidationError, "unknown record field '" + key + "'");
    }
  }
  return r;
}

std::string to_json(const LogEntryGroup& g) {
  ordered_json out;
  out["groupId"] = g.group_id;
  out["validityStart"] = format_rfc3339_ms(g.validity_start);
  out["validityEnd"] = format_rfc3339_ms(g.validity_end);
  out["dimension"] = content_to_json(g.dimension);
  out["subjectGroup"] = g.subject_group;
  if (g.entry_members) out["entryMembers"] = *g.entry_members;
  return out.dump();
}

LogEntryGroup group_from_json(std::string_view bytes, ParseMode mode,
                              const PrefixMap* extra) {
  const ordered_json j = parse_object(bytes);
  for (const char* key :
       {"groupId", "validityStart", "validityEnd", "dimension", "subjectGroup"}) {
    if (!j.contains(key)) {
      raise(Errc::ValidationError, std::string("group is missing '") + key + "'");
    }
  }
  LogEntryGroup g;
  g.group_id = j.at("groupId").get<std::string>();
  g.validity_start = parse_rfc3339_ms(j.at("validityStart").get<std::string>());
  g.validity_end = parse_rfc3339_ms(j.at("validityEnd").get<std::string>());
  if (g.validity_start > g.validity_end) {
    raise(Errc::ValidationError, "group validity interval is reversed");
  }
  g.dimension = content_from_json(j.at("dimension"), extra);
  g.subject_group = j.at("subjectGroup").get<std::vector<std::string>>();
  if (j.contains("entryMembers")) {
    g.entry_members = j.at("entryMembers").get<std::vector<std::string>>();
  }
  for (const auto& [key, value] : j.items()) {
    static const std::vector<std::string> known = {
        "groupId",      "validityStart", "validityEnd",
        "dimension",    "subjectGroup",  "entryMembers"};
    if (std::find(known.begin(), known.end(), key) == known.end() &&
        mode == ParseMode::Strict) {
      raise(Errc::ValidationError, "unknown group field '" + key + "'");
    }
  }
  return g;
}

ParsedAny from_json(std::string_view bytes, ParseMode mode,
                    const PrefixMap* extra) {
  const ordered_json j = parse_object(bytes);
  if (j.contains("entry")) return record_from_json(bytes, mode, extra);
  if (j.contains("groupId")) return group_from_json(bytes, mode, extra);
  return entry_from_json(bytes, mode, extra);
}

ordered_json jsonld_context() {
  ordered_json ctx;
  ctx["@version"] = 1.1;
  ctx["splog"] = std::string(iri::kSplogPrefix);
  ctx["spl"] = std::string(iri::kSplPrefix);
  for (const auto& [prefix, ns] : builtin_prefixes()) ctx[prefix] = ns;
  ctx["id"] = "@id";
  ctx["kind"] = "@type";
  ctx["log"] = "splog:log";
  ctx["dataSubject"] = "splog:dataSubject";
  ctx["validityTime"] = "splog:validityTime";
  ctx["transactionTime"] = "splog:transactionTime";
  ctx["message"] = "splog:message";
  ctx["content"] = "splog:logEntryContent";
  ctx["revokes"] = "splog:revoke";
  ctx["recipientInstances"] = "splog:recipient";
  ctx["immutableRecord"] = "splog:inmutableRecord";
  ctx["data"] = "spl:hasData";
  ctx["processing"] = "spl:hasProcessing";
  ctx["purpose"] = "spl:hasPurpose";
  ctx["storage"] = "spl:hasStorage";
  ctx["recipient"] = "spl:hasRecipient";
  ctx["location"] = "spl:hasLocation";
  ctx["durationDays"] = "spl:durationInDays";
  return ordered_json{{"@context", ctx}};
}

// --- Turtle -----------------------------------------------------------------------

namespace {

std::string ttl_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 8);
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out;
}

// Compact name when a built-in prefix applies, <>-wrapped IRI otherwise.
std::string ttl_name(const std::string& iri) {
  const std::string c = compact_name(iri);
  if (c != iri) return c;
  return "<" + iri + ">";
}

std::string ttl_expr(const ClassExpr& e) {
  switch (e.kind) {
    case ExprKind::Atom:
      return ttl_name(e.atom);
    case ExprKind::Top:
      return ttl_name(iri::any_root(e.category));
    case ExprKind::Null:
      return "spl:Null";
    case ExprKind::Union:
    case ExprKind::Intersection: {
      std::string list;
      for (const auto& p : e.parts) {
        if (!list.empty()) list += ' ';
        list += ttl_expr(p);
      }
      return std::string("[ owl:") +
             (e.kind == ExprKind::Union ? "unionOf" : "intersectionOf") +
             " ( " + list + " ) ]";
    }
  }
  return "spl:Null";
}

std::string ttl_content(const LogContent& c, const std::string& indent) {
  std::string out = "[ a splog:LogEntryContent ;\n";
  out += indent + "  spl:hasData " + ttl_expr(c.data) + " ;\n";
  out += indent + "  spl:hasProcessing " + ttl_expr(c.processing) + " ;\n";
  out += indent + "  spl:hasPurpose " + ttl_expr(c.purpose) + " ;\n";
  out += indent + "  spl:hasStorage [ spl:hasLocation " +
         ttl_expr(c.storage.location);
  const auto& d = c.storage.duration;
  if (d.kind == DurationExpr::Kind::Class) {
    out += " ; spl:hasDuration " + ttl_name(d.duration_class);
  } else if (d.max_days && *d.max_days == d.min_days) {
    out += " ; spl:durationInDays \"" + std::to_string(d.min_days) +
           "\"^^xsd:integer";
  } else {
    out += " ; spl:durationMinDays \"" + std::to_string(d.min_days) +
           "\"^^xsd:integer";
    if (d.max_days) {
      out += " ; spl:durationMaxDays \"" + std::to_string(*d.max_days) +
             "\"^^xsd:integer";
    }
  }
  out += " ] ;\n";
  out += indent + "  spl:hasRecipient " + ttl_expr(c.recipient) + " ]";
  return out;
}

std::string entry_iri(const std::string& id) {
  return "<urn:consentlog:entry:" + id + ">";
}

}  // namespace

std::string ttl_prefix_header() {
  std::string out;
  out += "@prefix splog: <" + std::string(iri::kSplogPrefix) + "> .\n";
  out += "@prefix spl: <" + std::string(iri::kSplPrefix) + "> .\n";
  for (const auto& [prefix, ns] : builtin_prefixes()) {
    if (prefix == "spl" || prefix == "splog") continue;
    out += "@prefix " + prefix + ": <" + ns + "> .\n";
  }
  out += "@prefix owl: <http://www.w3.org/2002/07/owl#> .\n";
  out += "@prefix xsd: <http://www.w3.org/2001/XMLSchema#> .\n";
  return out;
}

std::string to_ttl(const LogEntry& e) {
  std::string out;
  out += entry_iri(e.entry_id) + " a splog:" + to_string(e.kind) + " ;\n";
  out += "  splog:log \"" + ttl_escape(e.log_id) + "\" ;\n";
  if (e.data_subject) {
    out += "  splog:dataSubject \"" + ttl_escape(*e.data_subject) + "\" ;\n";
  }
  if (e.transaction_time) {
    out += "  splog:transactionTime \"" + format_rfc3339_ms(*e.transaction_time) +
           "\"^^xsd:dateTimeStamp ;\n";
  }
  out += "  splog:validityTime \"" + format_rfc3339_ms(e.validity_time) +
         "\"^^xsd:dateTimeStamp ;\n";
  if (e.message) {
    out += "  splog:message \"" + ttl_escape(*e.message) + "\" ;\n";
  }
  if (e.revokes) {
    out += "  splog:revoke " + entry_iri(*e.revokes) + " ;\n";
  }
  for (const auto& r : e.recipient_instances) {
    out += "  splog:recipient \"" + ttl_escape(r) + "\" ;\n";
  }
  if (e.immutable_record) {
    out += "  splog:inmutableRecord \"" + ttl_escape(*e.immutable_record) +
           "\" ;\n";
  }
  if (e.bpm_activity) {
    out += "  splog:activity \"" + ttl_escape(*e.bpm_activity) + "\" ;\n";
  }
  if (e.bpm_case) {
    out += "  splog:case \"" + ttl_escape(*e.bpm_case) + "\" ;\n";
  }
  if (e.kind == EntryKind::ConsentAssertion && e.policy) {
    out += "  splog:policy [ a spl:UsagePolicy";
    for (const auto& b : e.policy->basics) {
      out += " ;\n    spl:basicPolicy " + ttl_content(b, "    ");
    }
    out += " ] ;\n";
  } else if (e.content) {
    out += "  splog:eventContent " + ttl_content(*e.content, "  ") + " ;\n";
  }
  // Replace the trailing " ;\n" of the last property with " .\n".
  out.replace(out.size() - 2, 2, ".\n");
  return out;
}

// --- grouping ----------------------------------------------------------------------

std::vector<LogEntryGroup> group_entries(std::span<const LogEntry> entries,
                                         bool keep_members) {
  std::vector<LogEntryGroup> groups;
  std::unordered_map<std::string, std::size_t> index_by_key;
  for (const auto& e : entries) {
    if (!is_data_event(e.kind)) {
      raise(Errc::ValidationError,
            "group_entries expects data events, got " +
                std::string(to_string(e.kind)) + " (" + e.entry_id + ")");
    }
    if (!e.content) {
      raise(Errc::ValidationError, "data event without content: " + e.entry_id);
    }
    const std::string key = content_to_json(normalize(*e.content)).dump();
    auto [it, inserted] = index_by_key.emplace(key, groups.size());
    if (inserted) {
      LogEntryGroup g;
      g.group_id = "group-" + std::to_string(groups.size() + 1);
      g.validity_start = e.validity_time;
      g.validity_end = e.validity_time;
      g.dimension = normalize(*e.content);
      if (keep_members) g.entry_members.emplace();
      groups.push_back(std::move(g));
    }
    LogEntryGroup& g = groups[it->second];
    g.validity_start = std::min(g.validity_start, e.validity_time);
    g.validity_end = std::max(g.validity_end, e.validity_time);
    if (e.data_subject &&
        std::find(g.subject_group.begin(), g.subject_group.end(),
                  *e.data_subject) == g.subject_group.end()) {
      g.subject_group.push_back(*e.data_subject);
    }
    if (keep_members) g.entry_members->push_back(e.entry_id);
  }
  return groups;
}

}  // namespace consentlog
