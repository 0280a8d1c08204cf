#include "consentlog/policy.hpp"

#include <utility>

namespace consentlog {

ClassExpr ClassExpr::atom_of(ClassId iri) {
  ClassExpr e;
  e.kind = ExprKind::Atom;
  e.atom = std::move(iri);
  return e;
}

ClassExpr ClassExpr::top(Category c) {
  ClassExpr e;
  e.kind = ExprKind::Top;
  e.category = c;
  return e;
}

ClassExpr ClassExpr::null(Category c) {
  ClassExpr e;
  e.kind = ExprKind::Null;
  e.category = c;
  return e;
}

ClassExpr ClassExpr::union_of(std::vector<ClassExpr> parts) {
  if (parts.empty()) raise(Errc::EmptyUnion, "union over no expressions");
  if (parts.size() == 1) return std::move(parts.front());
  ClassExpr e;
  e.kind = ExprKind::Union;
  e.parts = std::move(parts);
  return e;
}

ClassExpr ClassExpr::intersection_of(std::vector<ClassExpr> parts) {
  if (parts.empty()) raise(Errc::EmptyUnion, "intersection over no expressions");
  if (parts.size() == 1) return std::move(parts.front());
  ClassExpr e;
  e.kind = ExprKind::Intersection;
  e.parts = std::move(parts);
  return e;
}

DurationExpr DurationExpr::of_class(ClassId iri) {
  DurationExpr d;
  d.kind = Kind::Class;
  d.duration_class = std::move(iri);
  return d;
}

DurationExpr DurationExpr::interval(std::int64_t min,
                                    std::optional<std::int64_t> max) {
  if (min < 0 || (max && *max < min)) {
    raise(Errc::BadInterval,
          "day interval [" + std::to_string(min) + ", " +
              (max ? std::to_string(*max) : "unbounded") + "] is ill-formed");
  }
  DurationExpr d;
  d.kind = Kind::Interval;
  d.min_days = min;
  d.max_days = max;
  return d;
}

namespace {

void validate_expr(const ClassExpr& e, Category expected, const Taxonomy& t,
                   std::vector<ValidationIssue>& out) {
  switch (e.kind) {
    case ExprKind::Atom: {
      auto node = t.find(e.atom, expected);
      if (node) return;
      if (t.find(e.atom)) {
        out.push_back({Errc::CategoryMismatch,
                       e.atom + " used in a " +
                           std::string(to_string(expected)) + " position"});
      } else {
        out.push_back({Errc::UnknownClass, e.atom + " is not declared"});
      }
      return;
    }
    case ExprKind::Top:
    case ExprKind::Null:
      if (e.category != expected) {
        out.push_back({Errc::CategoryMismatch,
                       std::string(e.kind == ExprKind::Top ? "Top" : "Null") +
                           "(" + to_string(e.category) + ") used in a " +
                           to_string(expected) + " position"});
      }
      return;
    case ExprKind::Union:
    case ExprKind::Intersection:
      if (e.parts.size() < 2) {
        out.push_back({Errc::EmptyUnion,
                       std::string(e.kind == ExprKind::Union
                                       ? "union"
                                       : "intersection") +
                           " with fewer than two members"});
      }
      for (const auto& p : e.parts) validate_expr(p, expected, t, out);
      return;
  }
}

void validate_duration(const DurationExpr& d, const Taxonomy& t,
                       std::vector<ValidationIssue>& out) {
  if (d.kind == DurationExpr::Kind::Class) {
    auto node = t.find(d.duration_class, Category::Duration);
    if (!node) {
      if (t.find(d.duration_class)) {
        out.push_back({Errc::CategoryMismatch,
                       d.duration_class + " is not a Duration class"});
      } else {
        out.push_back({Errc::UnknownClass, d.duration_class + " is not declared"});
      }
    }
    return;
  }
  if (d.min_days < 0 || (d.max_days && *d.max_days < d.min_days)) {
    out.push_back({Errc::BadInterval,
                   "day interval [" + std::to_string(d.min_days) + ", " +
                       (d.max_days ? std::to_string(*d.max_days) : "unbounded") +
                       "] is ill-formed"});
  }
}

}  // namespace

std::vector<ValidationIssue> validate(const BasicPolicy& p, const Taxonomy& t) {
  std::vector<ValidationIssue> out;
  validate_expr(p.data, Category::Data, t, out);
  validate_expr(p.processing, Category::Processing, t, out);
  validate_expr(p.purpose, Category::Purpose, t, out);
  validate_expr(p.recipient, Category::Recipient, t, out);
  validate_expr(p.storage.location, Category::Location, t, out);
  validate_duration(p.storage.duration, t, out);
  return out;
}

std::vector<ValidationIssue> validate(const GeneralPolicy& p, const Taxonomy& t) {
  std::vector<ValidationIssue> out;
  if (p.basics.empty()) {
    out.push_back({Errc::ValidationError, "policy has no basic policies"});
  }
  for (const auto& b : p.basics) {
    auto issues = validate(b, t);
    out.insert(out.end(), issues.begin(), issues.end());
  }
  return out;
}

void validate_or_throw(const BasicPolicy& p, const Taxonomy& t) {
  auto issues = validate(p, t);
  if (!issues.empty()) raise(issues.front().code, issues.front().detail);
}

void validate_or_throw(const GeneralPolicy& p, const Taxonomy& t) {
  auto issues = validate(p, t);
  if (!issues.empty()) raise(issues.front().code, issues.front().detail);
}

ClassExpr normalize(const ClassExpr& e) {
  switch (e.kind) {
    case ExprKind::Atom:
    case ExprKind::Null:
      return e;
    case ExprKind::Top:
      return ClassExpr::atom_of(iri::any_root(e.category));
    case ExprKind::Union:
    case ExprKind::Intersection: {
      std::vector<ClassExpr> flat;
      for (const auto& p : e.parts) {
        ClassExpr n = normalize(p);
        if (n.kind == e.kind) {
          for (auto& inner : n.parts) flat.push_back(std::move(inner));
        } else {
          flat.push_back(std::move(n));
        }
      }
      return e.kind == ExprKind::Union
                 ? ClassExpr::union_of(std::move(flat))
                 : ClassExpr::intersection_of(std::move(flat));
    }
  }
  return e;
}

LogContent normalize(const LogContent& c) {
  LogContent out = c;
  out.data = normalize(c.data);
  out.processing = normalize(c.processing);
  out.purpose = normalize(c.purpose);
  out.recipient = normalize(c.recipient);
  out.storage.location = normalize(c.storage.location);
  return out;
}

std::vector<ClassExpr> union_branches(const ClassExpr& e) {
  switch (e.kind) {
    case ExprKind::Atom:
    case ExprKind::Null:
      return {e};
    case ExprKind::Top:
      return {ClassExpr::atom_of(iri::any_root(e.category))};
    case ExprKind::Union: {
      std::vector<ClassExpr> out;
      for (const auto& p : e.parts) {
        auto inner = union_branches(p);
        out.insert(out.end(), inner.begin(), inner.end());
      }
      return out;
    }
    case ExprKind::Intersection: {
      // Distribute unions out of the intersection.
      std::vector<std::vector<ClassExpr>> chosen = {{}};
      for (const auto& p : e.parts) {
        auto inner = union_branches(p);
        std::vector<std::vector<ClassExpr>> next;
        next.reserve(chosen.size() * inner.size());
        for (const auto& base : chosen) {
          for (const auto& pick : inner) {
            auto combo = base;
            if (pick.kind == ExprKind::Intersection) {
              combo.insert(combo.end(), pick.parts.begin(), pick.parts.end());
            } else {
              combo.push_back(pick);
            }
            next.push_back(std::move(combo));
          }
        }
        chosen = std::move(next);
      }
      std::vector<ClassExpr> out;
      out.reserve(chosen.size());
      for (auto& combo : chosen) {
        out.push_back(ClassExpr::intersection_of(std::move(combo)));
      }
      return out;
    }
  }
  return {e};
}

std::vector<LogContent> dnf(const LogContent& c) {
  const auto data = union_branches(c.data);
  const auto processing = union_branches(c.processing);
  const auto purpose = union_branches(c.purpose);
  const auto recipient = union_branches(c.recipient);
  const auto location = union_branches(c.storage.location);

  std::vector<LogContent> out;
  out.reserve(data.size() * processing.size() * purpose.size() *
              recipient.size() * location.size());
  for (const auto& d : data) {
    for (const auto& pr : processing) {
      for (const auto& pu : purpose) {
        for (const auto& r : recipient) {
          for (const auto& l : location) {
            LogContent leaf;
            leaf.data = d;
            leaf.processing = pr;
            leaf.purpose = pu;
            leaf.recipient = r;
            leaf.storage.location = l;
            leaf.storage.duration = c.storage.duration;
            out.push_back(std::move(leaf));
          }
        }
      }
    }
  }
  return out;
}

}  // namespace consentlog
