#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

#include "pbb/rational.hpp"

namespace pbb {

/// An action label. `tau` is the distinguished internal action.
class Action {
 public:
  Action() : name_("tau") {}
  explicit Action(std::string name) : name_(std::move(name)) {
    if (name_.empty()) throw std::invalid_argument("action name must be non-empty");
  }

  static const Action& tau() {
    static const Action t{std::string("tau")};
    return t;
  }

  const std::string& name() const { return name_; }
  bool is_tau() const { return name_ == "tau"; }

  friend bool operator==(const Action& a, const Action& b) { return a.name_ == b.name_; }
  friend auto operator<=>(const Action& a, const Action& b) { return a.name_ <=> b.name_; }

 private:
  std::string name_;
};

class PTerm;

/// Non-deterministic process term: 0, a.P, or E + F.
/// Immutable value; nodes are shared and never mutated after construction.
class NTerm {
 public:
  enum class Kind { nil, prefix, choice };

  NTerm() : NTerm(nil()) {}

  static NTerm nil();
  static NTerm prefix(Action act, PTerm body);
  static NTerm choice(NTerm left, NTerm right);

  Kind kind() const;
  const Action& action() const;  // prefix only
  const PTerm& body() const;     // prefix only
  const NTerm& left() const;     // choice only
  const NTerm& right() const;    // choice only

  std::uint64_t complexity() const;
  std::size_t hash() const;
  std::string str() const;

  friend bool operator==(const NTerm& a, const NTerm& b) { return compare(a, b) == 0; }
  friend bool operator!=(const NTerm& a, const NTerm& b) { return compare(a, b) != 0; }
  friend bool operator<(const NTerm& a, const NTerm& b) { return compare(a, b) < 0; }
  friend bool operator>(const NTerm& a, const NTerm& b) { return compare(a, b) > 0; }
  friend bool operator<=(const NTerm& a, const NTerm& b) { return compare(a, b) <= 0; }
  friend bool operator>=(const NTerm& a, const NTerm& b) { return compare(a, b) >= 0; }

  static int compare(const NTerm& a, const NTerm& b);

 private:
  struct Node;
  explicit NTerm(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;

  friend class PTerm;
};

/// Probabilistic process term: D(E) or P +[r] Q with r an exact rational in [0,1].
class PTerm {
 public:
  enum class Kind { dirac, pchoice };

  static PTerm dirac(NTerm inner);
  static PTerm pchoice(PTerm left, Rat ratio, PTerm right);

  Kind kind() const;
  const NTerm& inner() const;  // dirac only
  const PTerm& left() const;   // pchoice only
  const Rat& ratio() const;    // pchoice only
  const PTerm& right() const;  // pchoice only

  std::uint64_t complexity() const;
  std::size_t hash() const;
  std::string str() const;

  friend bool operator==(const PTerm& a, const PTerm& b) { return compare(a, b) == 0; }
  friend bool operator!=(const PTerm& a, const PTerm& b) { return compare(a, b) != 0; }
  friend bool operator<(const PTerm& a, const PTerm& b) { return compare(a, b) < 0; }

  static int compare(const PTerm& a, const PTerm& b);

 private:
  struct Node;
  explicit PTerm(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;

  friend class NTerm;
};

struct NTerm::Node {
  Kind kind;
  Action act;                          // prefix
  std::shared_ptr<const PTerm> body;   // prefix
  std::shared_ptr<const NTerm> left;   // choice
  std::shared_ptr<const NTerm> right;  // choice
  std::uint64_t complexity = 0;
  std::size_t hash = 0;
};

struct PTerm::Node {
  Kind kind;
  std::shared_ptr<const NTerm> inner;  // dirac
  std::shared_ptr<const PTerm> left;   // pchoice
  Rat ratio;                           // pchoice
  std::shared_ptr<const PTerm> right;  // pchoice
  std::uint64_t complexity = 0;
  std::size_t hash = 0;
};

namespace detail {
inline std::size_t hash_mix(std::size_t seed, std::size_t v) {
  seed ^= v + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2);
  return seed;
}
}  // namespace detail

inline NTerm NTerm::nil() {
  static const NTerm n = [] {
    auto node = std::make_shared<Node>();
    node->kind = Kind::nil;
    node->complexity = 0;
    node->hash = detail::hash_mix(0, 17);
    return NTerm(node);
  }();
  return n;
}

inline NTerm NTerm::prefix(Action act, PTerm body) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::prefix;
  node->complexity = body.complexity() + 1;
  node->hash = detail::hash_mix(detail::hash_mix(1, std::hash<std::string>{}(act.name())), body.hash());
  node->act = std::move(act);
  node->body = std::make_shared<const PTerm>(std::move(body));
  return NTerm(node);
}

inline NTerm NTerm::choice(NTerm left, NTerm right) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::choice;
  node->complexity = left.complexity() + right.complexity();
  node->hash = detail::hash_mix(detail::hash_mix(2, left.hash()), right.hash());
  node->left = std::make_shared<const NTerm>(std::move(left));
  node->right = std::make_shared<const NTerm>(std::move(right));
  return NTerm(node);
}

inline NTerm::Kind NTerm::kind() const { return node_->kind; }
inline const Action& NTerm::action() const { return node_->act; }
inline const PTerm& NTerm::body() const { return *node_->body; }
inline const NTerm& NTerm::left() const { return *node_->left; }
inline const NTerm& NTerm::right() const { return *node_->right; }
inline std::uint64_t NTerm::complexity() const { return node_->complexity; }
inline std::size_t NTerm::hash() const { return node_->hash; }

inline PTerm PTerm::dirac(NTerm inner) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::dirac;
  node->complexity = inner.complexity() + 1;
  node->hash = detail::hash_mix(3, inner.hash());
  node->inner = std::make_shared<const NTerm>(std::move(inner));
  return PTerm(node);
}

inline PTerm PTerm::pchoice(PTerm left, Rat ratio, PTerm right) {
  if (!is_probability(ratio)) throw std::invalid_argument("probabilistic choice ratio out of [0,1]");
  auto node = std::make_shared<Node>();
  node->kind = Kind::pchoice;
  node->complexity = left.complexity() + right.complexity();
  node->hash = detail::hash_mix(detail::hash_mix(detail::hash_mix(4, left.hash()), rat_hash(ratio)), right.hash());
  node->left = std::make_shared<const PTerm>(std::move(left));
  node->ratio = std::move(ratio);
  node->right = std::make_shared<const PTerm>(std::move(right));
  return PTerm(node);
}

inline PTerm::Kind PTerm::kind() const { return node_->kind; }
inline const NTerm& PTerm::inner() const { return *node_->inner; }
inline const PTerm& PTerm::left() const { return *node_->left; }
inline const Rat& PTerm::ratio() const { return node_->ratio; }
inline const PTerm& PTerm::right() const { return *node_->right; }
inline std::uint64_t PTerm::complexity() const { return node_->complexity; }
inline std::size_t PTerm::hash() const { return node_->hash; }

inline int NTerm::compare(const NTerm& a, const NTerm& b) {
  if (a.node_ == b.node_) return 0;
  if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
  switch (a.kind()) {
    case Kind::nil:
      return 0;
    case Kind::prefix: {
      if (int c = a.action().name().compare(b.action().name())) return c < 0 ? -1 : 1;
      return PTerm::compare(a.body(), b.body());
    }
    case Kind::choice: {
      if (int c = compare(a.left(), b.left())) return c;
      return compare(a.right(), b.right());
    }
  }
  return 0;
}

inline int PTerm::compare(const PTerm& a, const PTerm& b) {
  if (a.node_ == b.node_) return 0;
  if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
  switch (a.kind()) {
    case Kind::dirac:
      return NTerm::compare(a.inner(), b.inner());
    case Kind::pchoice: {
      if (int c = compare(a.left(), b.left())) return c;
      if (a.ratio() != b.ratio()) return a.ratio() < b.ratio() ? -1 : 1;
      return compare(a.right(), b.right());
    }
  }
  return 0;
}

inline std::string NTerm::str() const {
  switch (kind()) {
    case Kind::nil:
      return "0";
    case Kind::prefix: {
      std::string b = body().str();
      if (body().kind() == PTerm::Kind::pchoice) b = "(" + b + ")";
      return action().name() + "." + b;
    }
    case Kind::choice: {
      std::string r = right().str();
      if (right().kind() == Kind::choice) r = "(" + r + ")";
      return left().str() + " + " + r;
    }
  }
  return {};
}

inline std::string PTerm::str() const {
  switch (kind()) {
    case Kind::dirac:
      return "D(" + inner().str() + ")";
    case Kind::pchoice: {
      std::string r = right().str();
      if (right().kind() == Kind::pchoice) r = "(" + r + ")";
      return left().str() + " +[" + rat_str(ratio()) + "] " + r;
    }
  }
  return {};
}

}  // namespace pbb

template <>
struct std::hash<pbb::NTerm> {
  std::size_t operator()(const pbb::NTerm& t) const noexcept { return t.hash(); }
};

template <>
struct std::hash<pbb::PTerm> {
  std::size_t operator()(const pbb::PTerm& t) const noexcept { return t.hash(); }
};
