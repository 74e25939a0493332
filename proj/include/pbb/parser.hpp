#pragma once

#include <cctype>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pbb/distribution.hpp"
#include "pbb/term.hpp"

namespace pbb {

struct ParseError : std::runtime_error {
  int line, col;
  ParseError(int line_, int col_, const std::string& what_)
      : std::runtime_error(std::to_string(line_) + ":" + std::to_string(col_) + ": " + what_),
        line(line_),
        col(col_) {}
};

enum class Sort { nondet, prob, distribution };

namespace detail {

// Grammar (bit-exact):
//   E ::= '0' | ACT '.' P | E '+' E | '(' E ')'
//   P ::= 'D' '(' E ')' | P '+[' RAT ']' P | '(' P ')'
//   DIST ::= '{' RAT ':' E (',' RAT ':' E)* '}'
//   ACT ::= 'tau' | [a-z][a-zA-Z0-9_]*      RAT ::= INT ('/' INT)?
// Prefix '.' binds tighter than '+'; '+' and '+[r]' associate to the left.
class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NTerm parse_nterm() {
    NTerm t = nterm();
    expect_end();
    return t;
  }

  PTerm parse_pterm() {
    PTerm t = pterm();
    expect_end();
    return t;
  }

  Distribution parse_distribution() {
    Distribution d = dist();
    expect_end();
    return d;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line_, col_, msg); }

  void skip_ws() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '\n') {
        ++line_;
        col_ = 1;
        ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\r') {
        ++col_;
        ++pos_;
      } else {
        break;
      }
    }
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  // Peek without skipping whitespace first (for the '+[' digraph).
  char peek_raw() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void advance() {
    ++col_;
    ++pos_;
  }

  void expect(char c, const char* what) {
    if (peek() != c) fail(std::string("expected ") + what);
    advance();
  }

  void expect_end() {
    if (peek() != '\0') fail("unexpected trailing input");
  }

  boost::multiprecision::cpp_int integer() {
    if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected integer");
    boost::multiprecision::cpp_int v = 0;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      v = v * 10 + (text_[pos_] - '0');
      advance();
    }
    return v;
  }

  Rat rational() {
    auto num = integer();
    if (peek() == '/') {
      advance();
      auto den = integer();
      if (den == 0) fail("rational with zero denominator");
      return Rat(num, den);
    }
    return Rat(num);
  }

  Rat probability() {
    int l = line_, c = col_;
    Rat r = rational();
    if (!is_probability(r)) throw ParseError(l, c, "rational out of [0,1]: " + rat_str(r));
    return r;
  }

  std::string identifier() {
    char c = peek();
    if (!(c >= 'a' && c <= 'z')) fail("expected action name");
    std::string name;
    while (pos_ < text_.size()) {
      char d = text_[pos_];
      if (std::isalnum(static_cast<unsigned char>(d)) || d == '_') {
        name.push_back(d);
        advance();
      } else {
        break;
      }
    }
    return name;
  }

  // True when the next token is the '+[' digraph (no whitespace inside).
  bool at_pchoice_op() {
    if (peek() != '+') return false;
    return pos_ + 1 < text_.size() && text_[pos_ + 1] == '[';
  }

  NTerm nterm() {
    NTerm acc = nterm_atom();
    while (peek() == '+' && !at_pchoice_op()) {
      advance();
      acc = NTerm::choice(acc, nterm_atom());
    }
    return acc;
  }

  NTerm nterm_atom() {
    char c = peek();
    if (c == '0') {
      advance();
      return NTerm::nil();
    }
    if (c == '(') {
      advance();
      NTerm t = nterm();
      expect(')', "')'");
      return t;
    }
    if (c >= 'a' && c <= 'z') {
      std::string name = identifier();
      expect('.', "'.' after action");
      PTerm body = pterm_atom();
      return NTerm::prefix(Action(std::move(name)), std::move(body));
    }
    fail("expected non-deterministic term");
  }

  PTerm pterm() {
    PTerm acc = pterm_atom();
    while (at_pchoice_op()) {
      advance();  // '+'
      advance();  // '['
      Rat r = probability();
      expect(']', "']'");
      acc = PTerm::pchoice(acc, std::move(r), pterm_atom());
    }
    return acc;
  }

  PTerm pterm_atom() {
    char c = peek();
    if (c == 'D') {
      advance();
      expect('(', "'(' after D");
      NTerm t = nterm();
      expect(')', "')'");
      return PTerm::dirac(std::move(t));
    }
    if (c == '(') {
      advance();
      PTerm t = pterm();
      expect(')', "')'");
      return t;
    }
    fail("expected probabilistic term");
  }

  Distribution dist() {
    expect('{', "'{'");
    std::vector<Distribution::Entry> entries;
    while (true) {
      Rat w = probability();
      expect(':', "':'");
      NTerm t = nterm();
      entries.emplace_back(std::move(t), std::move(w));
      if (peek() == ',') {
        advance();
        continue;
      }
      break;
    }
    expect('}', "'}'");
    int l = line_, c = col_;
    try {
      return Distribution::make(std::move(entries));
    } catch (const std::invalid_argument& e) {
      throw ParseError(l, c, e.what());
    }
  }
};

}  // namespace detail

inline NTerm parse_nterm(std::string_view text) { return detail::Parser(text).parse_nterm(); }
inline PTerm parse_pterm(std::string_view text) { return detail::Parser(text).parse_pterm(); }
inline Distribution parse_distribution(std::string_view text) { return detail::Parser(text).parse_distribution(); }

using Parsed = std::variant<NTerm, PTerm, Distribution>;

inline Parsed parse(std::string_view text, Sort sort) {
  switch (sort) {
    case Sort::nondet:
      return parse_nterm(text);
    case Sort::prob:
      return parse_pterm(text);
    case Sort::distribution:
      return parse_distribution(text);
  }
  throw std::logic_error("bad sort");
}

/// Sort auto-detection for mixed inputs: distribution literals start with
/// '{'; otherwise the non-deterministic sort is tried before the
/// probabilistic one.
inline Parsed parse_any(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  if (i < text.size() && text[i] == '{') return parse_distribution(text);
  try {
    return parse_nterm(text);
  } catch (const ParseError&) {
    return parse_pterm(text);
  }
}

}  // namespace pbb
