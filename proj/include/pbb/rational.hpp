#pragma once

#include <cstddef>
#include <string>

#include <boost/functional/hash.hpp>
#include <boost/multiprecision/cpp_int.hpp>

namespace pbb {

/// Exact rational number; always stored in lowest terms.
using Rat = boost::multiprecision::cpp_rational;

inline std::string rat_str(const Rat& r) { return r.str(); }

inline std::size_t rat_hash(const Rat& r) {
  boost::hash<Rat> h;
  return h(r);
}

inline bool is_probability(const Rat& r) { return r >= 0 && r <= 1; }

}  // namespace pbb
