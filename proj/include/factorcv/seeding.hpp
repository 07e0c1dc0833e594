#pragma once

#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <span>

namespace factorcv {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of substream `stream` below `parent`. Distinct (parent, stream) pairs
/// give unrelated seeds; the map is a pure function so any substream can be
/// regenerated in isolation.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) {
  return mix64(mix64(parent) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t parent,
                                    std::initializer_list<std::uint64_t> path) {
  for (auto s : path) parent = derive_seed(parent, s);
  return parent;
}

/// FNV-1a over raw bytes.
inline std::uint64_t fnv1a(std::span<const unsigned char> bytes,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a_doubles(std::span<const double> values,
                                   std::uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a({reinterpret_cast<const unsigned char*>(values.data()),
                values.size() * sizeof(double)},
               h);
}

inline std::uint64_t double_bits(double x) {
  std::uint64_t u;
  std::memcpy(&u, &x, sizeof u);
  return u;
}

}  // namespace factorcv
