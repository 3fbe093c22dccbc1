#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "vocbench/error.hpp"

namespace vocbench::detail {

// Little-endian primitives for the VBMEL/VBEMB formats. The host is
// required to be little-endian (checked in audio_io.cpp).
template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& what) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw Error(ErrorCode::CorruptHeader, "truncated " + what);
  }
  return v;
}

inline void expect_magic(std::istream& in, const char (&magic)[7], const std::string& what) {
  char buf[6];
  if (!in.read(buf, 6) || std::memcmp(buf, magic, 6) != 0) {
    throw Error(ErrorCode::CorruptHeader, what + ": bad magic");
  }
}

}  // namespace vocbench::detail
