/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "core/common.hpp"

#include <charconv>
#include <cstdlib>
#include <thread>

namespace kfno {

int worker_thread_count() {
  const char* env = std::getenv("KFNO_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (end == env || v < 1) return 1;
  const long hw = static_cast<long>(std::thread::hardware_concurrency());
  if (hw > 0 && v > hw) v = hw;
  return static_cast<int>(v);
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 0x00000100000001B3ULL;
  }
  return h;
}

std::string fnv1a64_hex(const std::string& s) {
  static const char* digits = "0123456789abcdef";
  std::uint64_t h = fnv1a64(s);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace kfno
