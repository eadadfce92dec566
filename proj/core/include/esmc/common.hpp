#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace esmc {

using Vec = std::vector<double>;

// Error taxonomy shared by the whole library. The CLI maps ConfigError and
// UsageError to exit code 1, everything else to 2.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct UsageError : Error {
  using Error::Error;
};
struct InputError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};

// Deterministic RNG wrapper. std::mt19937_64 has a fixed bitstream, but the
// standard distributions do not, so all draws are derived here from raw
// 64-bit outputs and reproduce bit-identically on any platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n), rejection-sampled so it is exact
  uint64_t bounded(uint64_t n) {
    if (n == 0) throw UsageError("Rng::bounded: n must be positive");
    if ((n & (n - 1)) == 0) return gen_() & (n - 1);
    uint64_t mask = ~uint64_t{0} >> __builtin_clzll(n | 1);
    for (;;) {
      uint64_t v = gen_() & mask;
      if (v < n) return v;
    }
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller; draws two uniforms per call
  double normal() {
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Fisher-Yates with exact bounded draws
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(bounded(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

inline uint64_t fnv1a64(std::string_view bytes, uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string to_hex16(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

inline uint64_t from_hex(std::string_view s) {
  uint64_t v = 0;
  for (char c : s) {
    v <<= 4;
    if (c >= '0' && c <= '9')
      v |= static_cast<uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f')
      v |= static_cast<uint64_t>(c - 'a' + 10);
    else if (c >= 'A' && c <= 'F')
      v |= static_cast<uint64_t>(c - 'A' + 10);
    else
      throw InputError("invalid hex digit in '" + std::string(s) + "'");
  }
  return v;
}

// Bit-exact double serialization for checkpoints and dataset round-trips.
inline std::string double_to_hex(double d) {
  uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  return to_hex16(bits);
}

inline double double_from_hex(std::string_view s) {
  uint64_t bits = from_hex(s);
  double d;
  std::memcpy(&d, &bits, sizeof d);
  return d;
}

}  // namespace esmc
