#pragma once

// Shared plumbing: error type, seeded randomness, binary streams.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mlkit {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// splitmix64 finalizer; used to derive independent streams from one seed.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based split: stream `counter` of `seed`. derive_seed(s, 0) == s so
// that a single-member ensemble reuses its parent's seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t counter) noexcept {
  if (counter == 0) return seed;
  return mix64(seed ^ mix64(counter * 0xd1b54a32d192ed03ULL));
}

// Thin wrapper over mt19937_64. The bounded/real helpers are written out
// because std distributions are not bit-portable across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw Error("Rng::below: empty range");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

  // uniform double in [0, 1)
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

private:
  std::mt19937_64 engine_;
};

inline double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Little-endian binary streams for model artifacts and checkpoints.
class BinaryWriter {
public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  void put(T value) {
    static_assert(std::endian::native == std::endian::little, "little-endian host required");
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }

  void put_string(std::string_view s) {
    put<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

  template <typename T>
  void put_vector(std::span<const T> v) {
    put<std::uint64_t>(v.size());
    for (const T& x : v) put<T>(x);
  }

  void put_magic(std::string_view magic) { out_.write(magic.data(), static_cast<std::streamsize>(magic.size())); }

  bool good() const { return out_.good(); }

private:
  std::ostream& out_;
};

class BinaryReader {
public:
  explicit BinaryReader(std::istream& in) : in_(in) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  T get() {
    T value{};
    in_.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in_) throw Error("truncated binary stream");
    return value;
  }

  std::string get_string() {
    const auto n = checked_size(get<std::uint64_t>());
    std::string s(n, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(n));
    if (!in_) throw Error("truncated binary stream");
    return s;
  }

  template <typename T>
  std::vector<T> get_vector() {
    const auto n = checked_size(get<std::uint64_t>());
    std::vector<T> v(n);
    for (auto& x : v) x = get<T>();
    return v;
  }

  void expect_magic(std::string_view magic) {
    std::string buf(magic.size(), '\0');
    in_.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!in_ || buf != magic) throw Error("bad magic: expected " + std::string(magic));
  }

private:
  static std::size_t checked_size(std::uint64_t n) {
    if (n > (std::uint64_t{1} << 34)) throw Error("corrupt length field in binary stream");
    return static_cast<std::size_t>(n);
  }

  std::istream& in_;
};

}  // namespace mlkit
