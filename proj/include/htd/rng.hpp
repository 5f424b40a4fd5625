#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

namespace htd {

/// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// splitmix64 finalizer; used to derive independent sub-seeds from a master seed.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag);

enum class NormalMethod { Polar, InverseCdf };

const char* to_string(NormalMethod m);

/// One counter-based stream: key = seed, counter = (block index, stream index).
/// Streams with the same (seed, index) always produce the same sequence, and the
/// sequence does not depend on how many other streams exist.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream() = default;
  RngStream(std::uint64_t seed, std::uint64_t index, NormalMethod normal = NormalMethod::Polar);

  std::uint32_t next_u32();
  std::uint64_t operator()();
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  double normal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t index() const { return index_; }
  NormalMethod normal_method() const { return method_; }

 private:
  void refill();

  std::uint64_t seed_ = 0;
  std::uint64_t index_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  unsigned used_ = 4;
  NormalMethod method_ = NormalMethod::Polar;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

RngStream make_stream(std::uint64_t seed, std::uint64_t index, NormalMethod normal = NormalMethod::Polar);
std::vector<RngStream> make_streams(std::uint64_t seed, std::size_t n, NormalMethod normal = NormalMethod::Polar);

}  // namespace htd
