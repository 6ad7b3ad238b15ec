#include "osteoplan/sobol.hpp"

#include <array>
#include <random>

#include "osteoplan/errors.hpp"

namespace osteoplan {
namespace {

struct Primitive {
  unsigned degree;
  unsigned coeffs;
  std::array<std::uint32_t, 5> m;
};

// new-joe-kuo-6.21201, dimensions 2..7.
constexpr std::array<Primitive, 6> kPrimitives{{
    {1, 0, {1, 0, 0, 0, 0}},
    {2, 1, {1, 3, 0, 0, 0}},
    {3, 1, {1, 3, 1, 0, 0}},
    {3, 2, {1, 1, 1, 0, 0}},
    {4, 1, {1, 1, 3, 3, 0}},
    {4, 4, {1, 3, 5, 13, 0}},
}};

}  // namespace

SobolSequence::SobolSequence(int dims) : dims_(dims) {
  if (dims < 1 || dims > kMaxDims) throw Error("SobolSequence: supported dimensions are 1..7");
  directions_.resize(static_cast<std::size_t>(dims));
  for (int k = 0; k < 32; ++k) directions_[0][k] = 1u << (31 - k);
  for (int d = 1; d < dims; ++d) {
    const Primitive& prim = kPrimitives[static_cast<std::size_t>(d - 1)];
    const unsigned s = prim.degree;
    auto& v = directions_[static_cast<std::size_t>(d)];
    for (unsigned i = 0; i < s; ++i) v[i] = prim.m[i] << (31 - i);
    for (unsigned i = s; i < 32; ++i) {
      v[i] = v[i - s] ^ (v[i - s] >> s);
      for (unsigned k = 1; k < s; ++k) v[i] ^= ((prim.coeffs >> (s - 1 - k)) & 1u) * v[i - k];
    }
  }
}

std::vector<double> SobolSequence::at(std::uint64_t index) const {
  return at(index, std::vector<std::uint32_t>(static_cast<std::size_t>(dims_), 0u));
}

std::vector<double> SobolSequence::at(std::uint64_t index, const std::vector<std::uint32_t>& shift) const {
  if (index >> 32) throw Error("SobolSequence: index exceeds 2^32");
  if (shift.size() != static_cast<std::size_t>(dims_)) throw Error("SobolSequence: shift size mismatch");
  std::vector<double> out(static_cast<std::size_t>(dims_));
  for (int d = 0; d < dims_; ++d) {
    std::uint32_t x = 0;
    std::uint64_t i = index;
    for (int bit = 0; i != 0; ++bit, i >>= 1)
      if (i & 1u) x ^= directions_[static_cast<std::size_t>(d)][bit];
    x ^= shift[static_cast<std::size_t>(d)];
    out[static_cast<std::size_t>(d)] = static_cast<double>(x) * 0x1.0p-32;
  }
  return out;
}

std::vector<std::vector<double>> sobol_points(int dims, std::size_t count, std::uint64_t skip, std::uint64_t leap,
                                              std::optional<std::uint64_t> shift_seed) {
  SobolSequence seq(dims);
  std::vector<std::uint32_t> shift(static_cast<std::size_t>(dims), 0u);
  if (shift_seed) {
    std::mt19937_64 rng(*shift_seed);
    for (auto& s : shift) s = static_cast<std::uint32_t>(rng() >> 32);
  }
  std::vector<std::vector<double>> pts;
  pts.reserve(count);
  for (std::size_t k = 0; k < count; ++k) pts.push_back(seq.at(skip + static_cast<std::uint64_t>(k) * (leap + 1), shift));
  return pts;
}

}  // namespace osteoplan
