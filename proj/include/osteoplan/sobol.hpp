#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace osteoplan {

/// Sobol' low-discrepancy sequence in up to 7 dimensions (Joe-Kuo direction
/// numbers, 32-bit, natural ordering; element 0 is the origin).
class SobolSequence {
 public:
  static constexpr int kMaxDims = 7;

  explicit SobolSequence(int dims);

  int dims() const { return dims_; }

  /// Element `index` of the sequence, each coordinate in [0, 1).
  std::vector<double> at(std::uint64_t index) const;

  /// Same, after XOR-ing every coordinate with a per-dimension 32-bit mask
  /// (a random digital shift; keeps the (t,s)-net structure).
  std::vector<double> at(std::uint64_t index, const std::vector<std::uint32_t>& shift) const;

 private:
  int dims_;
  std::vector<std::array<std::uint32_t, 32>> directions_;
};

/// `count` points taken by discarding the first `skip` elements and then
/// keeping every (leap + 1)-th element: indices skip + k (leap + 1).
/// With `shift_seed` set, the points receive a seeded random digital shift.
std::vector<std::vector<double>> sobol_points(int dims, std::size_t count, std::uint64_t skip = 1000,
                                              std::uint64_t leap = 100,
                                              std::optional<std::uint64_t> shift_seed = std::nullopt);

}  // namespace osteoplan
