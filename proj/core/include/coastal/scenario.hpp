#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace coastal {

/// Binary protection decision per coastal segment; bit i is true when
/// segment i carries a seawall. Text form is a bare bitstring, segment 0
/// first.
class ProtectionScenario {
 public:
  ProtectionScenario() = default;
  explicit ProtectionScenario(std::vector<bool> bits);
  /// All-false scenario of length d_x.
  static ProtectionScenario none(std::size_t d_x);
  static ProtectionScenario all(std::size_t d_x);

  std::size_t size() const noexcept { return bits_.size(); }
  bool operator[](std::size_t i) const { return bits_[i]; }
  bool at(std::size_t i) const { return bits_.at(i); }
  void set(std::size_t i, bool value) { bits_.at(i) = value; }
  void flip(std::size_t i) { bits_.at(i) = !bits_.at(i); }

  std::size_t protected_count() const noexcept;
  const std::vector<bool>& bits() const noexcept { return bits_; }
  std::string to_string() const;

  friend bool operator==(const ProtectionScenario&, const ProtectionScenario&) = default;
  friend auto operator<=>(const ProtectionScenario& a, const ProtectionScenario& b) {
    return a.bits_ <=> b.bits_;
  }

 private:
  std::vector<bool> bits_;
};

ProtectionScenario parse_scenario(std::string_view text);

/// Hand-picked scenarios: all-ones, first half (ceil(d_x/2) leading ones),
/// second half, all-zeros, the d_x unit vectors and their complements.
/// 4 + 2*d_x entries unless `dedup` removes repeats (first occurrence wins).
std::vector<ProtectionScenario> make_base_scenarios(std::size_t d_x, bool dedup = false);

/// The 32 fixed 17-segment holdout scenarios.
std::vector<ProtectionScenario> holdout_scenarios();

/// `count` distinct scenarios drawn uniformly without replacement from
/// {0,1}^d_x minus `exclusions`. Deterministic in `seed`.
std::vector<ProtectionScenario> random_scenarios(std::size_t count, std::size_t d_x,
                                                 std::uint64_t seed,
                                                 const std::set<ProtectionScenario>& exclusions = {});

}  // namespace coastal
