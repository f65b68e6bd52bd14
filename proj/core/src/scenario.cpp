#include "coastal/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "coastal/errors.hpp"

namespace coastal {

namespace {

constexpr const char* kHoldout[] = {
    "00110011001100110", "11100000000000111", "00000111100000111", "00011000110001100",
    "11110000111100001", "00000011111100000", "11110000000001111", "00000111111100000",
    "11111100000111111", "00001111111110000", "11111000001111100", "00001110000111000",
    "10101010101010101", "11111110000001111", "00000001111110000", "11111000000011111",
    "11111110000000111", "00000111110000011", "00011100011100011", "00000001111111000",
    "11000000000000011", "00111111111111100", "01010101010101010", "11111100000011111",
    "11111000011111000", "00000011111000000", "11110001111000111", "11100011100011100",
    "00001111000011110", "11001100110011001", "11100111001110011", "00011111111111000",
};

ProtectionScenario from_code(std::uint64_t code, std::size_t d_x) {
  std::vector<bool> bits(d_x);
  for (std::size_t i = 0; i < d_x; ++i) {
    bits[i] = ((code >> (d_x - 1 - i)) & 1u) != 0;
  }
  return ProtectionScenario(std::move(bits));
}

}  // namespace

ProtectionScenario::ProtectionScenario(std::vector<bool> bits) : bits_(std::move(bits)) {
  if (bits_.empty()) {
    throw ConfigError("protection scenario needs at least one segment");
  }
}

ProtectionScenario ProtectionScenario::none(std::size_t d_x) {
  return ProtectionScenario(std::vector<bool>(d_x, false));
}

ProtectionScenario ProtectionScenario::all(std::size_t d_x) {
  return ProtectionScenario(std::vector<bool>(d_x, true));
}

std::size_t ProtectionScenario::protected_count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true));
}

std::string ProtectionScenario::to_string() const {
  std::string out(bits_.size(), '0');
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) out[i] = '1';
  }
  return out;
}

ProtectionScenario parse_scenario(std::string_view text) {
  if (text.empty()) {
    throw ParseError("empty scenario bitstring");
  }
  std::vector<bool> bits(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '0' && c != '1') {
      throw ParseError("invalid character '" + std::string(1, c) + "' at index " +
                       std::to_string(i) + " of scenario bitstring");
    }
    bits[i] = c == '1';
  }
  return ProtectionScenario(std::move(bits));
}

std::vector<ProtectionScenario> make_base_scenarios(std::size_t d_x, bool dedup) {
  if (d_x == 0) {
    throw ConfigError("d_x must be positive");
  }
  std::vector<ProtectionScenario> out;
  out.reserve(4 + 2 * d_x);
  const std::size_t half = (d_x + 1) / 2;

  out.push_back(ProtectionScenario::all(d_x));
  std::vector<bool> first(d_x, false);
  std::fill(first.begin(), first.begin() + static_cast<std::ptrdiff_t>(half), true);
  std::vector<bool> second(first);
  second.flip();
  out.emplace_back(std::move(first));
  out.emplace_back(std::move(second));
  out.push_back(ProtectionScenario::none(d_x));
  for (std::size_t i = 0; i < d_x; ++i) {
    auto unit = ProtectionScenario::none(d_x);
    unit.set(i, true);
    out.push_back(std::move(unit));
  }
  for (std::size_t i = 0; i < d_x; ++i) {
    auto inverse = ProtectionScenario::all(d_x);
    inverse.set(i, false);
    out.push_back(std::move(inverse));
  }

  if (dedup) {
    std::vector<ProtectionScenario> unique;
    std::set<ProtectionScenario> seen;
    for (auto& s : out) {
      if (seen.insert(s).second) unique.push_back(std::move(s));
    }
    out = std::move(unique);
  }
  return out;
}

std::vector<ProtectionScenario> holdout_scenarios() {
  std::vector<ProtectionScenario> out;
  out.reserve(std::size(kHoldout));
  for (const char* s : kHoldout) out.push_back(parse_scenario(s));
  return out;
}

std::vector<ProtectionScenario> random_scenarios(std::size_t count, std::size_t d_x,
                                                 std::uint64_t seed,
                                                 const std::set<ProtectionScenario>& exclusions) {
  if (d_x == 0) {
    throw ConfigError("d_x must be positive");
  }
  if (count == 0) return {};

  std::size_t excluded = 0;
  for (const auto& e : exclusions) {
    if (e.size() == d_x) ++excluded;
  }
  if (d_x < 63) {
    const std::uint64_t space = std::uint64_t{1} << d_x;
    if (count > space - excluded) {
      throw CapacityError("cannot draw " + std::to_string(count) + " distinct scenarios from " +
                          std::to_string(space - excluded) + " available");
    }
  }

  std::mt19937_64 rng(seed);
  std::vector<ProtectionScenario> out;
  out.reserve(count);

  constexpr std::size_t kEnumerateLimit = 20;
  if (d_x <= kEnumerateLimit) {
    // Partial Fisher-Yates over the admissible codes.
    std::vector<std::uint64_t> codes;
    const std::uint64_t space = std::uint64_t{1} << d_x;
    codes.reserve(space - excluded);
    for (std::uint64_t c = 0; c < space; ++c) {
      if (excluded == 0 || !exclusions.contains(from_code(c, d_x))) codes.push_back(c);
    }
    for (std::size_t k = 0; k < count; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, codes.size() - 1);
      std::swap(codes[k], codes[pick(rng)]);
      out.push_back(from_code(codes[k], d_x));
    }
    return out;
  }

  std::set<ProtectionScenario> taken(exclusions);
  std::bernoulli_distribution coin(0.5);
  while (out.size() < count) {
    std::vector<bool> bits(d_x);
    for (std::size_t i = 0; i < d_x; ++i) bits[i] = coin(rng);
    ProtectionScenario s(std::move(bits));
    if (taken.insert(s).second) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace coastal
