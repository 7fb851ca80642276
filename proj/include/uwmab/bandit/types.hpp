#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace uwmab {

// Coarse channel quality seen by the transmitter. Bounds in dB:
// Low [10, 18], Medium (18, 30], High (30, 40]; clamped outside.
enum class SnrClass : std::uint8_t { Low = 0, Medium = 1, High = 2 };

// Freshness of the last channel report, in slots since the last feedback.
enum class AoiClass : std::uint8_t { Fresh = 0, Stale = 1, VeryStale = 2 };

enum class Modulation : std::uint8_t { BPSK = 0, PSK8 = 1, PSK16 = 2 };

enum class PowerClass : std::uint8_t { Low = 0, Medium = 1, High = 2 };

inline constexpr std::size_t kSnrClassCount = 3;
inline constexpr std::size_t kAoiClassCount = 3;
inline constexpr std::size_t kModulationCount = 3;
inline constexpr std::size_t kPowerClassCount = 3;
inline constexpr std::size_t kContextCount = kSnrClassCount * kAoiClassCount;
inline constexpr std::size_t kActionCount = kModulationCount * kPowerClassCount;

inline constexpr double kSnrLowUpperDb = 18.0;
inline constexpr double kSnrMediumUpperDb = 30.0;

inline constexpr std::int64_t kAoiFreshMax = 4;
inline constexpr std::int64_t kAoiStaleMax = 7;

struct Context {
  SnrClass snr = SnrClass::Low;
  AoiClass aoi = AoiClass::Fresh;

  constexpr std::size_t index() const {
    return static_cast<std::size_t>(snr) * kAoiClassCount + static_cast<std::size_t>(aoi);
  }
  static constexpr Context from_index(std::size_t i) {
    return Context{static_cast<SnrClass>(i / kAoiClassCount),
                   static_cast<AoiClass>(i % kAoiClassCount)};
  }
  friend constexpr bool operator==(Context, Context) = default;
};

struct Action {
  Modulation modulation = Modulation::BPSK;
  PowerClass power = PowerClass::Low;

  /// Modulation-major: a0 = (BPSK, Low), a1 = (BPSK, Medium), ..., a8 = (16-PSK, High).
  constexpr std::size_t index() const {
    return static_cast<std::size_t>(modulation) * kPowerClassCount +
           static_cast<std::size_t>(power);
  }
  static constexpr Action from_index(std::size_t i) {
    return Action{static_cast<Modulation>(i / kPowerClassCount),
                  static_cast<PowerClass>(i % kPowerClassCount)};
  }
  friend constexpr bool operator==(Action, Action) = default;
};

inline SnrClass quantize_snr(double snr_db) {
  if (!std::isfinite(snr_db)) {
    throw std::invalid_argument("quantize_snr: SNR must be finite");
  }
  if (snr_db <= kSnrLowUpperDb) return SnrClass::Low;
  if (snr_db <= kSnrMediumUpperDb) return SnrClass::Medium;
  return SnrClass::High;
}

inline AoiClass quantize_aoi(std::int64_t age_slots) {
  if (age_slots < 0) {
    throw std::invalid_argument("quantize_aoi: age must be nonnegative");
  }
  if (age_slots <= kAoiFreshMax) return AoiClass::Fresh;
  if (age_slots <= kAoiStaleMax) return AoiClass::Stale;
  return AoiClass::VeryStale;
}

inline constexpr std::string_view to_string(SnrClass c) {
  switch (c) {
    case SnrClass::Low: return "low";
    case SnrClass::Medium: return "medium";
    case SnrClass::High: return "high";
  }
  return "?";
}

inline constexpr std::string_view to_string(AoiClass c) {
  switch (c) {
    case AoiClass::Fresh: return "fresh";
    case AoiClass::Stale: return "stale";
    case AoiClass::VeryStale: return "very_stale";
  }
  return "?";
}

inline constexpr std::string_view to_string(Modulation m) {
  switch (m) {
    case Modulation::BPSK: return "BPSK";
    case Modulation::PSK8: return "8PSK";
    case Modulation::PSK16: return "16PSK";
  }
  return "?";
}

inline constexpr std::string_view to_string(PowerClass p) {
  switch (p) {
    case PowerClass::Low: return "low";
    case PowerClass::Medium: return "medium";
    case PowerClass::High: return "high";
  }
  return "?";
}

inline std::string to_string(Action a) {
  return std::string(to_string(a.modulation)) + "/" + std::string(to_string(a.power));
}

// Accepts the names produced by to_string plus a few common spellings.
inline Modulation parse_modulation(std::string_view s) {
  if (s == "BPSK" || s == "bpsk") return Modulation::BPSK;
  if (s == "8PSK" || s == "8psk" || s == "8-PSK" || s == "PSK8") return Modulation::PSK8;
  if (s == "16PSK" || s == "16psk" || s == "16-PSK" || s == "PSK16") return Modulation::PSK16;
  throw std::invalid_argument("unknown modulation '" + std::string(s) + "'");
}

inline PowerClass parse_power(std::string_view s) {
  if (s == "low" || s == "LowP") return PowerClass::Low;
  if (s == "medium" || s == "MediumP") return PowerClass::Medium;
  if (s == "high" || s == "HighP") return PowerClass::High;
  throw std::invalid_argument("unknown power class '" + std::string(s) + "'");
}

inline constexpr unsigned bits_per_symbol(Modulation m) {
  switch (m) {
    case Modulation::BPSK: return 1;
    case Modulation::PSK8: return 3;
    case Modulation::PSK16: return 4;
  }
  return 1;
}

inline constexpr std::array<Action, kActionCount> all_actions() {
  std::array<Action, kActionCount> out{};
  for (std::size_t i = 0; i < kActionCount; ++i) out[i] = Action::from_index(i);
  return out;
}

}  // namespace uwmab
