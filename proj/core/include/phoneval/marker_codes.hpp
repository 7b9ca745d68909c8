#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace phoneval {

/// The eleven sociophonetic variables tracked by the toolkit.
enum class Marker {
  LowBackMerger,       // -AO   cot–caught distinction
  PreNasalMerger,      // IN    pin–pen
  AyMonophthong,       // AY    time -> [ta:m]
  PostVocalicR,        // R     car -> [ka:]
  ThStopping,          // TH-s  this -> [dIs]
  ThFronting,          // TH-f  with -> [wIf]
  ClusterReduction,    // CC    test -> [tEs]
  FinalDevoicing,      // Dv    had -> [hæt]
  FinalDebuccalized,   // Db    side -> [saI?]
  PreLateralBack,      // prel-o  fool–full
  PreLateralFront,     // prel-i  feel–fill
};

inline constexpr std::array<Marker, 11> kAllMarkers = {
    Marker::LowBackMerger,    Marker::PreNasalMerger,
    Marker::AyMonophthong,    Marker::PostVocalicR,
    Marker::ThStopping,       Marker::ThFronting,
    Marker::ClusterReduction, Marker::FinalDevoicing,
    Marker::FinalDebuccalized, Marker::PreLateralBack,
    Marker::PreLateralFront,
};

constexpr std::string_view marker_code(Marker m) {
  switch (m) {
    case Marker::LowBackMerger: return "-AO";
    case Marker::PreNasalMerger: return "IN";
    case Marker::AyMonophthong: return "AY";
    case Marker::PostVocalicR: return "R";
    case Marker::ThStopping: return "TH-s";
    case Marker::ThFronting: return "TH-f";
    case Marker::ClusterReduction: return "CC";
    case Marker::FinalDevoicing: return "Dv";
    case Marker::FinalDebuccalized: return "Db";
    case Marker::PreLateralBack: return "prel-o";
    case Marker::PreLateralFront: return "prel-i";
  }
  return "?";
}

constexpr std::optional<Marker> parse_marker(std::string_view code) {
  for (Marker m : kAllMarkers)
    if (marker_code(m) == code) return m;
  return std::nullopt;
}

}  // namespace phoneval
