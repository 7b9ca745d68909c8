#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace phoneval {

/// The 39-symbol ARPABET inventory for American English.
inline constexpr std::array<std::string_view, 39> kArpabetSymbols = {
    "AA", "AE", "AH", "AO", "AW", "AY", "B",  "CH", "D",  "DH",
    "EH", "ER", "EY", "F",  "G",  "HH", "IH", "IY", "JH", "K",
    "L",  "M",  "N",  "NG", "OW", "OY", "P",  "R",  "S",  "SH",
    "T",  "TH", "UH", "UW", "V",  "W",  "Y",  "Z",  "ZH"};

bool is_arpabet_symbol(std::string_view symbol);
bool is_arpabet_vowel(std::string_view symbol);

/// A single phone: bare uppercase symbol plus an optional stress digit
/// (vowels only).
struct Phone {
  std::string symbol;
  std::optional<int> stress;  // 0, 1 or 2

  std::string str() const;  // "AO1", "K"
  bool operator==(const Phone&) const = default;
};

using PhoneSeq = std::vector<Phone>;

/// Parses a token like "AO1" or "K". Returns nullopt for symbols outside the
/// inventory, malformed stress digits, or stress on a consonant.
std::optional<Phone> parse_phone(std::string_view token);

std::string phones_to_string(const PhoneSeq& phones);  // "K AO1 T"

/// Plain labels for alignment. strip_stress removes the trailing digit.
std::vector<std::string> phone_labels(const PhoneSeq& phones,
                                      bool strip_stress);

/// Removes a trailing 0/1/2 from an arbitrary phone label.
std::string strip_stress_label(std::string_view label);

}  // namespace phoneval
