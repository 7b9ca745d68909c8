#include "phoneval/arpabet.hpp"

#include <algorithm>

namespace phoneval {

namespace {

constexpr std::array<std::string_view, 15> kVowels = {
    "AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER",
    "EY", "IH", "IY", "OW", "OY", "UH", "UW"};

}  // namespace

bool is_arpabet_symbol(std::string_view symbol) {
  return std::find(kArpabetSymbols.begin(), kArpabetSymbols.end(), symbol) !=
         kArpabetSymbols.end();
}

bool is_arpabet_vowel(std::string_view symbol) {
  return std::find(kVowels.begin(), kVowels.end(), symbol) != kVowels.end();
}

std::string Phone::str() const {
  std::string s = symbol;
  if (stress) s += static_cast<char>('0' + *stress);
  return s;
}

std::optional<Phone> parse_phone(std::string_view token) {
  if (token.empty()) return std::nullopt;
  std::optional<int> stress;
  char last = token.back();
  if (last >= '0' && last <= '2') {
    stress = last - '0';
    token.remove_suffix(1);
  } else if (last >= '3' && last <= '9') {
    return std::nullopt;
  }
  std::string symbol(token);
  if (!is_arpabet_symbol(symbol)) return std::nullopt;
  if (stress && !is_arpabet_vowel(symbol)) return std::nullopt;
  return Phone{std::move(symbol), stress};
}

std::string phones_to_string(const PhoneSeq& phones) {
  std::string out;
  for (const Phone& p : phones) {
    if (!out.empty()) out += ' ';
    out += p.str();
  }
  return out;
}

std::vector<std::string> phone_labels(const PhoneSeq& phones,
                                      bool strip_stress) {
  std::vector<std::string> out;
  out.reserve(phones.size());
  for (const Phone& p : phones) out.push_back(strip_stress ? p.symbol : p.str());
  return out;
}

std::string strip_stress_label(std::string_view label) {
  if (!label.empty() && label.back() >= '0' && label.back() <= '2')
    label.remove_suffix(1);
  return std::string(label);
}

}  // namespace phoneval
