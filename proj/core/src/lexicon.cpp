#include "phoneval/lexicon.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "phoneval/errors.hpp"

namespace phoneval {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool is_sibilant(const std::string& symbol) {
  static constexpr std::array<std::string_view, 6> kSibilants = {
      "S", "Z", "SH", "ZH", "CH", "JH"};
  return std::find(kSibilants.begin(), kSibilants.end(), symbol) !=
         kSibilants.end();
}

bool is_voiceless(const std::string& symbol) {
  static constexpr std::array<std::string_view, 9> kVoiceless = {
      "P", "T", "K", "F", "TH", "S", "SH", "CH", "HH"};
  return std::find(kVoiceless.begin(), kVoiceless.end(), symbol) !=
         kVoiceless.end();
}

// Plural / possessive / third-singular -s.
void append_s_suffix(PhoneSeq& phones) {
  const std::string& last = phones.back().symbol;
  if (is_sibilant(last)) {
    phones.push_back({"IH", 0});
    phones.push_back({"Z", std::nullopt});
  } else if (is_voiceless(last)) {
    phones.push_back({"S", std::nullopt});
  } else {
    phones.push_back({"Z", std::nullopt});
  }
}

// Past-tense -ed.
void append_ed_suffix(PhoneSeq& phones) {
  const std::string& last = phones.back().symbol;
  if (last == "T" || last == "D") {
    phones.push_back({"IH", 0});
    phones.push_back({"D", std::nullopt});
  } else if (is_voiceless(last)) {
    phones.push_back({"T", std::nullopt});
  } else {
    phones.push_back({"D", std::nullopt});
  }
}

void append_ing_suffix(PhoneSeq& phones) {
  phones.push_back({"IH", 0});
  phones.push_back({"NG", std::nullopt});
}

}  // namespace

Lexicon::Lexicon(const Lexicon& other) {
  std::scoped_lock lock(other.derived_mutex_);
  entries_ = other.entries_;
  derived_ = other.derived_;
}

Lexicon& Lexicon::operator=(const Lexicon& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(derived_mutex_, other.derived_mutex_);
  entries_ = other.entries_;
  derived_ = other.derived_;
  return *this;
}

void Lexicon::add_variant(std::string word, PronVariant variant) {
  entries_[std::move(word)].push_back(std::move(variant));
}

bool Lexicon::contains(std::string_view word) const {
  return entries_.find(std::string(word)) != entries_.end();
}

std::vector<PronVariant> Lexicon::lookup(std::string_view word) const {
  std::string key = lower(word);
  std::vector<PronVariant> out;
  if (auto it = entries_.find(key); it != entries_.end()) out = it->second;
  {
    std::scoped_lock lock(derived_mutex_);
    if (auto it = derived_.find(key); it != derived_.end() && it->second)
      out.push_back({*it->second, VariantSource::Derived});
  }
  return out;
}

std::optional<PhoneSeq> Lexicon::first_pron(std::string_view word) const {
  if (auto it = entries_.find(std::string(word)); it != entries_.end())
    return it->second.front().phones;
  return std::nullopt;
}

std::optional<PhoneSeq> Lexicon::derive_oov(std::string_view raw) const {
  std::string word = lower(raw);
  {
    std::scoped_lock lock(derived_mutex_);
    if (auto it = derived_.find(word); it != derived_.end()) return it->second;
  }

  auto ends_with = [&word](std::string_view suffix) {
    return word.size() > suffix.size() &&
           word.compare(word.size() - suffix.size(), suffix.size(), suffix) ==
               0;
  };
  auto stem_of = [&word](std::size_t chop) {
    return word.substr(0, word.size() - chop);
  };

  std::optional<PhoneSeq> result;
  // Rule order: possessive, plural/3sg, past, gerund. Stems are looked up
  // bare first, then with a restored final e for -ed/-ing ("hoping"->"hope").
  if (ends_with("'s")) {
    if (auto stem = first_pron(stem_of(2))) {
      result = *stem;
      append_s_suffix(*result);
    }
  } else if (ends_with("s'")) {
    if (auto stem = first_pron(stem_of(2))) {
      result = *stem;
      append_s_suffix(*result);
    }
  } else if (ends_with("s")) {
    std::optional<PhoneSeq> stem = first_pron(stem_of(1));
    if (!stem && ends_with("es")) stem = first_pron(stem_of(2));
    if (stem) {
      result = *stem;
      append_s_suffix(*result);
    }
  }
  if (!result && ends_with("ed")) {
    std::optional<PhoneSeq> stem = first_pron(stem_of(2));
    if (!stem) stem = first_pron(stem_of(2) + "e");
    if (stem) {
      result = *stem;
      append_ed_suffix(*result);
    }
  }
  if (!result && ends_with("ing")) {
    std::optional<PhoneSeq> stem = first_pron(stem_of(3));
    if (!stem) stem = first_pron(stem_of(3) + "e");
    if (stem) {
      result = *stem;
      append_ing_suffix(*result);
    }
  }

  std::scoped_lock lock(derived_mutex_);
  auto [it, inserted] = derived_.emplace(word, result);
  return it->second;  // keep the first answer under racing derivations
}

Lexicon::Phonetization Lexicon::hypothesis_phones(
    const std::vector<std::string>& tokens) const {
  Phonetization out;
  for (const std::string& token : tokens) {
    std::string key = lower(token);
    if (auto pron = first_pron(key)) {
      out.phones.insert(out.phones.end(), pron->begin(), pron->end());
      continue;
    }
    if (auto derived = derive_oov(key)) {
      out.phones.insert(out.phones.end(), derived->begin(), derived->end());
      ++out.derived_tokens;
      continue;
    }
    out.oov.push_back(token);
  }
  return out;
}

Lexicon parse_dictionary(std::string_view text, const std::string& filename,
                         VariantSource source) {
  Lexicon lex;
  std::size_t line = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(start, end - start);
    ++line;
    bool at_eof = end == text.size();
    start = end + 1;
    if (at_eof && raw.empty()) break;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    if (raw.empty() || raw.substr(0, 3) == ";;;") continue;

    std::size_t sep = raw.find_first_of(" \t");
    if (sep == std::string_view::npos)
      throw ParseError(filename, line, "missing pronunciation for \"" +
                                           std::string(raw) + "\"");
    std::string word = lower(raw.substr(0, sep));
    // Variant index "(2)" only orders entries; file order already does that.
    if (std::size_t paren = word.find('('); paren != std::string::npos)
      word.erase(paren);
    if (word.empty()) throw ParseError(filename, line, "empty word");

    PhoneSeq phones;
    std::size_t p = sep;
    while (p < raw.size()) {
      while (p < raw.size() && (raw[p] == ' ' || raw[p] == '\t')) ++p;
      if (p >= raw.size()) break;
      std::size_t q = p;
      while (q < raw.size() && raw[q] != ' ' && raw[q] != '\t') ++q;
      std::string_view token = raw.substr(p, q - p);
      auto phone = parse_phone(token);
      if (!phone)
        throw ParseError(filename, line, "unknown phone \"" +
                                             std::string(token) +
                                             "\" in entry for \"" + word +
                                             "\"");
      phones.push_back(std::move(*phone));
      p = q;
    }
    if (phones.empty())
      throw ParseError(filename, line,
                       "empty pronunciation for \"" + word + "\"");
    lex.add_variant(std::move(word), {std::move(phones), source});
  }
  return lex;
}

Lexicon overlay(const Lexicon& base, const Lexicon& regional) {
  Lexicon merged;
  for (const auto& [word, variants] : regional.entries())
    for (const PronVariant& v : variants)
      merged.add_variant(word, {v.phones, VariantSource::Overlay});
  for (const auto& [word, variants] : base.entries())
    for (const PronVariant& v : variants) merged.add_variant(word, v);
  return merged;
}

}  // namespace phoneval
