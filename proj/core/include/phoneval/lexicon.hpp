#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "phoneval/arpabet.hpp"

namespace phoneval {

enum class VariantSource { Base, Overlay, Derived };

struct PronVariant {
  PhoneSeq phones;
  VariantSource source = VariantSource::Base;

  bool operator==(const PronVariant&) const = default;
};

/// Word -> ordered pronunciation variants. Overlay variants sort before base
/// variants of the same word; rule-derived pronunciations are memoized in a
/// side cache so repeated scoring passes agree and stay cheap.
class Lexicon {
 public:
  Lexicon() = default;
  Lexicon(const Lexicon& other);
  Lexicon& operator=(const Lexicon& other);

  /// Dictionary variants (base + overlay) for a lowercased word, file order
  /// preserved. Previously derived pronunciations are included last. Empty
  /// iff the word is absent; absence is a value, not an error.
  std::vector<PronVariant> lookup(std::string_view word) const;

  /// Builds a pronunciation for an inflected out-of-vocabulary word by
  /// stripping a possessive/plural/past/gerund suffix, looking up the stem
  /// (with e-restoration for -ed/-ing) and appending phones by the standard
  /// voicing and sibilance rules. Returns nullopt when no rule applies or no
  /// stem is found; the caller reports those words as OOV. Results are
  /// cached and tagged Derived.
  std::optional<PhoneSeq> derive_oov(std::string_view word) const;

  /// First-variant phones for each token, concatenated. Tokens that are
  /// neither in the dictionary nor derivable contribute nothing and land in
  /// `oov` (order preserved, duplicates kept).
  struct Phonetization {
    PhoneSeq phones;
    std::vector<std::string> oov;
    std::size_t derived_tokens = 0;  // how much of the stream was rule-built
  };
  Phonetization hypothesis_phones(const std::vector<std::string>& tokens) const;

  bool contains(std::string_view word) const;
  std::size_t size() const { return entries_.size(); }
  const std::unordered_map<std::string, std::vector<PronVariant>>& entries()
      const {
    return entries_;
  }

  void add_variant(std::string word, PronVariant variant);

 private:
  std::optional<PhoneSeq> first_pron(std::string_view word) const;

  std::unordered_map<std::string, std::vector<PronVariant>> entries_;
  mutable std::mutex derived_mutex_;
  mutable std::unordered_map<std::string, std::optional<PhoneSeq>> derived_;
};

/// CMUdict text format: `WORD  PH1 PH2 ...`, alternates as `WORD(2)`,
/// comments starting with `;;;`. Words are normalized to lowercase.
/// Unknown phone symbols and empty pronunciations are ParseErrors naming
/// the word and line.
Lexicon parse_dictionary(std::string_view text, const std::string& filename = "",
                         VariantSource source = VariantSource::Base);

/// Merges a regional dictionary over a base one: all words from both; for
/// shared words the regional variants come first, tagged Overlay.
Lexicon overlay(const Lexicon& base, const Lexicon& regional);

}  // namespace phoneval
