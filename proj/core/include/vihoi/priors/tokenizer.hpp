#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vihoi::priors {

struct Token {
  int id = 0;
  int begin = 0;  // byte offsets into the tokenized string
  int end = 0;

  bool operator==(const Token&) const = default;
};

// Lower-cased word/punctuation tokenizer over a fixed vocabulary. Words are
// maximal runs of ASCII letters and digits (bytes >= 0x80 count as word
// characters so UTF-8 sequences stay whole); every other non-space byte is a
// token of its own. Out-of-vocabulary words map to <unk>.
class Tokenizer {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  explicit Tokenizer(std::vector<std::string> vocabulary);
  // The 2048-entry vocabulary shipped with the library.
  static const Tokenizer& toy();

  std::vector<Token> tokenize(std::string_view text) const;
  int id(std::string_view word) const;
  const std::string& word(int id) const { return vocabulary_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(vocabulary_.size()); }

 private:
  std::vector<std::string> vocabulary_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace vihoi::priors
