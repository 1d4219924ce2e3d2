#include "vihoi/priors/tokenizer.hpp"

#include <sstream>

#include "vihoi/common/embedded_data.hpp"
#include "vihoi/common/error.hpp"

namespace vihoi::priors {

namespace {

bool is_word_byte(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80; }
bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

}  // namespace

Tokenizer::Tokenizer(std::vector<std::string> vocabulary) : vocabulary_(std::move(vocabulary)) {
  if (vocabulary_.size() < 2) fail(ErrorCode::kInvalidArgument, "vocabulary needs at least <pad> and <unk>");
  for (std::size_t i = 0; i < vocabulary_.size(); ++i) {
    if (!index_.emplace(vocabulary_[i], static_cast<int>(i)).second) {
      fail(ErrorCode::kInvalidArgument, "duplicate vocabulary entry: " + vocabulary_[i]);
    }
  }
}

const Tokenizer& Tokenizer::toy() {
  static const Tokenizer instance = [] {
    std::vector<std::string> words;
    std::istringstream in{std::string(data::vocabulary())};
    for (std::string line; std::getline(in, line);)
      if (!line.empty()) words.push_back(line);
    return Tokenizer(std::move(words));
  }();
  return instance;
}

int Tokenizer::id(std::string_view word) const {
  const auto it = index_.find(lower(word));
  return it == index_.end() ? kUnk : it->second;
}

std::vector<Token> Tokenizer::tokenize(std::string_view text) const {
  std::vector<Token> out;
  const int n = static_cast<int>(text.size());
  for (int i = 0; i < n;) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_space(c)) {
      ++i;
      continue;
    }
    int j = i + 1;
    if (is_word_byte(c))
      while (j < n && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
    out.push_back({id(text.substr(i, j - i)), i, j});
    i = j;
  }
  return out;
}

}  // namespace vihoi::priors
