#include "vihoi/priors/prompt.hpp"

#include "vihoi/common/error.hpp"

namespace vihoi::priors {

namespace {

std::string substitute(std::string_view templ, std::string_view text) {
  std::string out(templ);
  const auto at = out.find(kTextPlaceholder);
  out.replace(at, kTextPlaceholder.size(), text);
  return out;
}

void require_text(std::string_view text) {
  if (text.empty()) fail(ErrorCode::kInvalidArgument, "annotation text is empty");
}

}  // namespace

std::vector<int> PromptBundle::ids() const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const Token& t : tokens) out.push_back(t.id);
  return out;
}

Span locate_span(const std::vector<Token>& tokens, Span bytes) {
  int start = -1, end = -1;
  for (int i = 0; i < static_cast<int>(tokens.size()); ++i) {
    const Token& t = tokens[static_cast<std::size_t>(i)];
    if (t.begin == bytes.start) start = i;
    if (t.end == bytes.end) end = i + 1;
  }
  if (start < 0 || end <= start) fail(ErrorCode::kTokenizationMismatch, "annotation does not align with token boundaries");
  return {start, end};
}

PromptBundle bundle_prompt(std::string raw, Span text_bytes, const Tokenizer& tokenizer) {
  if (text_bytes.start < 0 || text_bytes.end > static_cast<int>(raw.size()) || text_bytes.size() <= 0) {
    fail(ErrorCode::kTokenizationMismatch, "annotation byte range lies outside the prompt");
  }
  PromptBundle out;
  out.raw = std::move(raw);
  out.tokens = tokenizer.tokenize(out.raw);
  out.text_bytes = text_bytes;
  out.text_span = locate_span(out.tokens, text_bytes);
  return out;
}

PromptBundle build_extraction_prompt(std::string_view text, const Tokenizer& tokenizer) {
  require_text(text);
  const int at = static_cast<int>(kExtractionTemplate.find(kTextPlaceholder));
  PromptBundle out =
      bundle_prompt(substitute(kExtractionTemplate, text), {at, at + static_cast<int>(text.size())}, tokenizer);
  if (detokenize(out, out.text_span) != text) {
    fail(ErrorCode::kTokenizationMismatch, "annotation not recovered from its token span");
  }
  return out;
}

std::string detokenize(const PromptBundle& prompt, Span span) {
  if (span.size() <= 0) return {};
  const int b = prompt.tokens.at(static_cast<std::size_t>(span.start)).begin;
  const int e = prompt.tokens.at(static_cast<std::size_t>(span.end - 1)).end;
  return prompt.raw.substr(static_cast<std::size_t>(b), static_cast<std::size_t>(e - b));
}

std::string build_t2i_prompt(std::string_view text) {
  require_text(text);
  return substitute(kT2ITemplate, text);
}

}  // namespace vihoi::priors
