#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vihoi/priors/tokenizer.hpp"

namespace vihoi::priors {

// Half-open range [start, end) of token (or byte) indices.
struct Span {
  int start = 0;
  int end = 0;

  int size() const { return end - start; }
  bool operator==(const Span&) const = default;
};

struct PromptBundle {
  std::string raw;
  std::vector<Token> tokens;
  Span text_bytes;  // annotation position in `raw`
  Span text_span;   // annotation position in `tokens`

  std::vector<int> ids() const;
};

inline constexpr std::string_view kTextPlaceholder = "{text}";

inline constexpr std::string_view kExtractionTemplate =
    "We are conducting the text-to-HOI motion generation task and the given textual description is: {text}. We want "
    "to extract motion priors from the following three reference images to facilitate the generation of "
    "Human-Object-Interaction motion. These priors include the human pose, the object's shape and size, and the "
    "contact region on the object during interaction, etc. The initial position of the object is in front of the "
    "person.";

inline constexpr std::string_view kT2ITemplate =
    "{text}. Please first divide the above-described interaction process into three stages, and ensure that there "
    "is contact between the character and the object in each stage. Then, synthesize one image for each of the "
    "three stages. You should ensure each image contains only one character and one object, and that the object's "
    "shape and size match those in the provided image. Moreover, both the background and the character should be "
    "realistic and consistent across the three generated images.";

// Token range exactly covering bytes [bytes.start, bytes.end). Throws
// TokenizationMismatch when no token boundary falls on either end.
Span locate_span(const std::vector<Token>& tokens, Span bytes);

// Throws InvalidArgument for empty text and TokenizationMismatch when the
// annotation cannot be recovered from its token span.
PromptBundle build_extraction_prompt(std::string_view text, const Tokenizer& tokenizer = Tokenizer::toy());
// Retokenizes a prompt received from elsewhere, given the annotation bytes.
PromptBundle bundle_prompt(std::string raw, Span text_bytes, const Tokenizer& tokenizer = Tokenizer::toy());

// Source text covered by a token span.
std::string detokenize(const PromptBundle& prompt, Span span);

// Throws InvalidArgument for empty text.
std::string build_t2i_prompt(std::string_view text);

}  // namespace vihoi::priors
