#pragma once

#include <array>
#include <chrono>
#include <memory>
#include <string>

#include "vihoi/common/image.hpp"

namespace vihoi::render {

class T2IClient {
 public:
  virtual ~T2IClient() = default;
  // Throws InvalidArgument for an empty prompt.
  virtual ImageTriple generate(const std::string& prompt, const Image& seed_image) = 0;
};

// Deterministic fixtures keyed by SHA-256 of (prompt, seed image PNG): the
// seed image under three hash-derived tints and a small horizontal shift.
class StubT2I final : public T2IClient {
 public:
  ImageTriple generate(const std::string& prompt, const Image& seed_image) override;
};

// POSTs {"prompt": str, "seed_image": base64 PNG} as JSON to the endpoint
// and expects a JSON array of exactly 3 base64 PNG strings (an object with
// an "images" array is accepted too). Throws BackendUnavailable on transport
// or HTTP errors and BadResponseCount unless exactly 3 images come back.
class HttpT2I final : public T2IClient {
 public:
  explicit HttpT2I(std::string endpoint, std::chrono::seconds timeout = std::chrono::seconds(120));
  ImageTriple generate(const std::string& prompt, const Image& seed_image) override;

 private:
  std::string endpoint_;
  std::chrono::seconds timeout_;
};

inline constexpr const char* kT2IEndpointEnv = "VIHOI_T2I_ENDPOINT";

// "stub" or "external"; the external endpoint comes from VIHOI_T2I_ENDPOINT.
std::unique_ptr<T2IClient> make_t2i_client(const std::string& mode);

}  // namespace vihoi::render
