#include "vihoi/render/t2i.hpp"

#include <algorithm>
#include <cstdlib>
#include <httplib.h>
#include <json.hpp>

#include "vihoi/common/error.hpp"
#include "vihoi/common/io.hpp"

namespace vihoi::render {

namespace {

void check_prompt(const std::string& prompt) {
  if (prompt.empty()) fail(ErrorCode::kInvalidArgument, "text-to-image prompt is empty");
}

// Splits "http://host:port/path" into the origin and the path.
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
  const auto scheme = endpoint.find("://");
  const auto path_start = endpoint.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path_start == std::string::npos) return {endpoint, "/"};
  return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

}  // namespace

ImageTriple StubT2I::generate(const std::string& prompt, const Image& seed_image) {
  check_prompt(prompt);
  io::Bytes key(prompt.begin(), prompt.end());
  key.push_back(0);
  const io::Bytes png = encode_png(seed_image);
  key.insert(key.end(), png.begin(), png.end());
  const std::string digest = io::sha256_hex(key);
  auto byte = [&](int i) { return std::stoi(digest.substr(static_cast<std::size_t>(2 * i), 2), nullptr, 16); };

  ImageTriple out;
  for (int k = 0; k < 3; ++k) {
    std::array<float, 3> tint{};
    for (int c = 0; c < 3; ++c) tint[c] = 0.85f + 0.3f * static_cast<float>(byte(4 * k + c)) / 255.0f;
    const int shift = byte(4 * k + 3) % 7 - 3;
    Image img(seed_image.height, seed_image.width);
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        const int sx = std::clamp(x - shift, 0, img.width - 1);
        for (int c = 0; c < 3; ++c) img.at(y, x, c) = std::clamp(seed_image.at(y, sx, c) * tint[c], 0.0f, 1.0f);
      }
    out[static_cast<std::size_t>(k)] = std::move(img);
  }
  return out;
}

HttpT2I::HttpT2I(std::string endpoint, std::chrono::seconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout) {
  if (endpoint_.empty()) fail(ErrorCode::kBackendUnavailable, "text-to-image endpoint is not configured");
}

ImageTriple HttpT2I::generate(const std::string& prompt, const Image& seed_image) {
  check_prompt(prompt);
  const auto [origin, path] = split_endpoint(endpoint_);
  httplib::Client client(origin);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);

  const nlohmann::json request = {{"prompt", prompt}, {"seed_image", io::base64_encode(encode_png(seed_image))}};
  const auto res = client.Post(path, request.dump(), "application/json");
  if (!res) fail(ErrorCode::kBackendUnavailable, "text-to-image request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    fail(ErrorCode::kBackendUnavailable, "text-to-image backend returned HTTP " + std::to_string(res->status));
  }

  nlohmann::json body;
  try {
    body = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("text-to-image response is not JSON: ") + e.what());
  }
  const nlohmann::json& images = body.is_object() && body.contains("images") ? body["images"] : body;
  if (!images.is_array()) fail(ErrorCode::kFormat, "text-to-image response holds no image array");
  if (images.size() != 3) {
    fail(ErrorCode::kBadResponseCount, "expected 3 images, got " + std::to_string(images.size()));
  }
  ImageTriple out;
  for (std::size_t i = 0; i < 3; ++i) {
    if (!images[i].is_string()) fail(ErrorCode::kFormat, "text-to-image response entries must be base64 strings");
    out[i] = decode_png(io::base64_decode(images[i].get<std::string>()));
  }
  return out;
}

std::unique_ptr<T2IClient> make_t2i_client(const std::string& mode) {
  if (mode == "stub") return std::make_unique<StubT2I>();
  if (mode == "external") {
    const char* endpoint = std::getenv(kT2IEndpointEnv);
    return std::make_unique<HttpT2I>(endpoint ? endpoint : "");
  }
  fail(ErrorCode::kConfig, "unknown text-to-image mode: " + mode);
}

}  // namespace vihoi::render
