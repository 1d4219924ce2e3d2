#pragma once

#include <atomic>
#include <chrono>
#include <string>

#include "vihoi/priors/encoder.hpp"

namespace vihoi::priors {

// Wire protocol for serving a MultimodalEncoder from another process.
//
// Every message is a frame: u32 little-endian payload length, then payload.
// Integers are little-endian; strings are u32 length + bytes.
//
//   request  = "VHEQ" u8 kind
//     kind 1 (info):   nothing further
//     kind 2 (encode): str prompt, i32 text_begin, i32 text_end (annotation
//                      bytes in the prompt), 3 × str png, u32 n, n × i32 layer
//   response = "VHES" u8 status
//     status 1 (error): str error_code_name, str message
//     status 0, info:   i32 depth, i32 width, i32 image_size, str checksum
//     status 0, encode: i32 d_enc, i32 tokens, i32 visual_begin, i32 visual_end,
//                       i32 text_begin, i32 text_end, i32 blocks_evaluated,
//                       u32 n, n × (i32 layer, tokens × d_enc f32 row-major)
//
// The server tokenizes the prompt itself; PNG is the only image container.
inline constexpr std::size_t kMaxFrameBytes = std::size_t{1} << 30;

// Client side. Each encode opens one connection and sends one request.
// Transport failures raise BackendUnavailable; server-side errors are
// re-raised with their original code.
class RemoteEncoder final : public MultimodalEncoder {
 public:
  RemoteEncoder(std::string host, int port, std::chrono::seconds timeout = std::chrono::seconds(120));

  int depth() const override { return depth_; }
  int width() const override { return width_; }
  int image_size() const override { return image_size_; }
  std::string checksum() const override { return checksum_; }
  LayeredEmbeddings encode(const ImageTriple& images, const PromptBundle& prompt,
                           std::span<const int> layers) const override;

 private:
  std::string host_;
  int port_;
  std::chrono::seconds timeout_;
  int depth_ = 0;
  int width_ = 0;
  int image_size_ = 0;
  std::string checksum_;
};

// Serves one connection at a time until stop() is called.
class EncoderServer {
 public:
  // Port 0 picks a free port. Throws BackendUnavailable if binding fails.
  EncoderServer(const MultimodalEncoder& encoder, const std::string& host = "127.0.0.1", int port = 0);
  ~EncoderServer();
  EncoderServer(const EncoderServer&) = delete;
  EncoderServer& operator=(const EncoderServer&) = delete;

  int port() const { return port_; }
  void serve();
  void stop() { stopping_ = true; }

 private:
  void handle(int fd);

  const MultimodalEncoder& encoder_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stopping_{false};
};

}  // namespace vihoi::priors
