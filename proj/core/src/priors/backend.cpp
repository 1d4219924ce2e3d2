#include "vihoi/priors/backend.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "vihoi/common/error.hpp"

namespace vihoi::priors {

namespace {

constexpr std::string_view kRequestMagic = "VHEQ";
constexpr std::string_view kResponseMagic = "VHES";
constexpr std::uint8_t kInfo = 1;
constexpr std::uint8_t kEncode = 2;

class Writer {
 public:
  void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(int v) { u32(static_cast<std::uint32_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }
  void blob(std::span<const std::uint8_t> b) {
    u32(static_cast<std::uint32_t>(b.size()));
    out_.insert(out_.end(), b.begin(), b.end());
  }
  void f32(std::span<const float> values) {
    const io::Bytes packed = io::pack_f32(values);
    out_.insert(out_.end(), packed.begin(), packed.end());
  }
  io::Bytes& data() { return out_; }

 private:
  io::Bytes out_;
};

class Reader {
 public:
  explicit Reader(const io::Bytes& in) : in_(in) {}
  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > in_.size() - pos_) fail(ErrorCode::kFormat, "truncated encoder frame");
    const auto out = std::span<const std::uint8_t>(in_).subspan(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint8_t u8() { return take(1)[0]; }
  std::uint32_t u32() {
    const auto b = take(4);
    return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  int i32() { return static_cast<int>(u32()); }
  std::string str() {
    const auto b = take(u32());
    return {b.begin(), b.end()};
  }
  void magic(std::string_view m) {
    const auto b = take(m.size());
    if (!std::equal(b.begin(), b.end(), m.begin())) fail(ErrorCode::kFormat, "bad encoder frame magic");
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  const io::Bytes& in_;
  std::size_t pos_ = 0;
};

class Socket {
 public:
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket() {
    if (fd_ >= 0) ::close(fd_);
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  int fd() const { return fd_; }

 private:
  int fd_;
};

[[noreturn]] void transport_error(const std::string& what) {
  fail(ErrorCode::kBackendUnavailable, what + ": " + std::strerror(errno));
}

void send_all(int fd, std::span<const std::uint8_t> data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      transport_error("encoder backend send failed");
    }
    data = data.subspan(static_cast<std::size_t>(n));
  }
}

// False on a clean end of stream before the first byte.
bool recv_all(int fd, std::uint8_t* out, std::size_t n, bool eof_ok) {
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd, out + got, n - got, 0);
    if (r == 0) {
      if (got == 0 && eof_ok) return false;
      fail(ErrorCode::kBackendUnavailable, "encoder backend closed the connection mid-frame");
    }
    if (r < 0) {
      if (errno == EINTR) continue;
      transport_error("encoder backend receive failed");
    }
    got += static_cast<std::size_t>(r);
  }
  return true;
}

void send_frame(int fd, const io::Bytes& payload) {
  Writer header;
  header.u32(static_cast<std::uint32_t>(payload.size()));
  send_all(fd, header.data());
  send_all(fd, payload);
}

std::optional<io::Bytes> recv_frame(int fd, bool eof_ok) {
  std::uint8_t len_bytes[4];
  if (!recv_all(fd, len_bytes, 4, eof_ok)) return std::nullopt;
  const std::size_t len = len_bytes[0] | (len_bytes[1] << 8) | (len_bytes[2] << 16) |
                          (static_cast<std::size_t>(len_bytes[3]) << 24);
  if (len > kMaxFrameBytes) fail(ErrorCode::kFormat, "encoder frame exceeds size limit");
  io::Bytes payload(len);
  recv_all(fd, payload.data(), len, false);
  return payload;
}

ErrorCode parse_error_code(std::string_view name) {
  for (int c = 0; c <= static_cast<int>(ErrorCode::kConfig); ++c) {
    if (to_string(static_cast<ErrorCode>(c)) == name) return static_cast<ErrorCode>(c);
  }
  return ErrorCode::kBackendUnavailable;
}

void set_timeout(int fd, std::chrono::seconds timeout) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout.count());
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
}

io::Bytes round_trip(const std::string& host, int port, std::chrono::seconds timeout, const io::Bytes& request) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &found) != 0 || !found) {
    fail(ErrorCode::kBackendUnavailable, "cannot resolve encoder backend host " + host);
  }
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(found, ::freeaddrinfo);
  Socket sock(::socket(found->ai_family, found->ai_socktype, found->ai_protocol));
  if (sock.fd() < 0) transport_error("cannot create socket");
  set_timeout(sock.fd(), timeout);
  if (::connect(sock.fd(), found->ai_addr, found->ai_addrlen) != 0) {
    transport_error("cannot connect to encoder backend " + host + ":" + std::to_string(port));
  }
  send_frame(sock.fd(), request);
  return *recv_frame(sock.fd(), false);
}

// Reads the response header, re-raising server errors.
void check_response(Reader& r) {
  r.magic(kResponseMagic);
  if (r.u8() == 0) return;
  const std::string code = r.str();
  fail(parse_error_code(code), "encoder backend: " + r.str());
}

}  // namespace

RemoteEncoder::RemoteEncoder(std::string host, int port, std::chrono::seconds timeout)
    : host_(std::move(host)), port_(port), timeout_(timeout) {
  Writer w;
  w.bytes(kRequestMagic);
  w.u8(kInfo);
  const io::Bytes response = round_trip(host_, port_, timeout_, w.data());
  Reader r(response);
  check_response(r);
  depth_ = r.i32();
  width_ = r.i32();
  image_size_ = r.i32();
  checksum_ = r.str();
}

LayeredEmbeddings RemoteEncoder::encode(const ImageTriple& images, const PromptBundle& prompt,
                                        std::span<const int> layers) const {
  Writer w;
  w.bytes(kRequestMagic);
  w.u8(kEncode);
  w.str(prompt.raw);
  w.i32(prompt.text_bytes.start);
  w.i32(prompt.text_bytes.end);
  for (const Image& img : images) w.blob(encode_png(img));
  w.u32(static_cast<std::uint32_t>(layers.size()));
  for (const int l : layers) w.i32(l);

  const io::Bytes response = round_trip(host_, port_, timeout_, w.data());
  Reader r(response);
  check_response(r);
  LayeredEmbeddings out;
  out.d_enc = r.i32();
  const int tokens = r.i32();
  out.visual_span = Span{r.i32(), r.i32()};
  out.text_span = Span{r.i32(), r.i32()};
  out.blocks_evaluated = r.i32();
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    const int layer = r.i32();
    const std::vector<float> values =
        io::unpack_f32(r.take(static_cast<std::size_t>(tokens) * static_cast<std::size_t>(out.d_enc) * 4));
    out.states.emplace(layer, Eigen::Map<const FloatMatrix>(values.data(), tokens, out.d_enc));
  }
  if (!r.done()) fail(ErrorCode::kFormat, "trailing bytes in encoder response");
  return out;
}

EncoderServer::EncoderServer(const MultimodalEncoder& encoder, const std::string& host, int port) : encoder_(encoder) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) transport_error("cannot create socket");
  const int yes = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    fail(ErrorCode::kBackendUnavailable, "encoder server needs an IPv4 address, got " + host);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(listen_fd_, 8) != 0) {
    const int err = errno;
    ::close(listen_fd_);
    errno = err;
    transport_error("cannot listen on " + host + ":" + std::to_string(port));
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

EncoderServer::~EncoderServer() {
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void EncoderServer::serve() {
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int ready = ::poll(&p, 1, 100);
    if (ready <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    Socket conn(fd);
    set_timeout(fd, std::chrono::seconds(120));
    try {
      handle(fd);
    } catch (const Error&) {
      // Transport failure on this connection; keep serving others.
    }
  }
}

void EncoderServer::handle(int fd) {
  while (auto request = recv_frame(fd, true)) {
    Writer w;
    w.bytes(kResponseMagic);
    try {
      Reader r(*request);
      r.magic(kRequestMagic);
      const std::uint8_t kind = r.u8();
      if (kind == kInfo) {
        w.u8(0);
        w.i32(encoder_.depth());
        w.i32(encoder_.width());
        w.i32(encoder_.image_size());
        w.str(encoder_.checksum());
      } else if (kind == kEncode) {
        std::string raw = r.str();
        const Span text_bytes{r.i32(), r.i32()};
        ImageTriple images;
        for (Image& img : images) {
          const std::string png = r.str();
          img = decode_png(std::span(reinterpret_cast<const std::uint8_t*>(png.data()), png.size()));
        }
        std::vector<int> layers(r.u32());
        for (int& l : layers) l = r.i32();
        if (!r.done()) fail(ErrorCode::kFormat, "trailing bytes in encoder request");
        const LayeredEmbeddings emb = encoder_.encode(images, bundle_prompt(std::move(raw), text_bytes), layers);
        w.u8(0);
        w.i32(emb.d_enc);
        w.i32(emb.tokens());
        w.i32(emb.visual_span.start);
        w.i32(emb.visual_span.end);
        w.i32(emb.text_span.start);
        w.i32(emb.text_span.end);
        w.i32(emb.blocks_evaluated);
        w.u32(static_cast<std::uint32_t>(emb.states.size()));
        for (const auto& [layer, states] : emb.states) {
          w.i32(layer);
          w.f32(std::span(states.data(), static_cast<std::size_t>(states.size())));
        }
      } else {
        fail(ErrorCode::kFormat, "unknown encoder request kind");
      }
    } catch (const Error& e) {
      w = Writer();
      w.bytes(kResponseMagic);
      w.u8(1);
      w.str(to_string(e.code()));
      w.str(e.what());
    }
    send_frame(fd, w.data());
  }
}

}  // namespace vihoi::priors
