#include <gtest/gtest.h>

#include <thread>

#include "vihoi/common/error.hpp"
#include "vihoi/priors/backend.hpp"
#include "vihoi/priors/encoder.hpp"
#include "vihoi/priors/prompt.hpp"
#include "vihoi/priors/warmup.hpp"

namespace vihoi::priors {
namespace {

TEST(Tokenizer, SplitsWordsAndPunctuationWithOffsets) {
  const Tokenizer& tok = Tokenizer::toy();
  EXPECT_EQ(tok.size(), 2048);
  const std::string s = "Text-to-HOI  object's x7q9z";
  const auto t = tok.tokenize(s);
  ASSERT_EQ(t.size(), 9u);
  const std::vector<std::string> pieces = {"Text", "-", "to", "-", "HOI", "object", "'", "s", "x7q9z"};
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(s.substr(t[i].begin, t[i].end - t[i].begin), pieces[i]);
  EXPECT_EQ(t[0].id, tok.id("text"));
  EXPECT_EQ(t[4].id, tok.id("hoi"));
  EXPECT_NE(t[4].id, Tokenizer::kUnk);
  EXPECT_EQ(t[8].id, Tokenizer::kUnk);
  EXPECT_EQ(tok.word(t[2].id), "to");
}

TEST(Prompt, ExtractionTemplateEmbedsAnnotation) {
  const PromptBundle p = build_extraction_prompt("Lift the box.");
  EXPECT_NE(p.raw.find("the given textual description is: Lift the box."), std::string::npos);
  EXPECT_EQ(p.raw.rfind("We are conducting the text-to-HOI motion generation task", 0), 0u);
  EXPECT_EQ(detokenize(p, p.text_span), "Lift the box.");
  EXPECT_EQ(p.text_span.size(), 4);
  EXPECT_LE(0, p.text_span.start);
  EXPECT_LE(p.text_span.end, static_cast<int>(p.tokens.size()));
}

TEST(Prompt, TemplateIsIdenticalOutsideTheAnnotation) {
  const PromptBundle a = build_extraction_prompt("Lift the box.");
  const PromptBundle b = build_extraction_prompt("Kick the trash can forward, gently!");
  EXPECT_EQ(a.raw.substr(0, a.text_bytes.start), b.raw.substr(0, b.text_bytes.start));
  EXPECT_EQ(a.raw.substr(a.text_bytes.end), b.raw.substr(b.text_bytes.end));
  const auto ia = a.ids(), ib = b.ids();
  EXPECT_TRUE(std::equal(ia.begin(), ia.begin() + a.text_span.start, ib.begin(), ib.begin() + b.text_span.start));
  EXPECT_TRUE(std::equal(ia.begin() + a.text_span.end, ia.end(), ib.begin() + b.text_span.end, ib.end()));
}

TEST(Prompt, SpanRoundTripsForRandomAnnotations) {
  const Tokenizer& tok = Tokenizer::toy();
  Rng rng(17);
  const std::vector<std::string> extras = {",", ".", "!", "'s", "-", "42", "zqxv", "café", "(", ")"};
  for (int i = 0; i < 100; ++i) {
    std::string text;
    const int n = 1 + static_cast<int>(rng.uniform_index(12));
    for (int w = 0; w < n; ++w) {
      std::string word = rng.uniform() < 0.8 ? tok.word(6 + static_cast<int>(rng.uniform_index(tok.size() - 6)))
                                             : extras[rng.uniform_index(extras.size())];
      if (rng.uniform() < 0.3) word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
      if (w > 0 && rng.uniform() < 0.8) text += rng.uniform() < 0.9 ? " " : "  ";
      text += word;
    }
    const PromptBundle p = build_extraction_prompt(text);
    ASSERT_EQ(detokenize(p, p.text_span), text) << text;
  }
}

TEST(Prompt, Errors) {
  EXPECT_THROW(build_extraction_prompt(""), Error);
  EXPECT_THROW(build_t2i_prompt(""), Error);
  for (const char* bad : {" Lift the box.", "   "}) {
    try {
      build_extraction_prompt(bad);
      FAIL() << "expected TokenizationMismatch for '" << bad << "'";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kTokenizationMismatch);
    }
  }
}

TEST(Prompt, TextToImageTemplate) {
  const std::string a = build_t2i_prompt("Push the small box off the platform.");
  EXPECT_EQ(a.rfind("Push the small box off the platform.. Please first divide", 0), 0u);
  EXPECT_NE(a.find("synthesize one image for each of the three stages"), std::string::npos);
  const std::string b = build_t2i_prompt("Lift it.");
  const std::string suffix = a.substr(std::string("Push the small box off the platform.").size());
  EXPECT_EQ(b, "Lift it." + suffix);
}

ImageTriple test_images(int size, float base) {
  ImageTriple out;
  for (int i = 0; i < 3; ++i) {
    out[i] = Image(size, size);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x)
        for (int c = 0; c < 3; ++c) out[i].at(y, x, c) = std::fmod(base + 0.01f * (x + 3 * y + 7 * c + 11 * i), 1.0f);
  }
  return out;
}

ToyEncoderConfig small_config() {
  ToyEncoderConfig cfg;
  cfg.depth = 12;
  cfg.width = 32;
  cfg.image_size = 32;
  return cfg;
}

TEST(ToyEncoder, DefaultResolutionGives588VisualTokens) {
  const ToyEncoder enc(ToyEncoderConfig{}, 1);
  EXPECT_EQ(enc.depth(), 16);
  EXPECT_EQ(enc.width(), 256);
  const PromptBundle p = build_extraction_prompt("Lift the box.");
  const std::vector<int> layers = {3, 12};
  const LayeredEmbeddings emb = enc.encode(test_images(224, 0.2f), p, layers);
  EXPECT_EQ(emb.visual_span, (Span{0, 588}));
  EXPECT_EQ(emb.tokens(), 588 + static_cast<int>(p.tokens.size()));
  EXPECT_EQ(emb.states.size(), 2u);
  EXPECT_EQ(emb.blocks_evaluated, 12);
  const Priors pr = extract_priors(emb, ExtractionConfig{});
  EXPECT_EQ(pr.visual.rows(), 588);
  EXPECT_EQ(pr.text.rows(), 4);
  EXPECT_EQ(pr.text.cols(), 256);
}

TEST(ToyEncoder, OnlyRequestedLayersAreMaterialized) {
  const ToyEncoder enc(small_config(), 2);
  const PromptBundle p = build_extraction_prompt("Pull the lamp toward you.");
  const std::vector<int> layers = {5, 3};
  const auto emb = enc.encode(test_images(32, 0.1f), p, layers);
  EXPECT_EQ(emb.states.size(), 2u);
  EXPECT_TRUE(emb.states.count(3) && emb.states.count(5));
  EXPECT_EQ(emb.blocks_evaluated, 5);
  EXPECT_THROW(emb.layer(12), Error);
}

TEST(ToyEncoder, DeterministicAndUntouchedByEncoding) {
  const ToyEncoder a(small_config(), 3), b(small_config(), 3);
  const std::string before = a.checksum();
  EXPECT_EQ(before, b.checksum());
  const PromptBundle p = build_extraction_prompt("Rotate the table to the left.");
  const std::vector<int> layers = {3, 12};
  const auto ea = a.encode(test_images(32, 0.3f), p, layers);
  const auto eb = b.encode(test_images(32, 0.3f), p, layers);
  const auto ea2 = a.encode(test_images(32, 0.3f), p, layers);
  for (const int l : layers) {
    EXPECT_TRUE(ea.layer(l) == eb.layer(l));
    EXPECT_TRUE(ea.layer(l) == ea2.layer(l));
  }
  EXPECT_EQ(a.checksum(), before);
  EXPECT_NE(ToyEncoder(small_config(), 4).checksum(), before);
}

TEST(ToyEncoder, AnnotationChangesTextSpanOnly) {
  const ToyEncoder enc(small_config(), 5);
  const std::vector<int> layers = {3, 12};
  const auto a = enc.encode(test_images(32, 0.3f), build_extraction_prompt("Lift the box."), layers);
  const auto b = enc.encode(test_images(32, 0.3f), build_extraction_prompt("Kick the box."), layers);
  EXPECT_EQ(a.visual_span, b.visual_span);
  const Priors pa = extract_priors(a, {}), pb = extract_priors(b, {});
  EXPECT_EQ(pa.text.rows(), pb.text.rows());
  EXPECT_GT((pa.text - pb.text).cwiseAbs().maxCoeff(), 1e-3f);
}

TEST(ToyEncoder, JointAttentionMixesModalities) {
  ToyEncoderConfig joint = small_config(), split = small_config();
  split.joint_attention = false;
  const PromptBundle p = build_extraction_prompt("Lift the box.");
  const std::vector<int> layers = {12};
  for (const bool is_joint : {true, false}) {
    const ToyEncoder enc(is_joint ? joint : split, 6);
    const Priors a = extract_priors(enc.encode(test_images(32, 0.1f), p, layers), {12, 12, false});
    const Priors b = extract_priors(enc.encode(test_images(32, 0.6f), p, layers), {12, 12, false});
    const float diff = (a.text - b.text).cwiseAbs().maxCoeff();
    if (is_joint) {
      EXPECT_GT(diff, 1e-4f);
    } else {
      EXPECT_EQ(diff, 0.0f);
    }
  }
}

TEST(ToyEncoder, ConfigErrors) {
  ToyEncoderConfig cfg = small_config();
  cfg.depth = 8;
  try {
    ToyEncoder enc(cfg, 1);
    FAIL() << "expected DepthTooSmall";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDepthTooSmall);
  }
  try {
    ExtractionConfig{}.validate(8);
    FAIL() << "expected LayerMissing";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLayerMissing);
  }
  const ToyEncoder enc(small_config(), 1);
  const PromptBundle p = build_extraction_prompt("Lift the box.");
  const std::vector<int> too_deep = {13};
  try {
    enc.encode(test_images(32, 0.1f), p, too_deep);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLayerMissing);
  }
  ImageTriple wrong = test_images(32, 0.1f);
  wrong[1] = Image(32, 48);
  try {
    enc.encode(wrong, p, std::vector<int>{3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadImageShape);
  }
}

TEST(ExtractPriors, LayerVariants) {
  const ToyEncoder enc(small_config(), 7);
  const ImageTriple imgs = test_images(64, 0.4f);  // resized to 32 by the pipeline
  const Priors base = extract_priors(enc, imgs, "Lift the box.", {});
  EXPECT_EQ(base.visual.rows(), 3 * 4);
  const Priors same = extract_priors(enc, imgs, "Lift the box.", {12, 12, false});
  EXPECT_TRUE(same.text == base.text);
  EXPECT_FALSE(same.visual == base.visual);
  const Priors text_only = extract_priors(enc, imgs, "Lift the box.", {3, 12, true});
  EXPECT_EQ(text_only.visual.rows(), 1);
  EXPECT_EQ(text_only.visual.cwiseAbs().maxCoeff(), 0.0f);
  EXPECT_TRUE(text_only.text == base.text);
}

TEST(ToyEncoder, WarmupHalvesAlignmentLoss) {
  ToyEncoderConfig cfg = small_config();
  cfg.image_size = 64;
  ToyEncoder enc(cfg, 8);
  const auto pairs = make_warmup_pairs(200, 8, 64);
  ASSERT_EQ(pairs.size(), 200u);
  const std::string before = enc.checksum();
  const WarmupReport r = enc.warm_up(pairs, WarmupConfig{});
  EXPECT_LE(r.final_loss, 0.5 * r.initial_loss) << r.initial_loss << " -> " << r.final_loss;
  EXPECT_NE(enc.checksum(), before);
  enc.freeze();
  EXPECT_THROW(enc.warm_up(pairs, WarmupConfig{}), Error);

  io::Archive ar;
  enc.save(ar, "encoder.");
  const auto loaded = ToyEncoder::load(io::Archive::parse(ar.serialize()), "encoder.");
  EXPECT_EQ(loaded->checksum(), enc.checksum());
  EXPECT_TRUE(loaded->frozen());
}

TEST(Backend, RemoteEncodingMatchesLocal) {
  const ToyEncoder enc(small_config(), 9);
  EncoderServer server(enc);
  std::thread thread([&] { server.serve(); });
  {
    const RemoteEncoder remote("127.0.0.1", server.port(), std::chrono::seconds(30));
    EXPECT_EQ(remote.depth(), 12);
    EXPECT_EQ(remote.checksum(), enc.checksum());
    const ImageTriple imgs = [] {
      ImageTriple t = test_images(32, 0.25f);
      for (auto& i : t) i = quantize8(i);
      return t;
    }();
    const PromptBundle p = build_extraction_prompt("Push the lamp off the platform.");
    const std::vector<int> layers = {3, 12};
    const auto local = enc.encode(imgs, p, layers);
    const auto over_wire = remote.encode(imgs, p, layers);
    EXPECT_EQ(over_wire.text_span, local.text_span);
    EXPECT_EQ(over_wire.visual_span, local.visual_span);
    EXPECT_EQ(over_wire.blocks_evaluated, 12);
    for (const int l : layers) EXPECT_TRUE(over_wire.layer(l) == local.layer(l));
    try {
      remote.encode(imgs, p, std::vector<int>{40});
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kLayerMissing);
    }
  }
  server.stop();
  thread.join();
}

TEST(Backend, UnreachableServer) {
  int port = 0;
  {
    const ToyEncoder enc(small_config(), 1);
    EncoderServer probe(enc);
    port = probe.port();
  }
  try {
    RemoteEncoder("127.0.0.1", port, std::chrono::seconds(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBackendUnavailable);
  }
}

}  // namespace
}  // namespace vihoi::priors
