#include "vihoi/adapter/qformer.hpp"

#include <atomic>

#include "vihoi/common/error.hpp"

namespace vihoi::adapter {

namespace {

std::atomic<std::uint64_t> g_qformer_calls{0};

template <typename T>
void check_input(Tape<T>& t, Var e, int d_enc) {
  const auto& v = t.value(e);
  if (v.rows() < 1) fail(ErrorCode::kWidthMismatch, "adapter input has no rows");
  if (v.cols() != d_enc) {
    fail(ErrorCode::kWidthMismatch,
         "adapter expects width " + std::to_string(d_enc) + ", got " + std::to_string(v.cols()));
  }
}

}  // namespace

void QFormerConfig::validate() const {
  if (d_enc < 1 || d_model < 1) fail(ErrorCode::kInvalidArgument, "adapter widths must be positive");
  if (queries < 1) fail(ErrorCode::kInvalidArgument, "adapter needs at least one query");
  if (heads < 1 || d_model % heads != 0) fail(ErrorCode::kInvalidArgument, "adapter width must be divisible by heads");
}

std::uint64_t qformer_calls() { return g_qformer_calls.load(); }

template <typename T>
QFormer<T> QFormer<T>::make(ParameterStore<T>& store, const std::string& prefix, const QFormerConfig& config, Rng& rng) {
  config.validate();
  QFormer q;
  q.config = config;
  q.proj = nn::Linear<T>::make(store, prefix + "proj", config.d_enc, config.d_model, rng);
  q.proj_norm = nn::LayerNorm<T>::make(store, prefix + "proj_norm", config.d_model);
  q.queries = &store.add(prefix + "queries", nn::normal_init(rng, config.queries, config.d_model, 0.02).template cast<T>());
  for (int i = 0; i < 2; ++i) {
    const std::string name = prefix + "ca" + std::to_string(i + 1) + ".";
    Layer& layer = q.layers[static_cast<std::size_t>(i)];
    layer.attn = nn::MultiHeadAttention<T>::make(store, name + "attn", config.d_model, config.heads, rng);
    layer.norm = nn::LayerNorm<T>::make(store, name + "norm", config.d_model);
    if (config.feed_forward) {
      layer.ff1 = nn::Linear<T>::make(store, name + "ff1", config.d_model, 4 * config.d_model, rng);
      layer.ff2 = nn::Linear<T>::make(store, name + "ff2", 4 * config.d_model, config.d_model, rng);
      layer.ff_norm = nn::LayerNorm<T>::make(store, name + "ff_norm", config.d_model);
    }
  }
  return q;
}

template <typename T>
Var QFormer<T>::project_normalize(Tape<T>& t, Var e) const {
  check_input(t, e, config.d_enc);
  return proj_norm(t, proj(t, e));
}

template <typename T>
Var QFormer<T>::operator()(Tape<T>& t, Var e) const {
  ++g_qformer_calls;
  const Var z = project_normalize(t, e);
  Var h = t.parameter(*queries);
  for (const Layer& layer : layers) {
    h = layer.norm(t, nn::add(t, h, layer.attn(t, h, z)));
    if (config.feed_forward) h = layer.ff_norm(t, nn::add(t, h, layer.ff2(t, nn::gelu(t, layer.ff1(t, h)))));
  }
  return h;
}

template <typename T>
PoolAdapter<T> PoolAdapter<T>::make(ParameterStore<T>& store, const std::string& prefix, int d_enc, int d_model,
                                    Rng& rng) {
  if (d_enc < 1 || d_model < 1) fail(ErrorCode::kInvalidArgument, "adapter widths must be positive");
  PoolAdapter p;
  p.d_enc = d_enc;
  p.proj = nn::Linear<T>::make(store, prefix + "proj", d_enc, d_model, rng);
  return p;
}

template <typename T>
Var PoolAdapter<T>::operator()(Tape<T>& t, Var e) const {
  check_input(t, e, d_enc);
  return proj(t, nn::mean_rows(t, e));
}

template <typename T>
std::pair<QFormer<T>, QFormer<T>> make_adapters(ParameterStore<T>& store, const std::string& prefix, int d_enc,
                                                int d_model, int k_visual, int k_text, std::uint64_t seed, int heads,
                                                bool feed_forward) {
  Rng visual_rng(derive_seed(seed, "adapter.visual"));
  Rng text_rng(derive_seed(seed, "adapter.text"));
  QFormer<T> visual = QFormer<T>::make(store, prefix + "visual.", {d_enc, d_model, k_visual, heads, feed_forward}, visual_rng);
  QFormer<T> text = QFormer<T>::make(store, prefix + "text.", {d_enc, d_model, k_text, heads, feed_forward}, text_rng);
  return {visual, text};
}

template struct QFormer<float>;
template struct QFormer<double>;
template struct PoolAdapter<float>;
template struct PoolAdapter<double>;
template std::pair<QFormer<float>, QFormer<float>> make_adapters<float>(ParameterStore<float>&, const std::string&, int,
                                                                        int, int, int, std::uint64_t, int, bool);
template std::pair<QFormer<double>, QFormer<double>> make_adapters<double>(ParameterStore<double>&, const std::string&,
                                                                           int, int, int, int, std::uint64_t, int, bool);

}  // namespace vihoi::adapter
