#include "jket/gradcheck.hpp"

#include <cmath>

#include "jket/kge.hpp"
#include "jket/lm.hpp"
#include "jket/ops.hpp"
#include "jket/rng.hpp"
#include "jket/typer.hpp"

namespace jket {

double gradcheck_max_rel_error(std::vector<Tensor<double>> params,
                               const std::function<Tensor<double>()>& forward, double h,
                               double tolerance) {
  for (Tensor<double>& p : params) {
    p.set_requires_grad(true);
    p.zero_grad();
  }
  std::vector<std::vector<double>> analytic;
  {
    Tape<double> tape;
    Tensor<double> loss = forward();
    tape.backward(loss);
    for (Tensor<double>& p : params) {
      analytic.emplace_back(p.grad().begin(), p.grad().end());
    }
  }

  auto numeric_at = [&](Tensor<double>& p, std::size_t i, double step) {
    double* v = p.values().data() + i;
    const double saved = *v;
    *v = saved + step;
    const double up = forward().item();
    *v = saved - step;
    const double down = forward().item();
    *v = saved;
    return (up - down) / (2.0 * step);
  };

  double worst = 0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor<double>& p = params[pi];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double a = analytic[pi][i];
      double n = numeric_at(p, i, h);
      double err = std::fabs(a - n) / std::max({std::fabs(a), std::fabs(n), 1e-6});
      if (err > tolerance) {
        n = numeric_at(p, i, h / 100.0);
        err = std::min(err, std::fabs(a - n) / std::max({std::fabs(a), std::fabs(n), 1e-6}));
      }
      worst = std::max(worst, err);
    }
  }
  return worst;
}

namespace {

using T = Tensor<double>;

T rand_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  T t = T::zeros(std::move(shape));
  for (double& v : t.values()) v = rng.next_uniform(lo, hi);
  return t;
}

// Weighted reduction keeps the check sensitive to per-element errors that a
// plain sum would cancel. Takes the rng by value: forward closures call this
// repeatedly and must see identical weights on every evaluation.
T weighted_sum(const T& out, Rng rng) {
  if (out.size() == 1 && out.rank() == 0) return affine(out, rng.next_uniform(0.5, 1.5), 0.0);
  T weights = rand_tensor(out.shape(), rng, 0.25, 1.75);
  return sum_all(mul(out, weights));
}

struct Case {
  std::string name;
  // Returns (params, forward); a fresh random instance per call.
  std::function<std::pair<std::vector<T>, std::function<T()>>(Rng&)> make;
};

int dim_of(Rng& rng) { return 1 + static_cast<int>(rng.next_below(4)); }

std::vector<Case> op_cases() {
  std::vector<Case> cases;
  auto add_case = [&](std::string name, auto fn) { cases.push_back({std::move(name), fn}); };

  add_case("matmul", [](Rng& rng) {
    const int m = dim_of(rng), k = dim_of(rng), n = dim_of(rng);
    T a = rand_tensor({m, k}, rng), b = rand_tensor({k, n}, rng);
    Rng wr(rng.next_u64());
    return std::pair{std::vector<T>{a, b}, std::function<T()>([=]() mutable { return weighted_sum(matmul(a, b), wr); })};
  });
  add_case("matmul_nt", [](Rng& rng) {
    const int m = dim_of(rng), k = dim_of(rng), n = dim_of(rng);
    T a = rand_tensor({m, k}, rng), b = rand_tensor({n, k}, rng);
    Rng wr(rng.next_u64());
    return std::pair{std::vector<T>{a, b}, std::function<T()>([=]() mutable { return weighted_sum(matmul_nt(a, b), wr); })};
  });
  add_case("add", [](Rng& rng) {
    const int m = dim_of(rng), n = dim_of(rng);
    T a = rand_tensor({m, n}, rng), b = rand_tensor({m, n}, rng);
    Rng wr(rng.next_u64());
    return std::pair{std::vector<T>{a, b}, std::function<T()>([=]() mutable { return weighted_sum(add(a, b), wr); })};
  });
  add_case("add_bias_row", [](Rng& rng) {
    const int m = dim_of(rng), n = dim_of(rng);
    T a = rand_tensor({m, n}, rng), b = rand_tensor({n}, rng);
    Rng wr(rng.next_u64());
    return std::pair{std::vector<T>{a, b}, std::function<T()>([=]() mutable { return weighted_sum(add(a, b), wr); })};
  });
  add_case("sub", [](Rng& rng) {
    const int n = 1 + dim_of(rng);
    T a = rand_tensor({n}, rng), b = rand_tensor({n}, rng);
    Rng wr(rng.next_u64());
    return std::pair{std::vector<T>{a, b}, std::function<T()>([=]() mutable { return weighted_sum(sub(a, b), wr); })};
  });
  add_case("mul", [](Rng& rng) {
    const int m = dim_of(rng), n = dim_of(rng);
    T a = rand_tensor({m, n}, rng), b = rand_tensor({m, n}, rng);
    Rng wr(rng.next_u64());
    return std::pair{std::vector<T>{a, b}, std::function<T()>([=]() mutable { return weighted_sum(mul(a, b), wr); })};
  });
  add_case("affine", [](Rng& rng) {
    const int n = dim_of(rng) + 1;
    T a = rand_tensor({n}, rng);
    const double mc = rng.next_uniform(-2, 2), ac = rng.next_uniform(-1, 1);
    Rng wr(rng.next_u64());
    return std::pair{std::vector<T>{a}, std::function<T()>([=]() mutable { return weighted_sum(affine(a, mc, ac), wr); })};
  });
  add_case("clamp", [](Rng& rng) {
    const int n = dim_of(rng) + 2;
    T a = rand_tensor({n}, rng, -2.0, 2.0);
    Rng wr(rng.next_u64());
    // bounds kept clear of the sampled values
    return std::pair{std::vector<T>{a}, std::function<T()>([=]() mutable { return weighted_sum(clamp(a, -2.5, 2.5), wr); })};
  });
  add_case("concat_axis0", [](Rng& rng) {
    const int n = dim_of(rng), m1 = dim_of(rng), m2 = dim_of(rng);
    T a = rand_tensor({m1, n}, rng), b = rand_tensor({m2, n}, rng);
    Rng wr(rng.next_u64());
    return std::pair{std::vector<T>{a, b},
                     std::function<T()>([=]() mutable { return weighted_sum(concat<double>({a, b}, 0), wr); })};
  });
  add_case("concat_axis1", [](Rng& rng) {
    const int m = dim_of(rng), n1 = dim_of(rng), n2 = dim_of(rng);
    T a = rand_tensor({m, n1}, rng), b = rand_tensor({m, n2}, rng);
    Rng wr(rng.next_u64());
    return std::pair{std::vector<T>{a, b},
                     std::function<T()>([=]() mutable { return weighted_sum(concat<double>({a, b}, 1), wr); })};
  });
  add_case("slice_rows", [](Rng& rng) {
    const int m = dim_of(rng) + 1, n = dim_of(rng);
    T a = rand_tensor({m, n}, rng);
    const int start = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(m)));
    const int len = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(m - start)));
    Rng wr(rng.next_u64());
    return std::pair{std::vector<T>{a},
                     std::function<T()>([=]() mutable { return weighted_sum(slice(a, 0, start, len), wr); })};
  });
  add_case("slice_cols", [](Rng& rng) {
    const int m = dim_of(rng), n = dim_of(rng) + 1;
    T a = rand_tensor({m, n}, rng);
    const int start = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
    const int len = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - start)));
    Rng wr(rng.next_u64());
    return std::pair{std::vector<T>{a},
                     std::function<T()>([=]() mutable { return weighted_sum(slice(a, 1, start, len), wr); })};
  });
  add_case("stack_rows", [](Rng& rng) {
    const int k = dim_of(rng) + 1;
    T a = rand_tensor({k}, rng), b = rand_tensor({k}, rng), c = rand_tensor({k}, rng);
    Rng wr(rng.next_u64());
    return std::pair{std::vector<T>{a, b, c},
                     std::function<T()>([=]() mutable { return weighted_sum(stack_rows<double>({a, b, c}), wr); })};
  });
  add_case("reshape", [](Rng& rng) {
    const int m = dim_of(rng), n = dim_of(rng);
    T a = rand_tensor({m, n}, rng);
    Rng wr(rng.next_u64());
    return std::pair{std::vector<T>{a},
                     std::function<T()>([=]() mutable { return weighted_sum(reshape(a, {m * n}), wr); })};
  });
  add_case("embedding_lookup", [](Rng& rng) {
    const int v = 4 + dim_of(rng), d = dim_of(rng);
    T table = rand_tensor({v, d}, rng);
    std::vector<int> idx;
    const int n = 2 + dim_of(rng);
    for (int i = 0; i < n; ++i) idx.push_back(static_cast<int>(rng.next_below(static_cast<std::uint64_t>(v))));
    idx.push_back(idx[0]);  // force a repeated row: scatter-add must accumulate
    Rng wr(rng.next_u64());
    return std::pair{std::vector<T>{table},
                     std::function<T()>([=]() mutable { return weighted_sum(embedding_lookup(table, idx), wr); })};
  });
  add_case("sigmoid", [](Rng& rng) {
    T a = rand_tensor({dim_of(rng) + 1}, rng, -3, 3);
    Rng wr(rng.next_u64());
    return std::pair{std::vector<T>{a}, std::function<T()>([=]() mutable { return weighted_sum(sigmoid(a), wr); })};
  });
  add_case("tanh", [](Rng& rng) {
    T a = rand_tensor({dim_of(rng) + 1}, rng, -3, 3);
    Rng wr(rng.next_u64());
    return std::pair{std::vector<T>{a}, std::function<T()>([=]() mutable { return weighted_sum(tanh_op(a), wr); })};
  });
  add_case("relu", [](Rng& rng) {
    T a = rand_tensor({dim_of(rng) + 3}, rng, -2, 2);
    Rng wr(rng.next_u64());
    return std::pair{std::vector<T>{a}, std::function<T()>([=]() mutable { return weighted_sum(relu(a), wr); })};
  });
  add_case("log", [](Rng& rng) {
    T a = rand_tensor({dim_of(rng) + 1}, rng, 0.1, 2.0);
    Rng wr(rng.next_u64());
    return std::pair{std::vector<T>{a}, std::function<T()>([=]() mutable { return weighted_sum(log_op(a), wr); })};
  });
  add_case("softmax_vec", [](Rng& rng) {
    T a = rand_tensor({dim_of(rng) + 1}, rng, -2, 2);
    Rng wr(rng.next_u64());
    return std::pair{std::vector<T>{a}, std::function<T()>([=]() mutable { return weighted_sum(softmax(a), wr); })};
  });
  add_case("softmax_rows", [](Rng& rng) {
    T a = rand_tensor({dim_of(rng), dim_of(rng) + 1}, rng, -2, 2);
    Rng wr(rng.next_u64());
    return std::pair{std::vector<T>{a}, std::function<T()>([=]() mutable { return weighted_sum(softmax(a), wr); })};
  });
  add_case("sum", [](Rng& rng) {
    T a = rand_tensor({dim_of(rng), dim_of(rng)}, rng);
    Rng wr(rng.next_u64());
    return std::pair{std::vector<T>{a}, std::function<T()>([=]() mutable { return weighted_sum(sum_all(a), wr); })};
  });
  add_case("mean", [](Rng& rng) {
    T a = rand_tensor({dim_of(rng), dim_of(rng)}, rng);
    Rng wr(rng.next_u64());
    return std::pair{std::vector<T>{a}, std::function<T()>([=]() mutable { return weighted_sum(mean_all(a), wr); })};
  });
  add_case("sum_axis0", [](Rng& rng) {
    T a = rand_tensor({dim_of(rng), dim_of(rng)}, rng);
    Rng wr(rng.next_u64());
    return std::pair{std::vector<T>{a}, std::function<T()>([=]() mutable { return weighted_sum(sum_axis(a, 0), wr); })};
  });
  add_case("sum_axis1", [](Rng& rng) {
    T a = rand_tensor({dim_of(rng), dim_of(rng)}, rng);
    Rng wr(rng.next_u64());
    return std::pair{std::vector<T>{a}, std::function<T()>([=]() mutable { return weighted_sum(sum_axis(a, 1), wr); })};
  });
  add_case("mean_axis0", [](Rng& rng) {
    T a = rand_tensor({dim_of(rng) + 1, dim_of(rng)}, rng);
    Rng wr(rng.next_u64());
    return std::pair{std::vector<T>{a}, std::function<T()>([=]() mutable { return weighted_sum(mean_axis0(a), wr); })};
  });
  add_case("dot", [](Rng& rng) {
    const int n = dim_of(rng) + 1;
    T a = rand_tensor({n}, rng), b = rand_tensor({n}, rng);
    Rng wr(rng.next_u64());
    return std::pair{std::vector<T>{a, b}, std::function<T()>([=]() mutable { return weighted_sum(dot(a, b), wr); })};
  });
  add_case("rowwise_dot", [](Rng& rng) {
    const int m = dim_of(rng), n = dim_of(rng) + 1;
    T a = rand_tensor({m, n}, rng), b = rand_tensor({m, n}, rng);
    Rng wr(rng.next_u64());
    return std::pair{std::vector<T>{a, b}, std::function<T()>([=]() mutable { return weighted_sum(rowwise_dot(a, b), wr); })};
  });
  add_case("cross_entropy", [](Rng& rng) {
    const int n = 2 + dim_of(rng), v = 2 + dim_of(rng);
    T logits = rand_tensor({n, v}, rng, -2, 2);
    std::vector<int> targets;
    std::vector<double> mask;
    for (int i = 0; i < n; ++i) {
      targets.push_back(static_cast<int>(rng.next_below(static_cast<std::uint64_t>(v))));
      mask.push_back(rng.next_below(4) == 0 ? 0.0 : 1.0);
    }
    mask[0] = 1.0;
    return std::pair{std::vector<T>{logits}, std::function<T()>([=]() {
                       return affine(cross_entropy_logits(logits, targets, mask), 0.73, 0.0);
                     })};
  });
  add_case("batch_norm", [](Rng& rng) {
    const int b = 4 + dim_of(rng), f = dim_of(rng) + 1;
    T x = rand_tensor({b, f}, rng), gamma = rand_tensor({f}, rng, 0.5, 1.5), beta = rand_tensor({f}, rng, -0.5, 0.5);
    T rm = T::zeros({f}), rv = T::full({f}, 1.0);
    Rng wr(rng.next_u64());
    return std::pair{std::vector<T>{x, gamma, beta}, std::function<T()>([=]() mutable {
                       T m = rm, v = rv;
                       return weighted_sum(batch_norm(x, gamma, beta, m, v, true, 0.9, 1e-5), wr);
                     })};
  });
  return cases;
}

// Composed-graph templates cycled over random shapes; exercises gradient
// accumulation through shared nodes and longer chains.
std::pair<std::vector<T>, std::function<T()>> make_composed(int variant, Rng& rng) {
  switch (variant % 6) {
    case 0: {  // sigmoid(AB + b) weighted
      const int m = dim_of(rng), k = dim_of(rng), n = dim_of(rng);
      T a = rand_tensor({m, k}, rng), b = rand_tensor({k, n}, rng), bias = rand_tensor({n}, rng);
      Rng wr(rng.next_u64());
      return {std::vector<T>{a, b, bias},
              std::function<T()>([=]() mutable { return weighted_sum(sigmoid(add(matmul(a, b), bias)), wr); })};
    }
    case 1: {  // dot(softmax(v), tanh(w))
      const int n = dim_of(rng) + 1;
      T v = rand_tensor({n}, rng, -2, 2), w = rand_tensor({n}, rng, -2, 2);
      return {std::vector<T>{v, w}, std::function<T()>([=]() { return dot(softmax(v), tanh_op(w)); })};
    }
    case 2: {  // value reused on two paths: sum(y*y) + dot(y, c)
      const int n = dim_of(rng) + 1;
      T y = rand_tensor({n}, rng);
      T c = rand_tensor({n}, rng);
      c.set_requires_grad(false);
      return {std::vector<T>{y}, std::function<T()>([=]() { return add(sum_all(mul(y, y)), dot(y, c)); })};
    }
    case 3: {  // attention-like softmax-weighted row mix
      const int t = dim_of(rng) + 1, k = dim_of(rng) + 1;
      T ctx = rand_tensor({t, k}, rng), w = rand_tensor({k, 1}, rng);
      Rng wr(rng.next_u64());
      return {std::vector<T>{ctx, w}, std::function<T()>([=]() mutable {
                T weights = softmax(reshape(matmul(tanh_op(ctx), w), {t}));
                return weighted_sum(matmul(reshape(weights, {1, t}), ctx), wr);
              })};
    }
    case 4: {  // clamped-log BCE shape
      const int n = dim_of(rng) + 1;
      T v = rand_tensor({n}, rng, -2, 2);
      T wpos = rand_tensor({n}, rng, 0, 1), wneg = rand_tensor({n}, rng, 0, 1);
      wpos.set_requires_grad(false);
      wneg.set_requires_grad(false);
      return {std::vector<T>{v}, std::function<T()>([=]() {
                T p = clamp(sigmoid(v), 1e-7, 1.0 - 1e-7);
                T term = add(mul(log_op(p), wpos), mul(log_op(affine(p, -1.0, 1.0)), wneg));
                return affine(sum_all(term), -1.0 / n, 0.0);
              })};
    }
    default: {  // relu over concatenated blocks
      const int m = dim_of(rng), k1 = dim_of(rng), k2 = dim_of(rng);
      T a = rand_tensor({m, k1}, rng), b = rand_tensor({m, k2}, rng), w = rand_tensor({k1 + k2, dim_of(rng)}, rng);
      Rng wr(rng.next_u64());
      return {std::vector<T>{a, b, w}, std::function<T()>([=]() mutable {
                return weighted_sum(relu(matmul(concat<double>({a, b}, 1), w)), wr);
              })};
    }
  }
}

// --- tiny double-precision model instances ---------------------------------

// Zero-initialized biases can park ReLU pre-activations exactly on the kink
// (dead layer below => pre-activation is the bias itself), where the loss is
// not differentiable and finite differences measure the slope average. Random
// parameter offsets remove that structure without weakening the check.
void perturb_params(ModelGraph<double>& graph, Rng& rng) {
  for (Tensor<double>& p : graph.unique_trainable()) {
    for (double& v : p.values()) v += rng.next_uniform(-0.1, 0.1);
  }
}

Vocabulary toy_vocab(const std::vector<std::string>& words) {
  VocabCounter counter;
  for (const std::string& w : words) counter.add(w);
  counter.add(kSepToken);
  return counter.build(words.size() + 1);
}

std::pair<std::vector<T>, std::function<T()>> make_kge_loss(Rng& rng) {
  static const std::vector<std::string> words = {"e0", "e1", "e2", "e3", "r0", "r1"};
  auto vocab = std::make_shared<Vocabulary>(toy_vocab(words));
  auto table = std::make_shared<EmbeddingTable<double>>(random_embeddings<double>(*vocab, 3, rng.next_u64()));

  KgeConfig cfg;
  cfg.embed_dim = 3;
  cfg.hidden = 2;
  cfg.head_hidden = {3, 3};
  cfg.positive_weight = 1.0 + rng.next_double();
  auto graph = std::make_shared<ModelGraph<double>>();
  ParamResolver<double> resolver(*graph);
  Rng init(rng.next_u64());
  auto model = std::make_shared<KgeModel<double>>(KgeModel<double>::build(resolver, "kge", cfg, *vocab, *table, init));
  perturb_params(*graph, rng);

  auto batch = std::make_shared<std::vector<Triple>>();
  for (int i = 0; i < 4; ++i) {
    Triple t;
    t.head = "e" + std::to_string(rng.next_below(4));
    t.relation = "r" + std::to_string(rng.next_below(2));
    t.tail = "e" + std::to_string(rng.next_below(4));
    t.label = rng.next_bool() ? 1 : 0;
    batch->push_back(t);
  }
  std::vector<T> params = graph->unique_trainable();
  return {params, std::function<T()>([vocab, table, model, batch, graph]() { return kge_loss(*model, *batch); })};
}

std::pair<std::vector<T>, std::function<T()>> make_typer_loss(Rng& rng) {
  static const std::vector<std::string> words = {"w0", "w1", "w2", "w3", "w4", "w5", "w6", "w7"};
  auto vocab = std::make_shared<Vocabulary>(toy_vocab(words));
  auto table = std::make_shared<EmbeddingTable<double>>(random_embeddings<double>(*vocab, 3, rng.next_u64()));
  auto types = std::make_shared<TypeInventory>(TypeInventory::from_names({"/a", "/b", "/c"}));

  TyperConfig cfg;
  cfg.embed_dim = 3;
  cfg.hidden = 2;
  cfg.attention = 3;
  cfg.head_hidden = {4, 4, 4};
  auto graph = std::make_shared<ModelGraph<double>>();
  ParamResolver<double> resolver(*graph);
  Rng init(rng.next_u64());
  auto model = std::make_shared<TyperModel<double>>(
      TyperModel<double>::build(resolver, "et", cfg, *vocab, *types, *table, init));
  perturb_params(*graph, rng);

  auto batch = std::make_shared<std::vector<TypingInstance>>();
  auto gold = std::make_shared<std::vector<std::vector<int>>>();
  for (int i = 0; i < 3; ++i) {
    TypingInstance inst;
    const int len = 3 + static_cast<int>(rng.next_below(3));
    for (int j = 0; j < len; ++j) inst.tokens.push_back(words[rng.next_below(words.size())]);
    inst.start = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(len)));
    inst.end = inst.start + 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(len - inst.start)));
    batch->push_back(inst);
    std::vector<int> signs(3, -1);
    signs[rng.next_below(3)] = 1;
    gold->push_back(signs);
  }
  std::vector<T> params = graph->unique_trainable();
  return {params, std::function<T()>([vocab, table, types, model, batch, gold, graph]() {
            return typing_hinge_loss(model->score_batch(*batch, /*training=*/true), *gold);
          })};
}

std::pair<std::vector<T>, std::function<T()>> make_lm_loss(Rng& rng) {
  static const std::vector<std::string> words = {"w0", "w1", "w2", "w3", "w4"};
  auto vocab = std::make_shared<Vocabulary>(toy_vocab(words));
  auto table = std::make_shared<EmbeddingTable<double>>(random_embeddings<double>(*vocab, 3, rng.next_u64()));

  LmConfig cfg;
  cfg.embed_dim = 3;
  cfg.hidden = 2;
  auto graph = std::make_shared<ModelGraph<double>>();
  ParamResolver<double> resolver(*graph);
  Rng init(rng.next_u64());
  auto model = std::make_shared<LmModel<double>>(LmModel<double>::build(resolver, "lm", cfg, *vocab, *table, init));
  perturb_params(*graph, rng);

  auto batch = std::make_shared<std::vector<SentenceExample>>();
  for (int i = 0; i < 3; ++i) {
    std::vector<std::string> sent;
    const int len = 1 + static_cast<int>(rng.next_below(3));
    for (int j = 0; j < len; ++j) sent.push_back(words[rng.next_below(words.size())]);
    batch->push_back(wrap_sentence(sent, *vocab));
  }
  std::vector<T> params = graph->unique_trainable();
  return {params, std::function<T()>([vocab, table, model, batch, graph]() { return lm_nll(*model, *batch); })};
}

}  // namespace

GradCheckSummary run_gradcheck_suite(std::uint64_t seed, int instances_per_case, int composed_instances) {
  GradCheckSummary summary;
  const double tol = 1e-4;

  for (const Case& c : op_cases()) {
    Rng rng = Rng::derived(seed, "gradcheck-" + c.name);
    GradCheckCase result;
    result.name = c.name;
    result.instances = instances_per_case;
    for (int i = 0; i < instances_per_case; ++i) {
      auto [params, forward] = c.make(rng);
      result.max_rel_err = std::max(result.max_rel_err, gradcheck_max_rel_error(params, forward));
    }
    result.pass = result.max_rel_err < tol;
    summary.add(result);
  }

  {
    Rng rng = Rng::derived(seed, "gradcheck-composed");
    GradCheckCase result;
    result.name = "composed_graphs";
    result.instances = composed_instances;
    for (int i = 0; i < composed_instances; ++i) {
      auto [params, forward] = make_composed(i, rng);
      result.max_rel_err = std::max(result.max_rel_err, gradcheck_max_rel_error(params, forward));
    }
    result.pass = result.max_rel_err < tol;
    summary.add(result);
  }

  struct ModelCase {
    const char* name;
    std::pair<std::vector<T>, std::function<T()>> (*make)(Rng&);
  };
  const ModelCase model_cases[] = {
      {"kge_loss", make_kge_loss},
      {"typing_hinge_loss", make_typer_loss},
      {"lm_nll", make_lm_loss},
  };
  for (const ModelCase& mc : model_cases) {
    Rng rng = Rng::derived(seed, std::string("gradcheck-") + mc.name);
    GradCheckCase result;
    result.name = mc.name;
    result.instances = instances_per_case;
    for (int i = 0; i < instances_per_case; ++i) {
      auto [params, forward] = mc.make(rng);
      result.max_rel_err = std::max(result.max_rel_err, gradcheck_max_rel_error(params, forward));
    }
    result.pass = result.max_rel_err < tol;
    summary.add(result);
  }

  summary.finish();
  return summary;
}

}  // namespace jket
