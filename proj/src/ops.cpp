#include "jket/ops.hpp"

#include <cmath>
#include <cstring>
#include <utility>

namespace jket {

namespace {

template <typename S>
bool grad_wanted(const Tensor<S>& t) {
  return Tape<S>::active() != nullptr && t.requires_grad();
}

// Shared epilogue: finite check, then tape wiring when any input needs grad.
template <typename S, typename Fn>
void finish(const char* op, Tensor<S>& out, std::initializer_list<Tensor<S>> inputs, Fn&& backward_step) {
  for (S v : out.values()) {
    if (!std::isfinite(static_cast<double>(v))) throw NumericError(op, "non-finite output");
  }
  Tape<S>* tape = Tape<S>::active();
  if (!tape) return;
  bool any = false;
  for (const Tensor<S>& in : inputs) {
    if (in.requires_grad()) any = true;
  }
  if (!any) return;
  for (Tensor<S> in : inputs) {
    if (in.requires_grad()) in.ensure_grad();
  }
  out.set_requires_grad(true);
  out.ensure_grad();
  out.set_tape(tape);
  tape->record(std::forward<Fn>(backward_step));
}

template <typename S>
void require_rank(const char* op, const Tensor<S>& t, int rank) {
  if (t.rank() != rank) throw ShapeError(op, "expected rank " + std::to_string(rank) + ", got " + shape_str(t.shape()));
}

}  // namespace

template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) throw ShapeError("matmul", shape_str(a.shape()) + " x " + shape_str(b.shape()));
  Tensor<S> out = Tensor<S>::zeros({m, n});
  const S* pa = a.values().data();
  const S* pb = b.values().data();
  S* po = out.values().data();
  for (int i = 0; i < m; ++i) {
    for (int kk = 0; kk < k; ++kk) {
      const S av = pa[i * k + kk];
      if (av == S(0)) continue;
      const S* brow = pb + kk * n;
      S* orow = po + i * n;
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  finish("matmul", out, {a, b}, [a, b, out, m, k, n]() mutable {
    const S* g = out.grad().data();
    if (a.requires_grad()) {
      S* da = a.grad().data();
      const S* pb = b.values().data();
      for (int i = 0; i < m; ++i) {
        for (int kk = 0; kk < k; ++kk) {
          S s = 0;
          const S* grow = g + i * n;
          const S* brow = pb + kk * n;
          for (int j = 0; j < n; ++j) s += grow[j] * brow[j];
          da[i * k + kk] += s;
        }
      }
    }
    if (b.requires_grad()) {
      S* db = b.grad().data();
      const S* pa = a.values().data();
      for (int i = 0; i < m; ++i) {
        const S* grow = g + i * n;
        for (int kk = 0; kk < k; ++kk) {
          const S av = pa[i * k + kk];
          if (av == S(0)) continue;
          S* dbrow = db + kk * n;
          for (int j = 0; j < n; ++j) dbrow[j] += av * grow[j];
        }
      }
    }
  });
  return out;
}

template <typename S>
Tensor<S> matmul_nt(const Tensor<S>& a, const Tensor<S>& b) {
  require_rank("matmul_nt", a, 2);
  require_rank("matmul_nt", b, 2);
  const int m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k) throw ShapeError("matmul_nt", shape_str(a.shape()) + " x " + shape_str(b.shape()) + "^T");
  Tensor<S> out = Tensor<S>::zeros({m, n});
  const S* pa = a.values().data();
  const S* pb = b.values().data();
  S* po = out.values().data();
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      S s = 0;
      const S* arow = pa + i * k;
      const S* brow = pb + j * k;
      for (int kk = 0; kk < k; ++kk) s += arow[kk] * brow[kk];
      po[i * n + j] = s;
    }
  }
  finish("matmul_nt", out, {a, b}, [a, b, out, m, k, n]() mutable {
    const S* g = out.grad().data();
    if (a.requires_grad()) {
      S* da = a.grad().data();
      const S* pb = b.values().data();
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
          const S gv = g[i * n + j];
          if (gv == S(0)) continue;
          const S* brow = pb + j * k;
          S* darow = da + i * k;
          for (int kk = 0; kk < k; ++kk) darow[kk] += gv * brow[kk];
        }
      }
    }
    if (b.requires_grad()) {
      S* db = b.grad().data();
      const S* pa = a.values().data();
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
          const S gv = g[i * n + j];
          if (gv == S(0)) continue;
          const S* arow = pa + i * k;
          S* dbrow = db + j * k;
          for (int kk = 0; kk < k; ++kk) dbrow[kk] += gv * arow[kk];
        }
      }
    }
  });
  return out;
}

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  const bool bias_row = a.rank() == 2 && b.rank() == 1 && b.dim(0) == a.dim(1);
  if (!bias_row && a.shape() != b.shape()) {
    throw ShapeError("add", shape_str(a.shape()) + " + " + shape_str(b.shape()));
  }
  Tensor<S> out = Tensor<S>::zeros(a.shape());
  const S* pa = a.values().data();
  const S* pb = b.values().data();
  S* po = out.values().data();
  if (bias_row) {
    const int m = a.dim(0), n = a.dim(1);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) po[i * n + j] = pa[i * n + j] + pb[j];
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) po[i] = pa[i] + pb[i];
  }
  finish("add", out, {a, b}, [a, b, out, bias_row]() mutable {
    const S* g = out.grad().data();
    if (a.requires_grad()) {
      S* da = a.grad().data();
      for (std::size_t i = 0; i < out.size(); ++i) da[i] += g[i];
    }
    if (b.requires_grad()) {
      S* db = b.grad().data();
      if (bias_row) {
        const int m = a.dim(0), n = a.dim(1);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j) db[j] += g[i * n + j];
      } else {
        for (std::size_t i = 0; i < out.size(); ++i) db[i] += g[i];
      }
    }
  });
  return out;
}

template <typename S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.shape() != b.shape()) throw ShapeError("sub", shape_str(a.shape()) + " - " + shape_str(b.shape()));
  Tensor<S> out = Tensor<S>::zeros(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = a.values()[i] - b.values()[i];
  finish("sub", out, {a, b}, [a, b, out]() mutable {
    const S* g = out.grad().data();
    if (a.requires_grad()) {
      S* da = a.grad().data();
      for (std::size_t i = 0; i < out.size(); ++i) da[i] += g[i];
    }
    if (b.requires_grad()) {
      S* db = b.grad().data();
      for (std::size_t i = 0; i < out.size(); ++i) db[i] -= g[i];
    }
  });
  return out;
}

template <typename S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.shape() != b.shape()) throw ShapeError("mul", shape_str(a.shape()) + " * " + shape_str(b.shape()));
  Tensor<S> out = Tensor<S>::zeros(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = a.values()[i] * b.values()[i];
  finish("mul", out, {a, b}, [a, b, out]() mutable {
    const S* g = out.grad().data();
    if (a.requires_grad()) {
      S* da = a.grad().data();
      const S* pb = b.values().data();
      for (std::size_t i = 0; i < out.size(); ++i) da[i] += g[i] * pb[i];
    }
    if (b.requires_grad()) {
      S* db = b.grad().data();
      const S* pa = a.values().data();
      for (std::size_t i = 0; i < out.size(); ++i) db[i] += g[i] * pa[i];
    }
  });
  return out;
}

template <typename S>
Tensor<S> affine(const Tensor<S>& a, S mul_c, S add_c) {
  Tensor<S> out = Tensor<S>::zeros(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = a.values()[i] * mul_c + add_c;
  finish("affine", out, {a}, [a, out, mul_c]() mutable {
    if (!a.requires_grad()) return;
    const S* g = out.grad().data();
    S* da = a.grad().data();
    for (std::size_t i = 0; i < out.size(); ++i) da[i] += g[i] * mul_c;
  });
  return out;
}

template <typename S>
Tensor<S> clamp(const Tensor<S>& a, S lo, S hi) {
  if (!(lo < hi)) throw UsageError("clamp", "lo must be < hi");
  Tensor<S> out = Tensor<S>::zeros(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    S v = a.values()[i];
    out.values()[i] = v < lo ? lo : (v > hi ? hi : v);
  }
  finish("clamp", out, {a}, [a, out, lo, hi]() mutable {
    if (!a.requires_grad()) return;
    const S* g = out.grad().data();
    const S* pa = a.values().data();
    S* da = a.grad().data();
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (pa[i] > lo && pa[i] < hi) da[i] += g[i];
    }
  });
  return out;
}

template <typename S>
Tensor<S> concat(const std::vector<Tensor<S>>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat", "no parts");
  const int rank = parts[0].rank();
  if (rank != 1 && rank != 2) throw ShapeError("concat", "rank-1 or rank-2 only");
  if (rank == 1 && axis != 0) throw ShapeError("concat", "axis 0 required for rank-1");
  if (rank == 2 && axis != 0 && axis != 1) throw ShapeError("concat", "axis out of range");

  Shape out_shape = parts[0].shape();
  long total = 0;
  for (const Tensor<S>& p : parts) {
    if (p.rank() != rank) throw ShapeError("concat", "mixed ranks");
    const int other = rank == 2 ? (axis == 0 ? 1 : 0) : -1;
    if (other >= 0 && p.dim(other) != parts[0].dim(other)) {
      throw ShapeError("concat", "parts disagree on non-concat axis");
    }
    total += p.dim(axis);
  }
  out_shape[static_cast<std::size_t>(axis)] = static_cast<int>(total);
  Tensor<S> out = Tensor<S>::zeros(out_shape);

  if (rank == 1 || axis == 0) {
    // contiguous blocks
    std::size_t off = 0;
    for (const Tensor<S>& p : parts) {
      std::memcpy(out.values().data() + off, p.values().data(), p.size() * sizeof(S));
      off += p.size();
    }
  } else {
    const int m = out.dim(0), n = out.dim(1);
    int col = 0;
    for (const Tensor<S>& p : parts) {
      const int pn = p.dim(1);
      for (int i = 0; i < m; ++i) {
        std::memcpy(out.values().data() + i * n + col, p.values().data() + i * pn, pn * sizeof(S));
      }
      col += pn;
    }
  }

  Tensor<S> probe;  // any grad-requiring part; finish() keys recording off it
  for (const Tensor<S>& p : parts)
    if (grad_wanted(p) && !probe.defined()) probe = p;
  if (!probe.defined()) {
    finish("concat", out, {}, []() {});
    return out;
  }
  for (Tensor<S> p : parts)
    if (p.requires_grad()) p.ensure_grad();
  std::vector<Tensor<S>> held = parts;
  finish("concat", out, {probe}, [held, out, rank, axis]() mutable {
    const S* g = out.grad().data();
    if (rank == 1 || axis == 0) {
      std::size_t off = 0;
      for (Tensor<S>& p : held) {
        if (p.requires_grad()) {
          S* dp = p.grad().data();
          for (std::size_t i = 0; i < p.size(); ++i) dp[i] += g[off + i];
        }
        off += p.size();
      }
    } else {
      const int m = out.dim(0), n = out.dim(1);
      int col = 0;
      for (Tensor<S>& p : held) {
        const int pn = p.dim(1);
        if (p.requires_grad()) {
          S* dp = p.grad().data();
          for (int i = 0; i < m; ++i)
            for (int j = 0; j < pn; ++j) dp[i * pn + j] += g[i * n + col + j];
        }
        col += pn;
      }
    }
  });
  return out;
}

template <typename S>
Tensor<S> slice(const Tensor<S>& a, int axis, int start, int len) {
  if (a.rank() != 1 && a.rank() != 2) throw ShapeError("slice", "rank-1 or rank-2 only");
  if (axis < 0 || axis >= a.rank()) throw ShapeError("slice", "axis out of range");
  if (start < 0 || len <= 0 || start + len > a.dim(axis)) {
    throw ShapeError("slice", "range [" + std::to_string(start) + "," + std::to_string(start + len) + ") out of " + shape_str(a.shape()));
  }
  Shape out_shape = a.shape();
  out_shape[static_cast<std::size_t>(axis)] = len;
  Tensor<S> out = Tensor<S>::zeros(out_shape);
  if (a.rank() == 1 || axis == 0) {
    const int row = a.rank() == 2 ? a.dim(1) : 1;
    std::memcpy(out.values().data(), a.values().data() + static_cast<std::size_t>(start) * row,
                static_cast<std::size_t>(len) * row * sizeof(S));
  } else {
    const int m = a.dim(0), n = a.dim(1);
    for (int i = 0; i < m; ++i) {
      std::memcpy(out.values().data() + i * len, a.values().data() + i * n + start, len * sizeof(S));
    }
  }
  finish("slice", out, {a}, [a, out, axis, start, len]() mutable {
    if (!a.requires_grad()) return;
    const S* g = out.grad().data();
    S* da = a.grad().data();
    if (a.rank() == 1 || axis == 0) {
      const int row = a.rank() == 2 ? a.dim(1) : 1;
      for (std::size_t i = 0; i < out.size(); ++i) da[static_cast<std::size_t>(start) * row + i] += g[i];
    } else {
      const int m = a.dim(0), n = a.dim(1);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < len; ++j) da[i * n + start + j] += g[i * len + j];
    }
  });
  return out;
}

template <typename S>
Tensor<S> stack_rows(const std::vector<Tensor<S>>& rows) {
  if (rows.empty()) throw ShapeError("stack_rows", "no rows");
  const int k = rows[0].dim(0);
  for (const Tensor<S>& r : rows) {
    if (r.rank() != 1 || r.dim(0) != k) throw ShapeError("stack_rows", "rows must be rank-1 of equal length");
  }
  const int n = static_cast<int>(rows.size());
  Tensor<S> out = Tensor<S>::zeros({n, k});
  for (int i = 0; i < n; ++i) {
    std::memcpy(out.values().data() + static_cast<std::size_t>(i) * k, rows[static_cast<std::size_t>(i)].values().data(), k * sizeof(S));
  }
  Tensor<S> probe;
  for (const Tensor<S>& r : rows)
    if (grad_wanted(r) && !probe.defined()) probe = r;
  if (!probe.defined()) {
    finish("stack_rows", out, {}, []() {});
    return out;
  }
  for (Tensor<S> r : rows)
    if (r.requires_grad()) r.ensure_grad();
  std::vector<Tensor<S>> held = rows;
  finish("stack_rows", out, {probe}, [held, out, k]() mutable {
    const S* g = out.grad().data();
    for (std::size_t i = 0; i < held.size(); ++i) {
      if (!held[i].requires_grad()) continue;
      S* dr = held[i].grad().data();
      for (int j = 0; j < k; ++j) dr[j] += g[i * static_cast<std::size_t>(k) + j];
    }
  });
  return out;
}

template <typename S>
Tensor<S> reshape(const Tensor<S>& a, Shape shape) {
  if (shape_numel(shape) != a.size()) {
    throw ShapeError("reshape", shape_str(a.shape()) + " -> " + shape_str(shape));
  }
  Tensor<S> out = Tensor<S>::from_values(std::move(shape), std::vector<S>(a.values().begin(), a.values().end()));
  finish("reshape", out, {a}, [a, out]() mutable {
    if (!a.requires_grad()) return;
    const S* g = out.grad().data();
    S* da = a.grad().data();
    for (std::size_t i = 0; i < out.size(); ++i) da[i] += g[i];
  });
  return out;
}

template <typename S>
Tensor<S> embedding_lookup(const Tensor<S>& table, const std::vector<int>& indices) {
  require_rank("embedding_lookup", table, 2);
  if (indices.empty()) throw ShapeError("embedding_lookup", "empty index list");
  const int v = table.dim(0), d = table.dim(1);
  for (int idx : indices) {
    if (idx < 0 || idx >= v) throw ShapeError("embedding_lookup", "index " + std::to_string(idx) + " out of [0," + std::to_string(v) + ")");
  }
  const int n = static_cast<int>(indices.size());
  Tensor<S> out = Tensor<S>::zeros({n, d});
  for (int i = 0; i < n; ++i) {
    std::memcpy(out.values().data() + static_cast<std::size_t>(i) * d,
                table.values().data() + static_cast<std::size_t>(indices[static_cast<std::size_t>(i)]) * d, d * sizeof(S));
  }
  finish("embedding_lookup", out, {table}, [table, out, indices, d]() mutable {
    if (!table.requires_grad()) return;
    const S* g = out.grad().data();
    S* dt = table.grad().data();
    for (std::size_t i = 0; i < indices.size(); ++i) {
      S* drow = dt + static_cast<std::size_t>(indices[i]) * d;
      const S* grow = g + i * static_cast<std::size_t>(d);
      for (int j = 0; j < d; ++j) drow[j] += grow[j];
    }
  });
  return out;
}

template <typename S>
Tensor<S> sigmoid(const Tensor<S>& a) {
  Tensor<S> out = Tensor<S>::zeros(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const S x = a.values()[i];
    if (x >= S(0)) {
      out.values()[i] = S(1) / (S(1) + std::exp(-x));
    } else {
      const S e = std::exp(x);
      out.values()[i] = e / (S(1) + e);
    }
  }
  finish("sigmoid", out, {a}, [a, out]() mutable {
    if (!a.requires_grad()) return;
    const S* g = out.grad().data();
    const S* y = out.values().data();
    S* da = a.grad().data();
    for (std::size_t i = 0; i < out.size(); ++i) da[i] += g[i] * y[i] * (S(1) - y[i]);
  });
  return out;
}

template <typename S>
Tensor<S> tanh_op(const Tensor<S>& a) {
  Tensor<S> out = Tensor<S>::zeros(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = std::tanh(a.values()[i]);
  finish("tanh", out, {a}, [a, out]() mutable {
    if (!a.requires_grad()) return;
    const S* g = out.grad().data();
    const S* y = out.values().data();
    S* da = a.grad().data();
    for (std::size_t i = 0; i < out.size(); ++i) da[i] += g[i] * (S(1) - y[i] * y[i]);
  });
  return out;
}

template <typename S>
Tensor<S> relu(const Tensor<S>& a) {
  Tensor<S> out = Tensor<S>::zeros(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = a.values()[i] > S(0) ? a.values()[i] : S(0);
  finish("relu", out, {a}, [a, out]() mutable {
    if (!a.requires_grad()) return;
    const S* g = out.grad().data();
    const S* x = a.values().data();
    S* da = a.grad().data();
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (x[i] > S(0)) da[i] += g[i];
    }
  });
  return out;
}

template <typename S>
Tensor<S> log_op(const Tensor<S>& a) {
  Tensor<S> out = Tensor<S>::zeros(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (a.values()[i] <= S(0)) throw NumericError("log", "non-positive input");
    out.values()[i] = std::log(a.values()[i]);
  }
  finish("log", out, {a}, [a, out]() mutable {
    if (!a.requires_grad()) return;
    const S* g = out.grad().data();
    const S* x = a.values().data();
    S* da = a.grad().data();
    for (std::size_t i = 0; i < out.size(); ++i) da[i] += g[i] / x[i];
  });
  return out;
}

template <typename S>
Tensor<S> softmax(const Tensor<S>& a) {
  if (a.rank() != 1 && a.rank() != 2) throw ShapeError("softmax", "rank-1 or rank-2 only");
  const int rows = a.rank() == 2 ? a.dim(0) : 1;
  const int cols = a.rank() == 2 ? a.dim(1) : a.dim(0);
  Tensor<S> out = Tensor<S>::zeros(a.shape());
  for (int i = 0; i < rows; ++i) {
    const S* x = a.values().data() + static_cast<std::size_t>(i) * cols;
    S* y = out.values().data() + static_cast<std::size_t>(i) * cols;
    S mx = x[0];
    for (int j = 1; j < cols; ++j) mx = std::max(mx, x[j]);
    S z = 0;
    for (int j = 0; j < cols; ++j) {
      y[j] = std::exp(x[j] - mx);
      z += y[j];
    }
    for (int j = 0; j < cols; ++j) y[j] /= z;
  }
  finish("softmax", out, {a}, [a, out, rows, cols]() mutable {
    if (!a.requires_grad()) return;
    const S* g = out.grad().data();
    const S* y = out.values().data();
    S* da = a.grad().data();
    for (int i = 0; i < rows; ++i) {
      const S* gr = g + static_cast<std::size_t>(i) * cols;
      const S* yr = y + static_cast<std::size_t>(i) * cols;
      S* dr = da + static_cast<std::size_t>(i) * cols;
      S inner = 0;
      for (int j = 0; j < cols; ++j) inner += gr[j] * yr[j];
      for (int j = 0; j < cols; ++j) dr[j] += yr[j] * (gr[j] - inner);
    }
  });
  return out;
}

template <typename S>
Tensor<S> sum_all(const Tensor<S>& a) {
  S s = 0;
  for (S v : a.values()) s += v;
  Tensor<S> out = Tensor<S>::scalar(s);
  finish("sum", out, {a}, [a, out]() mutable {
    if (!a.requires_grad()) return;
    const S g = out.grad()[0];
    S* da = a.grad().data();
    for (std::size_t i = 0; i < a.size(); ++i) da[i] += g;
  });
  return out;
}

template <typename S>
Tensor<S> mean_all(const Tensor<S>& a) {
  S s = 0;
  for (S v : a.values()) s += v;
  const S inv = S(1) / static_cast<S>(a.size());
  Tensor<S> out = Tensor<S>::scalar(s * inv);
  finish("mean", out, {a}, [a, out, inv]() mutable {
    if (!a.requires_grad()) return;
    const S g = out.grad()[0] * inv;
    S* da = a.grad().data();
    for (std::size_t i = 0; i < a.size(); ++i) da[i] += g;
  });
  return out;
}

template <typename S>
Tensor<S> sum_axis(const Tensor<S>& a, int axis) {
  require_rank("sum_axis", a, 2);
  if (axis != 0 && axis != 1) throw ShapeError("sum_axis", "axis out of range");
  const int m = a.dim(0), n = a.dim(1);
  Tensor<S> out = Tensor<S>::zeros({axis == 0 ? n : m});
  const S* pa = a.values().data();
  S* po = out.values().data();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) po[axis == 0 ? j : i] += pa[i * n + j];
  finish("sum_axis", out, {a}, [a, out, m, n, axis]() mutable {
    if (!a.requires_grad()) return;
    const S* g = out.grad().data();
    S* da = a.grad().data();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) da[i * n + j] += g[axis == 0 ? j : i];
  });
  return out;
}

template <typename S>
Tensor<S> mean_axis0(const Tensor<S>& a) {
  require_rank("mean_axis0", a, 2);
  const int m = a.dim(0), n = a.dim(1);
  const S inv = S(1) / static_cast<S>(m);
  Tensor<S> out = Tensor<S>::zeros({n});
  const S* pa = a.values().data();
  S* po = out.values().data();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) po[j] += pa[i * n + j] * inv;
  finish("mean_axis0", out, {a}, [a, out, m, n, inv]() mutable {
    if (!a.requires_grad()) return;
    const S* g = out.grad().data();
    S* da = a.grad().data();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) da[i * n + j] += g[j] * inv;
  });
  return out;
}

template <typename S>
Tensor<S> dot(const Tensor<S>& a, const Tensor<S>& b) {
  require_rank("dot", a, 1);
  require_rank("dot", b, 1);
  if (a.dim(0) != b.dim(0)) throw ShapeError("dot", shape_str(a.shape()) + " . " + shape_str(b.shape()));
  S s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.values()[i] * b.values()[i];
  Tensor<S> out = Tensor<S>::scalar(s);
  finish("dot", out, {a, b}, [a, b, out]() mutable {
    const S g = out.grad()[0];
    if (a.requires_grad()) {
      S* da = a.grad().data();
      const S* pb = b.values().data();
      for (std::size_t i = 0; i < a.size(); ++i) da[i] += g * pb[i];
    }
    if (b.requires_grad()) {
      S* db = b.grad().data();
      const S* pa = a.values().data();
      for (std::size_t i = 0; i < a.size(); ++i) db[i] += g * pa[i];
    }
  });
  return out;
}

template <typename S>
Tensor<S> rowwise_dot(const Tensor<S>& a, const Tensor<S>& b) {
  require_rank("rowwise_dot", a, 2);
  require_rank("rowwise_dot", b, 2);
  if (a.shape() != b.shape()) throw ShapeError("rowwise_dot", shape_str(a.shape()) + " . " + shape_str(b.shape()));
  const int m = a.dim(0), k = a.dim(1);
  Tensor<S> out = Tensor<S>::zeros({m});
  for (int i = 0; i < m; ++i) {
    S s = 0;
    for (int j = 0; j < k; ++j) s += a.values()[i * k + j] * b.values()[i * k + j];
    out.values()[i] = s;
  }
  finish("rowwise_dot", out, {a, b}, [a, b, out, m, k]() mutable {
    const S* g = out.grad().data();
    if (a.requires_grad()) {
      S* da = a.grad().data();
      const S* pb = b.values().data();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < k; ++j) da[i * k + j] += g[i] * pb[i * k + j];
    }
    if (b.requires_grad()) {
      S* db = b.grad().data();
      const S* pa = a.values().data();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < k; ++j) db[i * k + j] += g[i] * pa[i * k + j];
    }
  });
  return out;
}

template <typename S>
Tensor<S> cross_entropy_logits(const Tensor<S>& logits, const std::vector<int>& targets,
                               const std::vector<S>& mask) {
  require_rank("cross_entropy", logits, 2);
  const int n = logits.dim(0), v = logits.dim(1);
  if (static_cast<int>(targets.size()) != n || static_cast<int>(mask.size()) != n) {
    throw ShapeError("cross_entropy", "targets/mask length must equal row count");
  }
  // Softmax rows are kept for the backward step.
  std::vector<S> probs(static_cast<std::size_t>(n) * v);
  S total = 0;
  for (int i = 0; i < n; ++i) {
    const S* x = logits.values().data() + static_cast<std::size_t>(i) * v;
    S* p = probs.data() + static_cast<std::size_t>(i) * v;
    S mx = x[0];
    for (int j = 1; j < v; ++j) mx = std::max(mx, x[j]);
    S z = 0;
    for (int j = 0; j < v; ++j) {
      p[j] = std::exp(x[j] - mx);
      z += p[j];
    }
    for (int j = 0; j < v; ++j) p[j] /= z;
    if (mask[static_cast<std::size_t>(i)] != S(0)) {
      const int t = targets[static_cast<std::size_t>(i)];
      if (t < 0 || t >= v) throw ShapeError("cross_entropy", "target out of range");
      // -log p = log z - (x_t - mx)
      total += mask[static_cast<std::size_t>(i)] * (std::log(z) - (x[t] - mx));
    }
  }
  Tensor<S> out = Tensor<S>::scalar(total);
  finish("cross_entropy", out, {logits}, [logits, out, targets, mask, probs = std::move(probs), n, v]() mutable {
    if (!logits.requires_grad()) return;
    const S g = out.grad()[0];
    S* dl = logits.grad().data();
    for (int i = 0; i < n; ++i) {
      const S mi = mask[static_cast<std::size_t>(i)];
      if (mi == S(0)) continue;
      const S* p = probs.data() + static_cast<std::size_t>(i) * v;
      S* dr = dl + static_cast<std::size_t>(i) * v;
      const int t = targets[static_cast<std::size_t>(i)];
      for (int j = 0; j < v; ++j) dr[j] += g * mi * (p[j] - (j == t ? S(1) : S(0)));
    }
  });
  return out;
}

template <typename S>
Tensor<S> batch_norm(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta,
                     Tensor<S>& running_mean, Tensor<S>& running_var, bool training,
                     S momentum, S eps) {
  require_rank("batch_norm", x, 2);
  const int b = x.dim(0), f = x.dim(1);
  if (gamma.rank() != 1 || gamma.dim(0) != f || beta.rank() != 1 || beta.dim(0) != f ||
      running_mean.dim(0) != f || running_var.dim(0) != f) {
    throw ShapeError("batch_norm", "feature-width mismatch");
  }
  Tensor<S> out = Tensor<S>::zeros({b, f});
  std::vector<S> xhat(static_cast<std::size_t>(b) * f);
  std::vector<S> inv_std(static_cast<std::size_t>(f));
  const S* px = x.values().data();
  if (training) {
    for (int j = 0; j < f; ++j) {
      S mu = 0;
      for (int i = 0; i < b; ++i) mu += px[i * f + j];
      mu /= static_cast<S>(b);
      S var = 0;
      for (int i = 0; i < b; ++i) {
        const S d = px[i * f + j] - mu;
        var += d * d;
      }
      var /= static_cast<S>(b);  // biased, as used for normalization
      inv_std[static_cast<std::size_t>(j)] = S(1) / std::sqrt(var + eps);
      for (int i = 0; i < b; ++i) {
        xhat[static_cast<std::size_t>(i) * f + j] = (px[i * f + j] - mu) * inv_std[static_cast<std::size_t>(j)];
      }
      running_mean.values()[static_cast<std::size_t>(j)] = momentum * running_mean.values()[static_cast<std::size_t>(j)] + (S(1) - momentum) * mu;
      running_var.values()[static_cast<std::size_t>(j)] = momentum * running_var.values()[static_cast<std::size_t>(j)] + (S(1) - momentum) * var;
    }
  } else {
    for (int j = 0; j < f; ++j) {
      inv_std[static_cast<std::size_t>(j)] = S(1) / std::sqrt(running_var.values()[static_cast<std::size_t>(j)] + eps);
      for (int i = 0; i < b; ++i) {
        xhat[static_cast<std::size_t>(i) * f + j] =
            (px[i * f + j] - running_mean.values()[static_cast<std::size_t>(j)]) * inv_std[static_cast<std::size_t>(j)];
      }
    }
  }
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < f; ++j)
      out.values()[i * f + j] = gamma.values()[static_cast<std::size_t>(j)] * xhat[static_cast<std::size_t>(i) * f + j] + beta.values()[static_cast<std::size_t>(j)];

  finish("batch_norm", out, {x, gamma, beta},
         [x, gamma, beta, out, xhat = std::move(xhat), inv_std = std::move(inv_std), b, f, training]() mutable {
           const S* g = out.grad().data();
           if (gamma.requires_grad()) {
             S* dg = gamma.grad().data();
             for (int i = 0; i < b; ++i)
               for (int j = 0; j < f; ++j) dg[j] += g[i * f + j] * xhat[static_cast<std::size_t>(i) * f + j];
           }
           if (beta.requires_grad()) {
             S* db = beta.grad().data();
             for (int i = 0; i < b; ++i)
               for (int j = 0; j < f; ++j) db[j] += g[i * f + j];
           }
           if (!x.requires_grad()) return;
           S* dx = x.grad().data();
           if (!training) {
             for (int i = 0; i < b; ++i)
               for (int j = 0; j < f; ++j)
                 dx[i * f + j] += g[i * f + j] * gamma.values()[static_cast<std::size_t>(j)] * inv_std[static_cast<std::size_t>(j)];
             return;
           }
           // Training mode: the batch statistics depend on x, so the full
           // normalization Jacobian applies per feature column.
           for (int j = 0; j < f; ++j) {
             S sum_dxhat = 0, sum_dxhat_xhat = 0;
             for (int i = 0; i < b; ++i) {
               const S dxh = g[i * f + j] * gamma.values()[static_cast<std::size_t>(j)];
               sum_dxhat += dxh;
               sum_dxhat_xhat += dxh * xhat[static_cast<std::size_t>(i) * f + j];
             }
             const S inv_b = S(1) / static_cast<S>(b);
             for (int i = 0; i < b; ++i) {
               const S dxh = g[i * f + j] * gamma.values()[static_cast<std::size_t>(j)];
               dx[i * f + j] += inv_std[static_cast<std::size_t>(j)] *
                                (dxh - inv_b * sum_dxhat - xhat[static_cast<std::size_t>(i) * f + j] * inv_b * sum_dxhat_xhat);
             }
           }
         });
  return out;
}

#define JKET_INSTANTIATE_OPS(S)                                                                              \
  template Tensor<S> matmul(const Tensor<S>&, const Tensor<S>&);                                             \
  template Tensor<S> matmul_nt(const Tensor<S>&, const Tensor<S>&);                                          \
  template Tensor<S> add(const Tensor<S>&, const Tensor<S>&);                                                \
  template Tensor<S> sub(const Tensor<S>&, const Tensor<S>&);                                                \
  template Tensor<S> mul(const Tensor<S>&, const Tensor<S>&);                                                \
  template Tensor<S> affine(const Tensor<S>&, S, S);                                                         \
  template Tensor<S> clamp(const Tensor<S>&, S, S);                                                          \
  template Tensor<S> concat(const std::vector<Tensor<S>>&, int);                                             \
  template Tensor<S> slice(const Tensor<S>&, int, int, int);                                                 \
  template Tensor<S> stack_rows(const std::vector<Tensor<S>>&);                                              \
  template Tensor<S> reshape(const Tensor<S>&, Shape);                                                       \
  template Tensor<S> embedding_lookup(const Tensor<S>&, const std::vector<int>&);                            \
  template Tensor<S> sigmoid(const Tensor<S>&);                                                              \
  template Tensor<S> tanh_op(const Tensor<S>&);                                                              \
  template Tensor<S> relu(const Tensor<S>&);                                                                 \
  template Tensor<S> log_op(const Tensor<S>&);                                                               \
  template Tensor<S> softmax(const Tensor<S>&);                                                              \
  template Tensor<S> sum_all(const Tensor<S>&);                                                              \
  template Tensor<S> mean_all(const Tensor<S>&);                                                             \
  template Tensor<S> sum_axis(const Tensor<S>&, int);                                                        \
  template Tensor<S> mean_axis0(const Tensor<S>&);                                                           \
  template Tensor<S> dot(const Tensor<S>&, const Tensor<S>&);                                                \
  template Tensor<S> rowwise_dot(const Tensor<S>&, const Tensor<S>&);                                        \
  template Tensor<S> cross_entropy_logits(const Tensor<S>&, const std::vector<int>&, const std::vector<S>&); \
  template Tensor<S> batch_norm(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&, Tensor<S>&, Tensor<S>&, bool, S, S);

JKET_INSTANTIATE_OPS(float)
JKET_INSTANTIATE_OPS(double)

#undef JKET_INSTANTIATE_OPS

}  // namespace jket
