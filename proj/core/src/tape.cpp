#include "chronofuse/tape.hpp"

#include <cmath>
#include <cstddef>

#include "chronofuse/errors.hpp"

namespace chronofuse {

const std::vector<double> Tape::empty_grad_;

Var Tape::push(Tensor t, const char* op) {
  Node n;
  n.val = std::move(t);
  n.op = op;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

std::vector<double>& Tape::acc(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.empty()) n.grad.assign(n.val.data.size(), 0.0);
  return n.grad;
}

const std::vector<double>* Tape::gptr(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  return n.grad.empty() ? nullptr : &n.grad;
}

void Tape::check2(Var a, const char* op) const {
  if (!a.valid() || a.id >= size())
    throw IndexError(std::string(op) + ": invalid tape handle");
}

const Tensor& Tape::val(Var v) const {
  check2(v, "val");
  return nodes_[static_cast<std::size_t>(v.id)].val;
}

const std::vector<double>& Tape::grad_of(Var v) const {
  check2(v, "grad_of");
  const Node& n = nodes_[static_cast<std::size_t>(v.id)];
  return n.grad.empty() ? empty_grad_ : n.grad;
}

Var Tape::value(Tensor t) { return push(std::move(t), "value"); }

Var Tape::param(Tensor& p) {
  Var v = push(p, "param");
  nodes_[static_cast<std::size_t>(v.id)].bound = &p;
  return v;
}

Var Tape::matmul(Var a, Var b) {
  check2(a, "matmul");
  check2(b, "matmul");
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  if (ta.rank() != 2 || tb.rank() != 2 || ta.dim(1) != tb.dim(0))
    throw DimensionError("matmul: incompatible shapes " + ta.shape_str() +
                         " and " + tb.shape_str());
  const int m = ta.dim(0), k = ta.dim(1), n = tb.dim(1);
  Tensor out({m, n});
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      const double av = ta.data[static_cast<std::size_t>(i) * k + p];
      if (av == 0.0) continue;
      const double* brow = tb.data.data() + static_cast<std::size_t>(p) * n;
      double* orow = out.data.data() + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  Var y = push(std::move(out), "matmul");
  nodes_[static_cast<std::size_t>(y.id)].back = [y, a, b, m, k, n](Tape& t) {
    const std::vector<double>& g = *t.gptr(y.id);
    const Tensor& ta2 = t.val(a);
    const Tensor& tb2 = t.val(b);
    std::vector<double>& ga = t.acc(a.id);
    std::vector<double>& gb = t.acc(b.id);
    for (int i = 0; i < m; ++i)
      for (int p = 0; p < k; ++p) {
        double s = 0.0;
        const double* grow = g.data() + static_cast<std::size_t>(i) * n;
        const double* brow = tb2.data.data() + static_cast<std::size_t>(p) * n;
        for (int j = 0; j < n; ++j) s += grow[j] * brow[j];
        ga[static_cast<std::size_t>(i) * k + p] += s;
      }
    for (int p = 0; p < k; ++p)
      for (int i = 0; i < m; ++i) {
        const double av = ta2.data[static_cast<std::size_t>(i) * k + p];
        if (av == 0.0) continue;
        const double* grow = g.data() + static_cast<std::size_t>(i) * n;
        double* brow = gb.data() + static_cast<std::size_t>(p) * n;
        for (int j = 0; j < n; ++j) brow[j] += av * grow[j];
      }
  };
  return y;
}

Var Tape::vecmat(Var v, Var m) {
  check2(v, "vecmat");
  check2(m, "vecmat");
  const Tensor& tv = val(v);
  const Tensor& tm = val(m);
  if (tv.rank() != 1 || tm.rank() != 2 || tv.dim(0) != tm.dim(0))
    throw DimensionError("vecmat: incompatible shapes " + tv.shape_str() +
                         " and " + tm.shape_str());
  const int k = tm.dim(0), n = tm.dim(1);
  Tensor out({n});
  for (int p = 0; p < k; ++p) {
    const double av = tv.data[static_cast<std::size_t>(p)];
    if (av == 0.0) continue;
    const double* mrow = tm.data.data() + static_cast<std::size_t>(p) * n;
    for (int j = 0; j < n; ++j) out.data[static_cast<std::size_t>(j)] += av * mrow[j];
  }
  Var y = push(std::move(out), "vecmat");
  nodes_[static_cast<std::size_t>(y.id)].back = [y, v, m, k, n](Tape& t) {
    const std::vector<double>& g = *t.gptr(y.id);
    const Tensor& tv2 = t.val(v);
    const Tensor& tm2 = t.val(m);
    std::vector<double>& gv = t.acc(v.id);
    std::vector<double>& gm = t.acc(m.id);
    for (int p = 0; p < k; ++p) {
      const double* mrow = tm2.data.data() + static_cast<std::size_t>(p) * n;
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += g[static_cast<std::size_t>(j)] * mrow[j];
      gv[static_cast<std::size_t>(p)] += s;
      const double av = tv2.data[static_cast<std::size_t>(p)];
      double* grow = gm.data() + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) grow[j] += av * g[static_cast<std::size_t>(j)];
    }
  };
  return y;
}

Var Tape::transpose(Var a) {
  check2(a, "transpose");
  const Tensor& ta = val(a);
  if (ta.rank() != 2)
    throw DimensionError("transpose: expected rank-2, got " + ta.shape_str());
  const int m = ta.dim(0), n = ta.dim(1);
  Tensor out({n, m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out.data[static_cast<std::size_t>(j) * m + i] =
          ta.data[static_cast<std::size_t>(i) * n + j];
  Var y = push(std::move(out), "transpose");
  nodes_[static_cast<std::size_t>(y.id)].back = [y, a, m, n](Tape& t) {
    const std::vector<double>& g = *t.gptr(y.id);
    std::vector<double>& ga = t.acc(a.id);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        ga[static_cast<std::size_t>(i) * n + j] +=
            g[static_cast<std::size_t>(j) * m + i];
  };
  return y;
}

Var Tape::add(Var a, Var b) {
  check2(a, "add");
  check2(b, "add");
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  if (!ta.same_shape(tb))
    throw DimensionError("add: shape mismatch " + ta.shape_str() + " vs " +
                         tb.shape_str());
  Tensor out = ta;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += tb.data[i];
  Var y = push(std::move(out), "add");
  nodes_[static_cast<std::size_t>(y.id)].back = [y, a, b](Tape& t) {
    const std::vector<double>& g = *t.gptr(y.id);
    std::vector<double>& ga = t.acc(a.id);
    std::vector<double>& gb = t.acc(b.id);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
      gb[i] += g[i];
    }
  };
  return y;
}

Var Tape::sub(Var a, Var b) {
  check2(a, "sub");
  check2(b, "sub");
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  if (!ta.same_shape(tb))
    throw DimensionError("sub: shape mismatch " + ta.shape_str() + " vs " +
                         tb.shape_str());
  Tensor out = ta;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= tb.data[i];
  Var y = push(std::move(out), "sub");
  nodes_[static_cast<std::size_t>(y.id)].back = [y, a, b](Tape& t) {
    const std::vector<double>& g = *t.gptr(y.id);
    std::vector<double>& ga = t.acc(a.id);
    std::vector<double>& gb = t.acc(b.id);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
      gb[i] -= g[i];
    }
  };
  return y;
}

Var Tape::mul(Var a, Var b) {
  check2(a, "mul");
  check2(b, "mul");
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  if (!ta.same_shape(tb))
    throw DimensionError("mul: shape mismatch " + ta.shape_str() + " vs " +
                         tb.shape_str());
  Tensor out = ta;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= tb.data[i];
  Var y = push(std::move(out), "mul");
  nodes_[static_cast<std::size_t>(y.id)].back = [y, a, b](Tape& t) {
    const std::vector<double>& g = *t.gptr(y.id);
    const Tensor& ta2 = t.val(a);
    const Tensor& tb2 = t.val(b);
    std::vector<double>& ga = t.acc(a.id);
    std::vector<double>& gb = t.acc(b.id);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i] * tb2.data[i];
      gb[i] += g[i] * ta2.data[i];
    }
  };
  return y;
}

Var Tape::scale(Var a, double c) {
  check2(a, "scale");
  Tensor out = val(a);
  for (double& x : out.data) x *= c;
  Var y = push(std::move(out), "scale");
  nodes_[static_cast<std::size_t>(y.id)].back = [y, a, c](Tape& t) {
    const std::vector<double>& g = *t.gptr(y.id);
    std::vector<double>& ga = t.acc(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
  };
  return y;
}

Var Tape::add_rowvec(Var a, Var v) {
  check2(a, "add_rowvec");
  check2(v, "add_rowvec");
  const Tensor& ta = val(a);
  const Tensor& tv = val(v);
  if (ta.rank() != 2 || tv.rank() != 1 || ta.dim(1) != tv.dim(0))
    throw DimensionError("add_rowvec: shapes " + ta.shape_str() + " and " +
                         tv.shape_str());
  const int n = ta.dim(0), d = ta.dim(1);
  Tensor out = ta;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      out.data[static_cast<std::size_t>(i) * d + j] += tv.data[static_cast<std::size_t>(j)];
  Var y = push(std::move(out), "add_rowvec");
  nodes_[static_cast<std::size_t>(y.id)].back = [y, a, v, n, d](Tape& t) {
    const std::vector<double>& g = *t.gptr(y.id);
    std::vector<double>& ga = t.acc(a.id);
    std::vector<double>& gv = t.acc(v.id);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) {
        const double gij = g[static_cast<std::size_t>(i) * d + j];
        ga[static_cast<std::size_t>(i) * d + j] += gij;
        gv[static_cast<std::size_t>(j)] += gij;
      }
  };
  return y;
}

Var Tape::mul_colvec(Var a, Var v) {
  check2(a, "mul_colvec");
  check2(v, "mul_colvec");
  const Tensor& ta = val(a);
  const Tensor& tv = val(v);
  if (ta.rank() != 2 || tv.rank() != 1 || ta.dim(0) != tv.dim(0))
    throw DimensionError("mul_colvec: shapes " + ta.shape_str() + " and " +
                         tv.shape_str());
  const int n = ta.dim(0), d = ta.dim(1);
  Tensor out = ta;
  for (int i = 0; i < n; ++i) {
    const double vi = tv.data[static_cast<std::size_t>(i)];
    for (int j = 0; j < d; ++j) out.data[static_cast<std::size_t>(i) * d + j] *= vi;
  }
  Var y = push(std::move(out), "mul_colvec");
  nodes_[static_cast<std::size_t>(y.id)].back = [y, a, v, n, d](Tape& t) {
    const std::vector<double>& g = *t.gptr(y.id);
    const Tensor& ta2 = t.val(a);
    const Tensor& tv2 = t.val(v);
    std::vector<double>& ga = t.acc(a.id);
    std::vector<double>& gv = t.acc(v.id);
    for (int i = 0; i < n; ++i) {
      const double vi = tv2.data[static_cast<std::size_t>(i)];
      double s = 0.0;
      for (int j = 0; j < d; ++j) {
        const std::size_t idx = static_cast<std::size_t>(i) * d + j;
        ga[idx] += g[idx] * vi;
        s += g[idx] * ta2.data[idx];
      }
      gv[static_cast<std::size_t>(i)] += s;
    }
  };
  return y;
}

Var Tape::relu(Var a) {
  check2(a, "relu");
  Tensor out = val(a);
  for (double& x : out.data) x = x > 0.0 ? x : 0.0;
  Var y = push(std::move(out), "relu");
  nodes_[static_cast<std::size_t>(y.id)].back = [y, a](Tape& t) {
    const std::vector<double>& g = *t.gptr(y.id);
    const Tensor& ta2 = t.val(a);
    std::vector<double>& ga = t.acc(a.id);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (ta2.data[i] > 0.0) ga[i] += g[i];
  };
  return y;
}

Var Tape::sigmoid(Var a) {
  check2(a, "sigmoid");
  Tensor out = val(a);
  for (double& x : out.data) x = 1.0 / (1.0 + std::exp(-x));
  Var y = push(std::move(out), "sigmoid");
  nodes_[static_cast<std::size_t>(y.id)].back = [y, a](Tape& t) {
    const std::vector<double>& g = *t.gptr(y.id);
    const Tensor& ty = t.val(y);
    std::vector<double>& ga = t.acc(a.id);
    for (std::size_t i = 0; i < g.size(); ++i)
      ga[i] += g[i] * ty.data[i] * (1.0 - ty.data[i]);
  };
  return y;
}

Var Tape::tanh_(Var a) {
  check2(a, "tanh");
  Tensor out = val(a);
  for (double& x : out.data) x = std::tanh(x);
  Var y = push(std::move(out), "tanh");
  nodes_[static_cast<std::size_t>(y.id)].back = [y, a](Tape& t) {
    const std::vector<double>& g = *t.gptr(y.id);
    const Tensor& ty = t.val(y);
    std::vector<double>& ga = t.acc(a.id);
    for (std::size_t i = 0; i < g.size(); ++i)
      ga[i] += g[i] * (1.0 - ty.data[i] * ty.data[i]);
  };
  return y;
}

Var Tape::reshape(Var a, std::vector<int> shape) {
  check2(a, "reshape");
  const Tensor& ta = val(a);
  if (shape_product(shape) != static_cast<long long>(ta.data.size()))
    throw DimensionError("reshape: size mismatch from " + ta.shape_str());
  Tensor out = ta;
  out.shape = std::move(shape);
  Var y = push(std::move(out), "reshape");
  nodes_[static_cast<std::size_t>(y.id)].back = [y, a](Tape& t) {
    const std::vector<double>& g = *t.gptr(y.id);
    std::vector<double>& ga = t.acc(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  };
  return y;
}

Var Tape::row(Var a, int i) {
  check2(a, "row");
  const Tensor& ta = val(a);
  if (ta.rank() != 2)
    throw DimensionError("row: expected rank-2, got " + ta.shape_str());
  const int n = ta.dim(0), d = ta.dim(1);
  if (i < 0 || i >= n)
    throw IndexError("row: index " + std::to_string(i) + " out of [0," +
                     std::to_string(n) + ")");
  Tensor out({d});
  for (int j = 0; j < d; ++j)
    out.data[static_cast<std::size_t>(j)] =
        ta.data[static_cast<std::size_t>(i) * d + j];
  Var y = push(std::move(out), "row");
  nodes_[static_cast<std::size_t>(y.id)].back = [y, a, i, d](Tape& t) {
    const std::vector<double>& g = *t.gptr(y.id);
    std::vector<double>& ga = t.acc(a.id);
    for (int j = 0; j < d; ++j)
      ga[static_cast<std::size_t>(i) * d + j] += g[static_cast<std::size_t>(j)];
  };
  return y;
}

Var Tape::rows(Var table, std::vector<int> ids) {
  check2(table, "rows");
  const Tensor& tt = val(table);
  if (tt.rank() != 2)
    throw DimensionError("rows: expected rank-2 table, got " + tt.shape_str());
  const int v = tt.dim(0), d = tt.dim(1);
  for (int id : ids)
    if (id < 0 || id >= v)
      throw IndexError("rows: id " + std::to_string(id) +
                       " outside vocabulary of size " + std::to_string(v));
  const int n = static_cast<int>(ids.size());
  Tensor out({n, d});
  for (int i = 0; i < n; ++i) {
    const double* src = tt.data.data() + static_cast<std::size_t>(ids[static_cast<std::size_t>(i)]) * d;
    double* dst = out.data.data() + static_cast<std::size_t>(i) * d;
    for (int j = 0; j < d; ++j) dst[j] = src[j];
  }
  Var y = push(std::move(out), "rows");
  nodes_[static_cast<std::size_t>(y.id)].back =
      [y, table, ids = std::move(ids), n, d](Tape& t) {
        const std::vector<double>& g = *t.gptr(y.id);
        std::vector<double>& gt = t.acc(table.id);
        for (int i = 0; i < n; ++i) {
          double* dst = gt.data() + static_cast<std::size_t>(ids[static_cast<std::size_t>(i)]) * d;
          const double* src = g.data() + static_cast<std::size_t>(i) * d;
          for (int j = 0; j < d; ++j) dst[j] += src[j];
        }
      };
  return y;
}

Var Tape::slice_cols(Var a, int c0, int c1) {
  check2(a, "slice_cols");
  const Tensor& ta = val(a);
  if (ta.rank() != 2)
    throw DimensionError("slice_cols: expected rank-2, got " + ta.shape_str());
  const int n = ta.dim(0), d = ta.dim(1);
  if (c0 < 0 || c1 > d || c0 >= c1)
    throw IndexError("slice_cols: [" + std::to_string(c0) + "," +
                     std::to_string(c1) + ") invalid for width " +
                     std::to_string(d));
  const int w = c1 - c0;
  Tensor out({n, w});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < w; ++j)
      out.data[static_cast<std::size_t>(i) * w + j] =
          ta.data[static_cast<std::size_t>(i) * d + c0 + j];
  Var y = push(std::move(out), "slice_cols");
  nodes_[static_cast<std::size_t>(y.id)].back = [y, a, c0, n, d, w](Tape& t) {
    const std::vector<double>& g = *t.gptr(y.id);
    std::vector<double>& ga = t.acc(a.id);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < w; ++j)
        ga[static_cast<std::size_t>(i) * d + c0 + j] +=
            g[static_cast<std::size_t>(i) * w + j];
  };
  return y;
}

Var Tape::slice_vec(Var a, int lo, int hi) {
  check2(a, "slice_vec");
  const Tensor& ta = val(a);
  if (ta.rank() != 1)
    throw DimensionError("slice_vec: expected rank-1, got " + ta.shape_str());
  const int d = ta.dim(0);
  if (lo < 0 || hi > d || lo >= hi)
    throw IndexError("slice_vec: [" + std::to_string(lo) + "," +
                     std::to_string(hi) + ") invalid for length " +
                     std::to_string(d));
  const int w = hi - lo;
  Tensor out({w});
  for (int j = 0; j < w; ++j)
    out.data[static_cast<std::size_t>(j)] = ta.data[static_cast<std::size_t>(lo + j)];
  Var y = push(std::move(out), "slice_vec");
  nodes_[static_cast<std::size_t>(y.id)].back = [y, a, lo, w](Tape& t) {
    const std::vector<double>& g = *t.gptr(y.id);
    std::vector<double>& ga = t.acc(a.id);
    for (int j = 0; j < w; ++j)
      ga[static_cast<std::size_t>(lo + j)] += g[static_cast<std::size_t>(j)];
  };
  return y;
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no parts");
  int n = -1, total = 0;
  for (Var p : parts) {
    check2(p, "concat_cols");
    const Tensor& tp = val(p);
    if (tp.rank() != 2)
      throw DimensionError("concat_cols: expected rank-2, got " + tp.shape_str());
    if (n < 0) n = tp.dim(0);
    if (tp.dim(0) != n)
      throw DimensionError("concat_cols: row mismatch " + tp.shape_str());
    total += tp.dim(1);
  }
  Tensor out({n, total});
  int off = 0;
  for (Var p : parts) {
    const Tensor& tp = val(p);
    const int d = tp.dim(1);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j)
        out.data[static_cast<std::size_t>(i) * total + off + j] =
            tp.data[static_cast<std::size_t>(i) * d + j];
    off += d;
  }
  Var y = push(std::move(out), "concat_cols");
  std::vector<Var> ps = parts;
  nodes_[static_cast<std::size_t>(y.id)].back = [y, ps, n, total](Tape& t) {
    const std::vector<double>& g = *t.gptr(y.id);
    int off2 = 0;
    for (Var p : ps) {
      const int d = t.val(p).dim(1);
      std::vector<double>& gp = t.acc(p.id);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j)
          gp[static_cast<std::size_t>(i) * d + j] +=
              g[static_cast<std::size_t>(i) * total + off2 + j];
      off2 += d;
    }
  };
  return y;
}

Var Tape::concat_vec(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_vec: no parts");
  int total = 0;
  for (Var p : parts) {
    check2(p, "concat_vec");
    const Tensor& tp = val(p);
    if (tp.rank() != 1)
      throw DimensionError("concat_vec: expected rank-1, got " + tp.shape_str());
    total += tp.dim(0);
  }
  Tensor out({total});
  int off = 0;
  for (Var p : parts) {
    const Tensor& tp = val(p);
    for (int j = 0; j < tp.dim(0); ++j)
      out.data[static_cast<std::size_t>(off + j)] = tp.data[static_cast<std::size_t>(j)];
    off += tp.dim(0);
  }
  Var y = push(std::move(out), "concat_vec");
  std::vector<Var> ps = parts;
  nodes_[static_cast<std::size_t>(y.id)].back = [y, ps](Tape& t) {
    const std::vector<double>& g = *t.gptr(y.id);
    int off2 = 0;
    for (Var p : ps) {
      const int d = t.val(p).dim(0);
      std::vector<double>& gp = t.acc(p.id);
      for (int j = 0; j < d; ++j)
        gp[static_cast<std::size_t>(j)] += g[static_cast<std::size_t>(off2 + j)];
      off2 += d;
    }
  };
  return y;
}

Var Tape::stack_rows(const std::vector<Var>& rows_in) {
  if (rows_in.empty()) throw ContractError("stack_rows: no rows");
  int d = -1;
  for (Var p : rows_in) {
    check2(p, "stack_rows");
    const Tensor& tp = val(p);
    if (tp.rank() != 1)
      throw DimensionError("stack_rows: expected rank-1, got " + tp.shape_str());
    if (d < 0) d = tp.dim(0);
    if (tp.dim(0) != d)
      throw DimensionError("stack_rows: length mismatch " + tp.shape_str());
  }
  const int n = static_cast<int>(rows_in.size());
  Tensor out({n, d});
  for (int i = 0; i < n; ++i) {
    const Tensor& tp = val(rows_in[static_cast<std::size_t>(i)]);
    for (int j = 0; j < d; ++j)
      out.data[static_cast<std::size_t>(i) * d + j] = tp.data[static_cast<std::size_t>(j)];
  }
  Var y = push(std::move(out), "stack_rows");
  std::vector<Var> ps = rows_in;
  nodes_[static_cast<std::size_t>(y.id)].back = [y, ps, d](Tape& t) {
    const std::vector<double>& g = *t.gptr(y.id);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      std::vector<double>& gp = t.acc(ps[i].id);
      for (int j = 0; j < d; ++j)
        gp[static_cast<std::size_t>(j)] += g[i * static_cast<std::size_t>(d) + j];
    }
  };
  return y;
}

Var Tape::pick(Var a, int flat_index) {
  check2(a, "pick");
  const Tensor& ta = val(a);
  if (flat_index < 0 || static_cast<std::size_t>(flat_index) >= ta.data.size())
    throw IndexError("pick: index " + std::to_string(flat_index) +
                     " out of range for " + ta.shape_str());
  Tensor out({1});
  out.data[0] = ta.data[static_cast<std::size_t>(flat_index)];
  Var y = push(std::move(out), "pick");
  nodes_[static_cast<std::size_t>(y.id)].back = [y, a, flat_index](Tape& t) {
    const std::vector<double>& g = *t.gptr(y.id);
    t.acc(a.id)[static_cast<std::size_t>(flat_index)] += g[0];
  };
  return y;
}

Var Tape::mean_rows(Var a) {
  check2(a, "mean_rows");
  const Tensor& ta = val(a);
  if (ta.rank() != 2)
    throw DimensionError("mean_rows: expected rank-2, got " + ta.shape_str());
  const int n = ta.dim(0), d = ta.dim(1);
  if (n == 0) throw ContractError("mean_rows: empty pool");
  Tensor out({d});
  for (int j = 0; j < d; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += ta.data[static_cast<std::size_t>(i) * d + j];
    out.data[static_cast<std::size_t>(j)] = s / n;
  }
  Var y = push(std::move(out), "mean_rows");
  nodes_[static_cast<std::size_t>(y.id)].back = [y, a, n, d](Tape& t) {
    const std::vector<double>& g = *t.gptr(y.id);
    std::vector<double>& ga = t.acc(a.id);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j)
        ga[static_cast<std::size_t>(i) * d + j] += g[static_cast<std::size_t>(j)] / n;
  };
  return y;
}

Var Tape::mean_last(Var a) {
  check2(a, "mean_last");
  const Tensor& ta = val(a);
  if (ta.rank() != 2)
    throw DimensionError("mean_last: expected rank-2, got " + ta.shape_str());
  const int c = ta.dim(0), l = ta.dim(1);
  if (l == 0) throw ContractError("mean_last: empty pool");
  Tensor out({c});
  for (int i = 0; i < c; ++i) {
    double s = 0.0;
    for (int j = 0; j < l; ++j) s += ta.data[static_cast<std::size_t>(i) * l + j];
    out.data[static_cast<std::size_t>(i)] = s / l;
  }
  Var y = push(std::move(out), "mean_last");
  nodes_[static_cast<std::size_t>(y.id)].back = [y, a, c, l](Tape& t) {
    const std::vector<double>& g = *t.gptr(y.id);
    std::vector<double>& ga = t.acc(a.id);
    for (int i = 0; i < c; ++i)
      for (int j = 0; j < l; ++j)
        ga[static_cast<std::size_t>(i) * l + j] += g[static_cast<std::size_t>(i)] / l;
  };
  return y;
}

Var Tape::sum_all(Var a) {
  check2(a, "sum_all");
  const Tensor& ta = val(a);
  Tensor out({1});
  double s = 0.0;
  for (double x : ta.data) s += x;
  out.data[0] = s;
  Var y = push(std::move(out), "sum_all");
  nodes_[static_cast<std::size_t>(y.id)].back = [y, a](Tape& t) {
    const double g0 = (*t.gptr(y.id))[0];
    std::vector<double>& ga = t.acc(a.id);
    for (double& g : ga) g += g0;
  };
  return y;
}

Var Tape::mean_all(Var a) {
  check2(a, "mean_all");
  const Tensor& ta = val(a);
  if (ta.data.empty()) throw ContractError("mean_all: empty pool");
  const double inv = 1.0 / static_cast<double>(ta.data.size());
  Tensor out({1});
  double s = 0.0;
  for (double x : ta.data) s += x;
  out.data[0] = s * inv;
  Var y = push(std::move(out), "mean_all");
  nodes_[static_cast<std::size_t>(y.id)].back = [y, a, inv](Tape& t) {
    const double g0 = (*t.gptr(y.id))[0] * inv;
    std::vector<double>& ga = t.acc(a.id);
    for (double& g : ga) g += g0;
  };
  return y;
}

namespace {

void softmax_slice(const double* x, double* y, int k) {
  double m = x[0];
  for (int i = 1; i < k; ++i) m = x[i] > m ? x[i] : m;
  double s = 0.0;
  for (int i = 0; i < k; ++i) {
    y[i] = std::exp(x[i] - m);
    s += y[i];
  }
  for (int i = 0; i < k; ++i) y[i] /= s;
}

void log_softmax_slice(const double* x, double* y, int k) {
  double m = x[0];
  for (int i = 1; i < k; ++i) m = x[i] > m ? x[i] : m;
  double s = 0.0;
  for (int i = 0; i < k; ++i) s += std::exp(x[i] - m);
  const double lse = m + std::log(s);
  for (int i = 0; i < k; ++i) y[i] = x[i] - lse;
}

}  // namespace

Var Tape::softmax_last(Var a) {
  check2(a, "softmax");
  const Tensor& ta = val(a);
  if (ta.rank() != 1 && ta.rank() != 2)
    throw DimensionError("softmax: expected rank 1 or 2, got " + ta.shape_str());
  ta.check_finite("softmax input");
  const int n = ta.rank() == 2 ? ta.dim(0) : 1;
  const int k = ta.rank() == 2 ? ta.dim(1) : ta.dim(0);
  if (k == 0) throw DimensionError("softmax: empty axis");
  Tensor out = ta;
  for (int i = 0; i < n; ++i)
    softmax_slice(ta.data.data() + static_cast<std::size_t>(i) * k,
                  out.data.data() + static_cast<std::size_t>(i) * k, k);
  Var y = push(std::move(out), "softmax");
  nodes_[static_cast<std::size_t>(y.id)].back = [y, a, n, k](Tape& t) {
    const std::vector<double>& g = *t.gptr(y.id);
    const Tensor& ty = t.val(y);
    std::vector<double>& ga = t.acc(a.id);
    for (int i = 0; i < n; ++i) {
      const double* yi = ty.data.data() + static_cast<std::size_t>(i) * k;
      const double* gi = g.data() + static_cast<std::size_t>(i) * k;
      double dot = 0.0;
      for (int j = 0; j < k; ++j) dot += gi[j] * yi[j];
      double* gai = ga.data() + static_cast<std::size_t>(i) * k;
      for (int j = 0; j < k; ++j) gai[j] += yi[j] * (gi[j] - dot);
    }
  };
  return y;
}

Var Tape::log_softmax_last(Var a) {
  check2(a, "log_softmax");
  const Tensor& ta = val(a);
  if (ta.rank() != 1 && ta.rank() != 2)
    throw DimensionError("log_softmax: expected rank 1 or 2, got " + ta.shape_str());
  ta.check_finite("log_softmax input");
  const int n = ta.rank() == 2 ? ta.dim(0) : 1;
  const int k = ta.rank() == 2 ? ta.dim(1) : ta.dim(0);
  if (k == 0) throw DimensionError("log_softmax: empty axis");
  Tensor out = ta;
  for (int i = 0; i < n; ++i)
    log_softmax_slice(ta.data.data() + static_cast<std::size_t>(i) * k,
                      out.data.data() + static_cast<std::size_t>(i) * k, k);
  Var y = push(std::move(out), "log_softmax");
  nodes_[static_cast<std::size_t>(y.id)].back = [y, a, n, k](Tape& t) {
    const std::vector<double>& g = *t.gptr(y.id);
    const Tensor& ty = t.val(y);
    std::vector<double>& ga = t.acc(a.id);
    for (int i = 0; i < n; ++i) {
      const double* yi = ty.data.data() + static_cast<std::size_t>(i) * k;
      const double* gi = g.data() + static_cast<std::size_t>(i) * k;
      double gsum = 0.0;
      for (int j = 0; j < k; ++j) gsum += gi[j];
      double* gai = ga.data() + static_cast<std::size_t>(i) * k;
      for (int j = 0; j < k; ++j) gai[j] += gi[j] - std::exp(yi[j]) * gsum;
    }
  };
  return y;
}

Var Tape::conv1d(Var x, Var w, Var b, int stride, int pad) {
  check2(x, "conv1d");
  check2(w, "conv1d");
  check2(b, "conv1d");
  const Tensor& tx = val(x);
  const Tensor& tw = val(w);
  const Tensor& tb = val(b);
  if (tx.rank() != 2 || tw.rank() != 3 || tb.rank() != 1)
    throw DimensionError("conv1d: ranks " + tx.shape_str() + ", " +
                         tw.shape_str() + ", " + tb.shape_str());
  const int c = tx.dim(0), l = tx.dim(1);
  const int o = tw.dim(0), k = tw.dim(2);
  if (tw.dim(1) != c || tb.dim(0) != o)
    throw DimensionError("conv1d: channel mismatch " + tx.shape_str() + " vs " +
                         tw.shape_str());
  if (stride < 1) throw ContractError("conv1d: stride must be >= 1");
  if (pad < 0) throw ContractError("conv1d: pad must be >= 0");
  if (l + 2 * pad < k)
    throw DimensionError("conv1d: input length " + std::to_string(l) +
                         " (+2*" + std::to_string(pad) +
                         " pad) shorter than kernel " + std::to_string(k));
  const int lo = (l + 2 * pad - k) / stride + 1;
  Tensor out({o, lo});
  for (int oc = 0; oc < o; ++oc) {
    double* orow = out.data.data() + static_cast<std::size_t>(oc) * lo;
    for (int t = 0; t < lo; ++t) orow[t] = tb.data[static_cast<std::size_t>(oc)];
    for (int ic = 0; ic < c; ++ic) {
      const double* xrow = tx.data.data() + static_cast<std::size_t>(ic) * l;
      const double* wrow =
          tw.data.data() + (static_cast<std::size_t>(oc) * c + ic) * k;
      for (int kk = 0; kk < k; ++kk) {
        const double wv = wrow[kk];
        if (wv == 0.0) continue;
        for (int t = 0; t < lo; ++t) {
          const int pos = t * stride + kk - pad;
          if (pos >= 0 && pos < l) orow[t] += wv * xrow[pos];
        }
      }
    }
  }
  Var y = push(std::move(out), "conv1d");
  nodes_[static_cast<std::size_t>(y.id)].back =
      [y, x, w, b, stride, pad, c, l, o, k, lo](Tape& t2) {
        const std::vector<double>& g = *t2.gptr(y.id);
        const Tensor& tx2 = t2.val(x);
        const Tensor& tw2 = t2.val(w);
        std::vector<double>& gx = t2.acc(x.id);
        std::vector<double>& gw = t2.acc(w.id);
        std::vector<double>& gb = t2.acc(b.id);
        for (int oc = 0; oc < o; ++oc) {
          const double* grow = g.data() + static_cast<std::size_t>(oc) * lo;
          double bs = 0.0;
          for (int t = 0; t < lo; ++t) bs += grow[t];
          gb[static_cast<std::size_t>(oc)] += bs;
          for (int ic = 0; ic < c; ++ic) {
            const double* xrow = tx2.data.data() + static_cast<std::size_t>(ic) * l;
            const double* wrow =
                tw2.data.data() + (static_cast<std::size_t>(oc) * c + ic) * k;
            double* gxrow = gx.data() + static_cast<std::size_t>(ic) * l;
            double* gwrow =
                gw.data() + (static_cast<std::size_t>(oc) * c + ic) * k;
            for (int kk = 0; kk < k; ++kk) {
              const double wv = wrow[kk];
              double ws = 0.0;
              for (int t = 0; t < lo; ++t) {
                const int pos = t * stride + kk - pad;
                if (pos < 0 || pos >= l) continue;
                ws += grow[t] * xrow[pos];
                gxrow[pos] += grow[t] * wv;
              }
              gwrow[kk] += ws;
            }
          }
        }
      };
  return y;
}

Var Tape::linear(Var x, Var w, Var b) { return add_rowvec(matmul(x, w), b); }

Var Tape::linear_vec(Var v, Var w, Var b) { return add(vecmat(v, w), b); }

Var Tape::attention(Var q, Var k, Var v) {
  const Tensor& tq = val(q);
  const Tensor& tk = val(k);
  const Tensor& tv = val(v);
  if (tq.rank() != 2 || tk.rank() != 2 || tv.rank() != 2)
    throw DimensionError("attention: expected rank-2 inputs");
  if (tq.dim(1) != tk.dim(1))
    throw DimensionError("attention: query/key width mismatch " +
                         tq.shape_str() + " vs " + tk.shape_str());
  if (tk.dim(0) != tv.dim(0))
    throw DimensionError("attention: key/value count mismatch " +
                         tk.shape_str() + " vs " + tv.shape_str());
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(tq.dim(1)));
  Var scores = scale(matmul(q, transpose(k)), inv_sqrt_d);
  return matmul(softmax_last(scores), v);
}

Var Tape::nll(Var log_probs, int target) {
  const Tensor& tp = val(log_probs);
  if (tp.rank() != 1)
    throw DimensionError("nll: expected rank-1 log-probabilities, got " +
                         tp.shape_str());
  if (target < 0 || target >= tp.dim(0))
    throw IndexError("nll: target " + std::to_string(target) +
                     " outside [0," + std::to_string(tp.dim(0)) + ")");
  return scale(pick(log_probs, target), -1.0);
}

Var Tape::mse_scalar(Var pred, double target) {
  const Tensor& tp = val(pred);
  if (tp.size() != 1)
    throw DimensionError("mse_scalar: expected single element, got " +
                         tp.shape_str());
  Var d = sub(pred, value(Tensor::scalar(target)));
  return mul(d, d);
}

void Tape::backward(Var loss) {
  check2(loss, "backward");
  const Node& ln = nodes_[static_cast<std::size_t>(loss.id)];
  if (ln.val.size() != 1)
    throw ContractError("backward: loss must be a single element, got " +
                        ln.val.shape_str());
  acc(loss.id)[0] += 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.empty() || !n.back) continue;
    n.back(*this);
  }
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    Node& n = nodes_[id];
    if (!n.bound || n.grad.empty()) continue;
    n.bound->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      n.bound->grad[i] += n.grad[i];
  }
}

}  // namespace chronofuse
