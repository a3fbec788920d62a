#include "chronofuse/nn.hpp"

#include "chronofuse/errors.hpp"

namespace chronofuse {

void declare_linear(ParameterSet& ps, const std::string& prefix, int d_in,
                    int d_out) {
  ps.add(prefix + ".w", {d_in, d_out}, Init::kKaimingUniform);
  ps.add(prefix + ".b", {d_out}, Init::kZero);
}

Var linear_forward(Tape& t, ParameterSet& ps, const std::string& prefix,
                   Var x) {
  return t.linear(x, t.param(ps.get(prefix + ".w")),
                  t.param(ps.get(prefix + ".b")));
}

Var linear_forward_vec(Tape& t, ParameterSet& ps, const std::string& prefix,
                       Var v) {
  return t.linear_vec(v, t.param(ps.get(prefix + ".w")),
                      t.param(ps.get(prefix + ".b")));
}

void declare_mlp(ParameterSet& ps, const std::string& prefix,
                 const std::vector<int>& dims) {
  if (dims.size() < 2) throw ConfigError("mlp needs at least input and output dims");
  for (std::size_t i = 0; i + 1 < dims.size(); ++i)
    declare_linear(ps, prefix + ".l" + std::to_string(i), dims[i], dims[i + 1]);
}

Var mlp_forward(Tape& t, ParameterSet& ps, const std::string& prefix,
                const std::vector<int>& dims, Var v) {
  if (dims.size() < 2) throw ConfigError("mlp needs at least input and output dims");
  const Tensor& tv = t.val(v);
  if (tv.rank() != 1 || tv.dim(0) != dims.front())
    throw DimensionError("mlp input " + tv.shape_str() + " does not match width " +
                         std::to_string(dims.front()));
  Var h = v;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    h = linear_forward_vec(t, ps, prefix + ".l" + std::to_string(i), h);
    if (i + 2 < dims.size()) h = t.relu(h);
  }
  return h;
}

void declare_bilstm(ParameterSet& ps, const std::string& prefix, int d_in,
                    int hidden) {
  for (const char* dir : {".fw", ".bw"}) {
    ps.add(prefix + dir + ".wx", {d_in, 4 * hidden}, Init::kKaimingUniform);
    ps.add(prefix + dir + ".wh", {hidden, 4 * hidden}, Init::kKaimingUniform);
    ps.add(prefix + dir + ".b", {4 * hidden}, Init::kZero);
  }
}

namespace {

// One directional pass; steps lists row indices in processing order.
std::vector<Var> lstm_direction(Tape& t, ParameterSet& ps,
                                const std::string& prefix, Var seq,
                                const std::vector<int>& steps, int hidden) {
  Var wx = t.param(ps.get(prefix + ".wx"));
  Var wh = t.param(ps.get(prefix + ".wh"));
  Var b = t.param(ps.get(prefix + ".b"));
  Var h = t.value(Tensor({hidden}));
  Var c = t.value(Tensor({hidden}));
  std::vector<Var> hs(steps.size());
  for (std::size_t si = 0; si < steps.size(); ++si) {
    Var x = t.row(seq, steps[si]);
    Var gates = t.add(t.add(t.vecmat(x, wx), t.vecmat(h, wh)), b);
    Var gi = t.sigmoid(t.slice_vec(gates, 0, hidden));
    Var gf = t.sigmoid(t.slice_vec(gates, hidden, 2 * hidden));
    Var gg = t.tanh_(t.slice_vec(gates, 2 * hidden, 3 * hidden));
    Var go = t.sigmoid(t.slice_vec(gates, 3 * hidden, 4 * hidden));
    c = t.add(t.mul(gf, c), t.mul(gi, gg));
    h = t.mul(go, t.tanh_(c));
    hs[si] = h;
  }
  return hs;
}

}  // namespace

BiLstmOut bilstm_forward(Tape& t, ParameterSet& ps, const std::string& prefix,
                         Var seq, int hidden) {
  const Tensor& ts = t.val(seq);
  if (ts.rank() != 2)
    throw DimensionError("bilstm expects [T x d] input, got " + ts.shape_str());
  const int steps = ts.dim(0);
  if (steps < 1) throw ContractError("bilstm: empty sequence");
  std::vector<int> fwd(static_cast<std::size_t>(steps));
  std::vector<int> bwd(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    fwd[static_cast<std::size_t>(i)] = i;
    bwd[static_cast<std::size_t>(i)] = steps - 1 - i;
  }
  std::vector<Var> hf = lstm_direction(t, ps, prefix + ".fw", seq, fwd, hidden);
  std::vector<Var> hb = lstm_direction(t, ps, prefix + ".bw", seq, bwd, hidden);
  std::vector<Var> rows(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i)
    // hb was produced newest-first; step i of the backward pass is hb[T-1-i].
    rows[static_cast<std::size_t>(i)] = t.concat_vec(
        {hf[static_cast<std::size_t>(i)], hb[static_cast<std::size_t>(steps - 1 - i)]});
  BiLstmOut out;
  out.per_step = t.stack_rows(rows);
  out.summary = t.concat_vec({hf.back(), hb.back()});
  return out;
}

void declare_lstm(ParameterSet& ps, const std::string& prefix, int d_in,
                  int hidden) {
  ps.add(prefix + ".wx", {d_in, 4 * hidden}, Init::kKaimingUniform);
  ps.add(prefix + ".wh", {hidden, 4 * hidden}, Init::kKaimingUniform);
  ps.add(prefix + ".b", {4 * hidden}, Init::kZero);
}

Var lstm_forward(Tape& t, ParameterSet& ps, const std::string& prefix,
                 Var seq, int hidden) {
  const Tensor& ts = t.val(seq);
  if (ts.rank() != 2)
    throw DimensionError("lstm expects [T x d] input, got " + ts.shape_str());
  const int steps = ts.dim(0);
  if (steps < 1) throw ContractError("lstm: empty sequence");
  std::vector<int> fwd(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) fwd[static_cast<std::size_t>(i)] = i;
  return lstm_direction(t, ps, prefix, seq, fwd, hidden).back();
}

void declare_gru(ParameterSet& ps, const std::string& prefix, int d_in,
                 int hidden) {
  ps.add(prefix + ".wx", {d_in, 3 * hidden}, Init::kKaimingUniform);
  ps.add(prefix + ".wh", {hidden, 3 * hidden}, Init::kKaimingUniform);
  ps.add(prefix + ".b", {3 * hidden}, Init::kZero);
}

Var gru_forward(Tape& t, ParameterSet& ps, const std::string& prefix, Var seq,
                int hidden) {
  const Tensor& ts = t.val(seq);
  if (ts.rank() != 2)
    throw DimensionError("gru expects [T x d] input, got " + ts.shape_str());
  const int steps = ts.dim(0);
  if (steps < 1) throw ContractError("gru: empty sequence");
  Var wx = t.param(ps.get(prefix + ".wx"));
  Var wh = t.param(ps.get(prefix + ".wh"));
  Var b = t.param(ps.get(prefix + ".b"));
  Var h = t.value(Tensor({hidden}));
  for (int i = 0; i < steps; ++i) {
    Var xa = t.add(t.vecmat(t.row(seq, i), wx), b);
    Var ha = t.vecmat(h, wh);
    Var r = t.sigmoid(t.add(t.slice_vec(xa, 0, hidden),
                            t.slice_vec(ha, 0, hidden)));
    Var u = t.sigmoid(t.add(t.slice_vec(xa, hidden, 2 * hidden),
                            t.slice_vec(ha, hidden, 2 * hidden)));
    Var n = t.tanh_(t.add(t.slice_vec(xa, 2 * hidden, 3 * hidden),
                          t.mul(r, t.slice_vec(ha, 2 * hidden, 3 * hidden))));
    // h' = (1 - u) * n + u * h, written as n + u * (h - n).
    h = t.add(n, t.mul(u, t.sub(h, n)));
  }
  return h;
}

namespace {

void declare_conv(ParameterSet& ps, const std::string& prefix, int in_ch,
                  int out_ch, int kernel) {
  ps.add(prefix + ".w", {out_ch, in_ch, kernel}, Init::kKaimingUniform);
  ps.add(prefix + ".b", {out_ch}, Init::kZero);
}

Var conv_forward(Tape& t, ParameterSet& ps, const std::string& prefix, Var x,
                 int stride, int pad) {
  return t.conv1d(x, t.param(ps.get(prefix + ".w")),
                  t.param(ps.get(prefix + ".b")), stride, pad);
}

}  // namespace

void declare_res_block(ParameterSet& ps, const std::string& prefix, int in_ch,
                       int out_ch, int kernel, int stride) {
  if (kernel % 2 == 0)
    throw ConfigError("res block kernel must be odd, got " +
                      std::to_string(kernel));
  declare_conv(ps, prefix + ".c1", in_ch, out_ch, kernel);
  declare_conv(ps, prefix + ".c2", out_ch, out_ch, kernel);
  if (in_ch != out_ch || stride != 1)
    declare_conv(ps, prefix + ".skip", in_ch, out_ch, 1);
}

Var res_block_forward(Tape& t, ParameterSet& ps, const std::string& prefix,
                      Var x, int in_ch, int out_ch, int kernel, int stride) {
  const Tensor& tx = t.val(x);
  if (tx.rank() != 2 || tx.dim(0) != in_ch)
    throw DimensionError("res block expects [" + std::to_string(in_ch) +
                         " x L], got " + tx.shape_str());
  if (tx.dim(1) < kernel)
    throw DimensionError("res block input length " + std::to_string(tx.dim(1)) +
                         " shorter than kernel " + std::to_string(kernel));
  const int pad = (kernel - 1) / 2;
  Var h = t.relu(conv_forward(t, ps, prefix + ".c1", x, stride, pad));
  h = conv_forward(t, ps, prefix + ".c2", h, 1, pad);
  Var skip = (in_ch != out_ch || stride != 1)
                 ? conv_forward(t, ps, prefix + ".skip", x, stride, 0)
                 : x;
  return t.add(skip, h);
}

void declare_conv_encoder(ParameterSet& ps, const std::string& prefix,
                          const ConvEncoderSpec& spec) {
  declare_conv(ps, prefix + ".stem", spec.in_ch, spec.stem_ch,
               spec.stem_kernel);
  for (int b = 0; b < spec.blocks; ++b)
    declare_res_block(ps, prefix + ".rb" + std::to_string(b), spec.stem_ch,
                      spec.stem_ch, spec.block_kernel,
                      b == 0 ? spec.block_stride : 1);
  declare_linear(ps, prefix + ".head", spec.stem_ch, spec.out_dim);
}

Var conv_encoder_forward(Tape& t, ParameterSet& ps, const std::string& prefix,
                         const ConvEncoderSpec& spec, Var x) {
  const Tensor& tx = t.val(x);
  if (tx.rank() != 2 || tx.dim(0) != spec.in_ch)
    throw DimensionError("conv encoder expects [" + std::to_string(spec.in_ch) +
                         " x L], got " + tx.shape_str());
  const int stem_pad = (spec.stem_kernel - 1) / 2;
  Var h = t.relu(conv_forward(t, ps, prefix + ".stem", x, spec.stem_stride,
                              stem_pad));
  for (int b = 0; b < spec.blocks; ++b)
    h = t.relu(res_block_forward(t, ps, prefix + ".rb" + std::to_string(b), h,
                                 spec.stem_ch, spec.stem_ch, spec.block_kernel,
                                 b == 0 ? spec.block_stride : 1));
  return linear_forward_vec(t, ps, prefix + ".head", t.mean_last(h));
}

}  // namespace chronofuse
