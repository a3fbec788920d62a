#pragma once

#include <string>
#include <vector>

#include "chronofuse/params.hpp"
#include "chronofuse/tape.hpp"

namespace chronofuse {

// Reusable layer compositions. Each layer has a declare_* that registers its
// tensors in a ParameterSet under a prefix, and a *_forward that builds the
// computation on a tape. declare_* is idempotent, so forwards may call it
// lazily as long as shapes stay fixed.

// ---- Linear ----
void declare_linear(ParameterSet& ps, const std::string& prefix, int d_in,
                    int d_out);
Var linear_forward(Tape& t, ParameterSet& ps, const std::string& prefix,
                   Var x);      // rank-2 [n x d_in]
Var linear_forward_vec(Tape& t, ParameterSet& ps, const std::string& prefix,
                       Var v);  // rank-1 [d_in]

// ---- MLP over a vector: linear(+ReLU) chain; no ReLU after the last ----
void declare_mlp(ParameterSet& ps, const std::string& prefix,
                 const std::vector<int>& dims);
Var mlp_forward(Tape& t, ParameterSet& ps, const std::string& prefix,
                const std::vector<int>& dims, Var v);

// ---- Bidirectional LSTM ----
// Gate layout along the 4H axis: input, forget, cell, output.
void declare_bilstm(ParameterSet& ps, const std::string& prefix, int d_in,
                    int hidden);

struct BiLstmOut {
  Var per_step;  // [T x 2H]
  Var summary;   // [2H] = concat(final forward h, final backward h)
};

BiLstmOut bilstm_forward(Tape& t, ParameterSet& ps, const std::string& prefix,
                         Var seq /*[T x d_in]*/, int hidden);

// ---- Unidirectional recurrent encoders (return the final hidden state) ----
void declare_lstm(ParameterSet& ps, const std::string& prefix, int d_in,
                  int hidden);
Var lstm_forward(Tape& t, ParameterSet& ps, const std::string& prefix,
                 Var seq /*[T x d_in]*/, int hidden);  // -> [H]

// Gate layout along the 3H axis: reset, update, candidate.
void declare_gru(ParameterSet& ps, const std::string& prefix, int d_in,
                 int hidden);
Var gru_forward(Tape& t, ParameterSet& ps, const std::string& prefix,
                Var seq /*[T x d_in]*/, int hidden);  // -> [H]

// ---- Residual 1-D conv block ----
// y = skip(x) + conv2(relu(conv1(x))); conv1 applies the stride, conv2 is
// stride-1; kernels odd with same-length padding. The skip is identity when
// channels and stride allow, else a 1x1 strided projection.
void declare_res_block(ParameterSet& ps, const std::string& prefix, int in_ch,
                       int out_ch, int kernel, int stride);
Var res_block_forward(Tape& t, ParameterSet& ps, const std::string& prefix,
                      Var x /*[in_ch x L]*/, int in_ch, int out_ch, int kernel,
                      int stride);

// ---- Conv encoder: stem conv + N residual blocks + time pooling + linear ----
struct ConvEncoderSpec {
  int in_ch = 1;
  int stem_ch = 8;
  int stem_kernel = 7;
  int stem_stride = 1;
  int blocks = 2;
  int block_kernel = 3;
  int block_stride = 1;  // applied in the first block only
  int out_dim = 16;
};

void declare_conv_encoder(ParameterSet& ps, const std::string& prefix,
                          const ConvEncoderSpec& spec);
Var conv_encoder_forward(Tape& t, ParameterSet& ps, const std::string& prefix,
                         const ConvEncoderSpec& spec, Var x /*[in_ch x L]*/);

}  // namespace chronofuse
