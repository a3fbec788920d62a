#pragma once

#include <functional>
#include <vector>

#include "chronofuse/tensor.hpp"

namespace chronofuse {

/// Handle to a node on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode tape. Nodes are appended in topological order during the
/// forward pass; backward() replays them in reverse. Parameters registered
/// through param() receive their gradients in Tensor::grad, accumulated in
/// ascending node order so repeated runs are bit-identical.
class Tape {
 public:
  // Leaves.
  Var value(Tensor t);           // constant, no gradient
  Var param(Tensor& p);          // gradient accumulates into p.grad

  // Linear algebra.
  Var matmul(Var a, Var b);      // [m x k] * [k x n]
  Var vecmat(Var v, Var m);      // [k] * [k x n] -> [n]
  Var transpose(Var a);

  // Elementwise.
  Var add(Var a, Var b);         // same shape
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double c);
  Var add_rowvec(Var a, Var v);  // [n x d] + [d]
  Var mul_colvec(Var a, Var v);  // row i of a scaled by v[i]
  Var relu(Var a);
  Var sigmoid(Var a);
  Var tanh_(Var a);

  // Shape plumbing.
  Var reshape(Var a, std::vector<int> shape);
  Var row(Var a, int i);                     // [n x d] -> [d]
  Var rows(Var table, std::vector<int> ids); // gather; gradient scatters
  Var slice_cols(Var a, int c0, int c1);
  Var slice_vec(Var a, int lo, int hi);
  Var concat_cols(const std::vector<Var>& parts);
  Var concat_vec(const std::vector<Var>& parts);
  Var stack_rows(const std::vector<Var>& rows);
  Var pick(Var a, int flat_index);           // -> [1]

  // Reductions.
  Var mean_rows(Var a);          // [n x d] -> [d]
  Var mean_last(Var a);          // [c x l] -> [c]
  Var sum_all(Var a);            // -> [1]
  Var mean_all(Var a);           // -> [1]

  // Softmax family (last axis; rank 1 or 2; rejects non-finite input).
  Var softmax_last(Var a);
  Var log_softmax_last(Var a);

  // Convolution: x [c x l], w [o x c x k], b [o]; zero padding.
  Var conv1d(Var x, Var w, Var b, int stride, int pad);

  // Compositions.
  Var linear(Var x, Var w, Var b);       // x [n x din], w [din x dout], b [dout]
  Var linear_vec(Var v, Var w, Var b);   // v [din] -> [dout]
  Var attention(Var q, Var k, Var v);    // softmax(q k^T / sqrt(d)) v
  Var nll(Var log_probs, int target);    // -log_probs[target] -> [1]
  Var mse_scalar(Var pred, double target);

  /// Seeds d(loss)=1 and accumulates gradients back to every param leaf.
  /// loss must be a single-element tensor.
  void backward(Var loss);

  const Tensor& val(Var v) const;
  const std::vector<double>& grad_of(Var v) const;
  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Tensor val;
    std::vector<double> grad;   // lazily materialized
    std::function<void(Tape&)> back;
    Tensor* bound = nullptr;
    const char* op = "";
  };

  Var push(Tensor t, const char* op);
  std::vector<double>& acc(int id);          // materialize grad buffer
  const std::vector<double>* gptr(int id) const;
  void check2(Var a, const char* op) const;

  std::vector<Node> nodes_;
  static const std::vector<double> empty_grad_;
};

}  // namespace chronofuse
