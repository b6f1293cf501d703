#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "genn2n/rng.hpp"

namespace genn2n::ad {

// Dense float64 tensor with an optional gradient buffer. Tensor is a cheap
// shared handle; ops below return fresh tensors and (when a Graph is
// supplied and some input requires grad) record a backward closure.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int64_t> shape, bool requires_grad = false);
  static Tensor full(std::vector<int64_t> shape, double value, bool requires_grad = false);
  static Tensor from_data(std::vector<int64_t> shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  // i.i.d. uniform in [lo, hi)
  static Tensor uniform(std::vector<int64_t> shape, double lo, double hi, Rng& rng,
                        bool requires_grad = false);
  // i.i.d. N(0, std^2)
  static Tensor gaussian(std::vector<int64_t> shape, double std, Rng& rng,
                         bool requires_grad = false);

  bool defined() const { return p_ != nullptr; }
  const std::vector<int64_t>& shape() const;
  int64_t size() const;
  int64_t rows() const;  // shape[0] (rank 1 or 2)
  int64_t cols() const;  // shape[1], or 1 for rank-1

  double* data();
  const double* data() const;
  double item() const;  // value of a single-element tensor

  bool requires_grad() const;
  void set_requires_grad(bool v);

  // Gradient buffer, allocated (zeroed) on demand.
  double* grad();
  const double* grad_or_null() const;
  void zero_grad();
  void accumulate_grad(const double* g, int64_t n);

  bool same_storage(const Tensor& other) const { return p_ == other.p_; }

 private:
  struct Impl {
    std::vector<int64_t> shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until touched
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> p_;
  explicit Tensor(std::shared_ptr<Impl> p) : p_(std::move(p)) {}
  static Tensor make(std::vector<int64_t> shape, bool requires_grad);
};

// Reverse-mode tape: an append-only list of op records. Insertion order is
// the topological order; backward visits records in exact reverse insertion
// order. Gradients of op outputs are zeroed at the start of each backward
// pass, so leaf gradients accumulate across repeated calls.
class Graph {
 public:
  void record(Tensor output, std::function<void()> back_fn);
  void backward(const Tensor& loss);
  void clear();
  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor output;
    std::function<void()> back;
  };
  std::vector<Node> nodes_;
};

// ---- op set ----
// Every op validates shapes, computes the value, and registers its backward
// on `g` when g != nullptr and some input requires grad. Pass g = nullptr
// for pure inference. Elementwise binary ops accept equal shapes or a
// [1, n] right operand broadcast over the rows of an [m, n] left operand.

Tensor matmul(Graph* g, const Tensor& a, const Tensor& b);
Tensor add(Graph* g, const Tensor& a, const Tensor& b);
Tensor sub(Graph* g, const Tensor& a, const Tensor& b);
Tensor mul(Graph* g, const Tensor& a, const Tensor& b);
Tensor scale(Graph* g, const Tensor& a, double c);
Tensor add_scalar(Graph* g, const Tensor& a, double c);
Tensor relu(Graph* g, const Tensor& a);       // max(x, 0)
Tensor softplus(Graph* g, const Tensor& a);   // log(1 + e^x), overflow-safe
Tensor sigmoid(Graph* g, const Tensor& a);
Tensor exp(Graph* g, const Tensor& a);
Tensor log(Graph* g, const Tensor& a);        // domain error on x <= 0
Tensor sqrt(Graph* g, const Tensor& a);       // domain error on x < 0
Tensor square(Graph* g, const Tensor& a);
Tensor sum(Graph* g, const Tensor& a);        // all elements -> [1,1]
Tensor mean(Graph* g, const Tensor& a);       // all elements -> [1,1]
Tensor concat_cols(Graph* g, const Tensor& a, const Tensor& b);
Tensor slice_cols(Graph* g, const Tensor& a, int64_t start, int64_t len);
Tensor reshape(Graph* g, const Tensor& a, std::vector<int64_t> new_shape);
Tensor clamp(Graph* g, const Tensor& a, double lo, double hi);
// out[i, :] = a[index[i], :]; backward scatter-adds (duplicates accumulate)
Tensor gather_rows(Graph* g, const Tensor& a, std::vector<int64_t> index);
// Detached copy: same values, no grad, no history.
Tensor detach(const Tensor& a);

// Sum of |x| convenience built from the op set (relu(x) + relu(-x)).
Tensor mean_abs(Graph* g, const Tensor& a);

// ---- optimizer ----

struct AdamState {
  std::vector<std::vector<double>> m, v;
  int64_t t = 0;
};

struct AdamConfig {
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard Adam with bias correction; reads each parameter's grad buffer,
// updates values in place, increments state.t by one.
void adam_step(std::span<Tensor> params, AdamState& state, const AdamConfig& cfg);
void zero_grads(std::span<Tensor> params);

// ---- small-MLP building block ----

struct Linear {
  Tensor w;  // [in, out]
  Tensor b;  // [1, out]
};

Linear make_linear(int64_t in, int64_t out, Rng& rng);
Linear make_linear_zero(int64_t in, int64_t out);
Tensor linear_forward(Graph* g, const Linear& layer, const Tensor& x);
void collect_params(const Linear& layer, std::vector<Tensor>& out);

// Deterministic pairwise-tree reduction used by sum/mean.
double pairwise_sum(const double* x, int64_t n);

std::string shape_str(const std::vector<int64_t>& shape);

}  // namespace genn2n::ad
