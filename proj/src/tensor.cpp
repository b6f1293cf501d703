#include "genn2n/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include "genn2n/error.hpp"
#include "genn2n/parallel.hpp"

namespace genn2n::ad {

namespace {

int64_t numel(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

void check_shape_valid(const std::vector<int64_t>& shape) {
  if (shape.empty()) fail(ErrorKind::shape, "tensor shape must have rank >= 1");
  for (int64_t d : shape) {
    if (d <= 0) fail(ErrorKind::shape, "tensor dimensions must be positive, got " + shape_str(shape));
  }
}

[[noreturn]] void shape_mismatch(const char* op, const std::vector<int64_t>& a,
                                 const std::vector<int64_t>& b) {
  fail(ErrorKind::shape,
       std::string(op) + ": shape mismatch between " + shape_str(a) + " and " + shape_str(b));
}

// Row-broadcast classification for elementwise binary ops: equal shapes, or
// b = [1, n] against a = [m, n].
bool broadcast_rows(const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return false;
  if (b.shape().size() == 2 && b.shape()[0] == 1 && a.shape().size() == 2 &&
      a.shape()[1] == b.shape()[1]) {
    return true;
  }
  shape_mismatch("elementwise", a.shape(), b.shape());
}

constexpr int64_t kParallelCutoff = 1 << 14;

template <typename F>
void elementwise_loop(int64_t n, F&& f) {
  if (n >= kParallelCutoff) {
    parallel_for(n, [&](int64_t lo, int64_t hi) {
      for (int64_t i = lo; i < hi; ++i) f(i);
    });
  } else {
    for (int64_t i = 0; i < n; ++i) f(i);
  }
}

// C[m,n] = A[m,k] * B[k,n]; ikj order with 4-wide k unrolling. Each output
// row is written by exactly one worker, so threading does not change the
// accumulation order.
void matmul_nn(const double* A, const double* B, double* C, int64_t m, int64_t k, int64_t n) {
  parallel_for(m, [&](int64_t lo, int64_t hi) {
    for (int64_t i = lo; i < hi; ++i) {
      double* c = C + i * n;
      std::memset(c, 0, sizeof(double) * static_cast<size_t>(n));
      const double* a = A + i * k;
      int64_t kk = 0;
      for (; kk + 4 <= k; kk += 4) {
        const double a0 = a[kk], a1 = a[kk + 1], a2 = a[kk + 2], a3 = a[kk + 3];
        const double* b0 = B + kk * n;
        const double* b1 = b0 + n;
        const double* b2 = b1 + n;
        const double* b3 = b2 + n;
        for (int64_t j = 0; j < n; ++j) c[j] += a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
      }
      for (; kk < k; ++kk) {
        const double av = a[kk];
        const double* b = B + kk * n;
        for (int64_t j = 0; j < n; ++j) c[j] += av * b[j];
      }
    }
  });
}

// C[m,n] = A[m,k] * B[n,k]^T
void matmul_nt(const double* A, const double* B, double* C, int64_t m, int64_t k, int64_t n) {
  parallel_for(m, [&](int64_t lo, int64_t hi) {
    for (int64_t i = lo; i < hi; ++i) {
      const double* a = A + i * k;
      double* c = C + i * n;
      int64_t j = 0;
      for (; j + 4 <= n; j += 4) {
        const double* b0 = B + j * k;
        const double* b1 = b0 + k;
        const double* b2 = b1 + k;
        const double* b3 = b2 + k;
        double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
        for (int64_t kk = 0; kk < k; ++kk) {
          const double av = a[kk];
          s0 += av * b0[kk];
          s1 += av * b1[kk];
          s2 += av * b2[kk];
          s3 += av * b3[kk];
        }
        c[j] = s0;
        c[j + 1] = s1;
        c[j + 2] = s2;
        c[j + 3] = s3;
      }
      for (; j < n; ++j) {
        const double* b = B + j * k;
        double acc = 0.0;
        for (int64_t kk = 0; kk < k; ++kk) acc += a[kk] * b[kk];
        c[j] = acc;
      }
    }
  });
}

// C[k,n] = A[m,k]^T * B[m,n]; parallel over rows of C.
void matmul_tn(const double* A, const double* B, double* C, int64_t m, int64_t k, int64_t n) {
  parallel_for(k, [&](int64_t lo, int64_t hi) {
    for (int64_t kk = lo; kk < hi; ++kk) {
      double* c = C + kk * n;
      std::memset(c, 0, sizeof(double) * static_cast<size_t>(n));
      int64_t i = 0;
      for (; i + 4 <= m; i += 4) {
        const double a0 = A[i * k + kk], a1 = A[(i + 1) * k + kk];
        const double a2 = A[(i + 2) * k + kk], a3 = A[(i + 3) * k + kk];
        const double* b0 = B + i * n;
        const double* b1 = b0 + n;
        const double* b2 = b1 + n;
        const double* b3 = b2 + n;
        for (int64_t j = 0; j < n; ++j) c[j] += a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
      }
      for (; i < m; ++i) {
        const double av = A[i * k + kk];
        const double* b = B + i * n;
        for (int64_t j = 0; j < n; ++j) c[j] += av * b[j];
      }
    }
  });
}

}  // namespace

std::string shape_str(const std::vector<int64_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << "]";
  return os.str();
}

double pairwise_sum(const double* x, int64_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const int64_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

// ---- Tensor ----

Tensor Tensor::make(std::vector<int64_t> shape, bool requires_grad) {
  check_shape_valid(shape);
  auto impl = std::make_shared<Impl>();
  impl->data.assign(static_cast<size_t>(numel(shape)), 0.0);
  impl->shape = std::move(shape);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::zeros(std::vector<int64_t> shape, bool requires_grad) {
  return make(std::move(shape), requires_grad);
}

Tensor Tensor::full(std::vector<int64_t> shape, double value, bool requires_grad) {
  Tensor t = make(std::move(shape), requires_grad);
  std::fill(t.p_->data.begin(), t.p_->data.end(), value);
  return t;
}

Tensor Tensor::from_data(std::vector<int64_t> shape, std::vector<double> data,
                         bool requires_grad) {
  check_shape_valid(shape);
  if (numel(shape) != static_cast<int64_t>(data.size())) {
    fail(ErrorKind::shape, "from_data: " + shape_str(shape) + " does not hold " +
                               std::to_string(data.size()) + " values");
  }
  auto impl = std::make_shared<Impl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_data({1, 1}, {value}, requires_grad);
}

Tensor Tensor::uniform(std::vector<int64_t> shape, double lo, double hi, Rng& rng,
                       bool requires_grad) {
  Tensor t = make(std::move(shape), requires_grad);
  for (auto& v : t.p_->data) v = rng.uniform(lo, hi);
  return t;
}

Tensor Tensor::gaussian(std::vector<int64_t> shape, double std, Rng& rng, bool requires_grad) {
  Tensor t = make(std::move(shape), requires_grad);
  for (auto& v : t.p_->data) v = std * rng.gaussian();
  return t;
}

const std::vector<int64_t>& Tensor::shape() const { return p_->shape; }
int64_t Tensor::size() const { return static_cast<int64_t>(p_->data.size()); }

int64_t Tensor::rows() const { return p_->shape[0]; }

int64_t Tensor::cols() const {
  return p_->shape.size() >= 2 ? p_->shape[1] : 1;
}

double* Tensor::data() { return p_->data.data(); }
const double* Tensor::data() const { return p_->data.data(); }

double Tensor::item() const {
  if (size() != 1) fail(ErrorKind::shape, "item(): tensor has " + std::to_string(size()) + " elements");
  return p_->data[0];
}

bool Tensor::requires_grad() const { return p_->requires_grad; }
void Tensor::set_requires_grad(bool v) { p_->requires_grad = v; }

double* Tensor::grad() {
  if (p_->grad.empty()) p_->grad.assign(p_->data.size(), 0.0);
  return p_->grad.data();
}

const double* Tensor::grad_or_null() const {
  return p_->grad.empty() ? nullptr : p_->grad.data();
}

void Tensor::zero_grad() {
  if (!p_->grad.empty()) std::fill(p_->grad.begin(), p_->grad.end(), 0.0);
}

void Tensor::accumulate_grad(const double* g, int64_t n) {
  double* dst = grad();
  for (int64_t i = 0; i < n; ++i) dst[i] += g[i];
}

// ---- Graph ----

void Graph::record(Tensor output, std::function<void()> back_fn) {
  nodes_.push_back(Node{std::move(output), std::move(back_fn)});
}

void Graph::backward(const Tensor& loss) {
  if (loss.size() != 1) {
    fail(ErrorKind::shape, "backward: loss must be scalar, got " + shape_str(loss.shape()));
  }
  // Zero all op-output grads so a repeated backward recomputes intermediate
  // flows from scratch; leaves are never zeroed here and accumulate.
  for (auto& node : nodes_) node.output.zero_grad();
  Tensor seed = loss;
  seed.grad()[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->back) it->back();
  }
}

void Graph::clear() { nodes_.clear(); }

// ---- op helpers ----

namespace {

bool track(Graph* g, std::initializer_list<const Tensor*> inputs) {
  if (!g) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

// Accumulate dOut (shape of `a`, possibly row-broadcast from `b`) into b.
void reduce_rows_into(Tensor& b, const double* gfull, int64_t m, int64_t n) {
  double* gb = b.grad();
  for (int64_t i = 0; i < m; ++i) {
    const double* row = gfull + i * n;
    for (int64_t j = 0; j < n; ++j) gb[j] += row[j];
  }
}

template <typename Fwd, typename Bwd>
Tensor unary_op(Graph* g, const Tensor& a, Fwd&& fwd, Bwd&& dfn) {
  Tensor out = Tensor::zeros(a.shape());
  const double* x = a.data();
  double* y = out.data();
  const int64_t n = a.size();
  elementwise_loop(n, [&](int64_t i) { y[i] = fwd(x[i]); });
  if (track(g, {&a})) {
    out.set_requires_grad(true);
    Tensor ac = a, oc = out;
    g->record(out, [ac, oc, dfn]() mutable {
      const double* go = oc.grad_or_null();
      if (!go) return;
      const double* x = ac.data();
      const double* y = oc.data();
      double* ga = ac.grad();
      const int64_t n = ac.size();
      for (int64_t i = 0; i < n; ++i) ga[i] += go[i] * dfn(x[i], y[i]);
    });
  }
  return out;
}

}  // namespace

// ---- ops ----

Tensor matmul(Graph* g, const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0]) {
    shape_mismatch("matmul", a.shape(), b.shape());
  }
  const int64_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  Tensor out = Tensor::zeros({m, n});
  matmul_nn(a.data(), b.data(), out.data(), m, k, n);
  if (track(g, {&a, &b})) {
    out.set_requires_grad(true);
    Tensor ac = a, bc = b, oc = out;
    g->record(out, [ac, bc, oc, m, k, n]() mutable {
      const double* go = oc.grad_or_null();
      if (!go) return;
      if (ac.requires_grad()) {
        std::vector<double> da(static_cast<size_t>(m * k));
        matmul_nt(go, bc.data(), da.data(), m, n, k);  // dA = dC * B^T
        ac.accumulate_grad(da.data(), m * k);
      }
      if (bc.requires_grad()) {
        std::vector<double> db(static_cast<size_t>(k * n));
        matmul_tn(ac.data(), go, db.data(), m, k, n);  // dB = A^T * dC
        bc.accumulate_grad(db.data(), k * n);
      }
    });
  }
  return out;
}

namespace {

enum class BinKind { add, sub, mul };

Tensor binary_op(Graph* g, const Tensor& a, const Tensor& b, BinKind kind) {
  const bool bcast = broadcast_rows(a, b);
  const int64_t n = a.size();
  const int64_t cols_n = bcast ? a.shape()[1] : 0;
  Tensor out = Tensor::zeros(a.shape());
  const double* xa = a.data();
  const double* xb = b.data();
  double* y = out.data();
  auto rhs = [&](int64_t i) { return bcast ? xb[i % cols_n] : xb[i]; };
  switch (kind) {
    case BinKind::add:
      elementwise_loop(n, [&](int64_t i) { y[i] = xa[i] + rhs(i); });
      break;
    case BinKind::sub:
      elementwise_loop(n, [&](int64_t i) { y[i] = xa[i] - rhs(i); });
      break;
    case BinKind::mul:
      elementwise_loop(n, [&](int64_t i) { y[i] = xa[i] * rhs(i); });
      break;
  }
  if (track(g, {&a, &b})) {
    out.set_requires_grad(true);
    Tensor ac = a, bc = b, oc = out;
    g->record(out, [ac, bc, oc, kind, bcast]() mutable {
      const double* go = oc.grad_or_null();
      if (!go) return;
      const int64_t n = ac.size();
      const int64_t m = ac.shape()[0];
      const int64_t cn = bcast ? ac.shape()[1] : 0;
      if (ac.requires_grad()) {
        double* ga = ac.grad();
        if (kind == BinKind::mul) {
          const double* xb = bc.data();
          for (int64_t i = 0; i < n; ++i) ga[i] += go[i] * (bcast ? xb[i % cn] : xb[i]);
        } else {
          for (int64_t i = 0; i < n; ++i) ga[i] += go[i];
        }
      }
      if (bc.requires_grad()) {
        if (kind == BinKind::mul) {
          std::vector<double> tmp(static_cast<size_t>(n));
          const double* xa = ac.data();
          for (int64_t i = 0; i < n; ++i) tmp[i] = go[i] * xa[i];
          if (bcast) {
            reduce_rows_into(bc, tmp.data(), m, cn);
          } else {
            bc.accumulate_grad(tmp.data(), n);
          }
        } else {
          const double sgn = (kind == BinKind::sub) ? -1.0 : 1.0;
          if (bcast) {
            double* gb = bc.grad();
            for (int64_t i = 0; i < n; ++i) gb[i % cn] += sgn * go[i];
          } else {
            double* gb = bc.grad();
            for (int64_t i = 0; i < n; ++i) gb[i] += sgn * go[i];
          }
        }
      }
    });
  }
  return out;
}

}  // namespace

Tensor add(Graph* g, const Tensor& a, const Tensor& b) { return binary_op(g, a, b, BinKind::add); }
Tensor sub(Graph* g, const Tensor& a, const Tensor& b) { return binary_op(g, a, b, BinKind::sub); }
Tensor mul(Graph* g, const Tensor& a, const Tensor& b) { return binary_op(g, a, b, BinKind::mul); }

Tensor scale(Graph* g, const Tensor& a, double c) {
  return unary_op(g, a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Tensor add_scalar(Graph* g, const Tensor& a, double c) {
  return unary_op(g, a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Tensor relu(Graph* g, const Tensor& a) {
  return unary_op(g, a, [](double x) { return x > 0.0 ? x : 0.0; },
                  [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor softplus(Graph* g, const Tensor& a) {
  auto fwd = [](double x) {
    // log(1+e^x) = max(x,0) + log1p(e^{-|x|})
    return (x > 0.0 ? x : 0.0) + std::log1p(std::exp(-std::abs(x)));
  };
  return unary_op(g, a, fwd, [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

Tensor sigmoid(Graph* g, const Tensor& a) {
  auto fwd = [](double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  };
  return unary_op(g, a, fwd, [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(Graph* g, const Tensor& a) {
  return unary_op(g, a, [](double x) { return std::exp(x); },
                  [](double, double y) { return y; });
}

Tensor log(Graph* g, const Tensor& a) {
  const double* x = a.data();
  for (int64_t i = 0; i < a.size(); ++i) {
    if (x[i] <= 0.0) {
      fail(ErrorKind::domain, "log: non-positive input " + std::to_string(x[i]) +
                                  " at flat index " + std::to_string(i));
    }
  }
  return unary_op(g, a, [](double v) { return std::log(v); },
                  [](double v, double) { return 1.0 / v; });
}

Tensor sqrt(Graph* g, const Tensor& a) {
  const double* x = a.data();
  for (int64_t i = 0; i < a.size(); ++i) {
    if (x[i] < 0.0) {
      fail(ErrorKind::domain, "sqrt: negative input " + std::to_string(x[i]) +
                                  " at flat index " + std::to_string(i));
    }
  }
  return unary_op(g, a, [](double v) { return std::sqrt(v); },
                  [](double, double y) { return 0.5 / y; });
}

Tensor square(Graph* g, const Tensor& a) {
  return unary_op(g, a, [](double x) { return x * x; },
                  [](double x, double) { return 2.0 * x; });
}

namespace {

Tensor reduce_all(Graph* g, const Tensor& a, bool take_mean) {
  const int64_t n = a.size();
  const double s = pairwise_sum(a.data(), n);
  Tensor out = Tensor::scalar(take_mean ? s / static_cast<double>(n) : s);
  if (track(g, {&a})) {
    out.set_requires_grad(true);
    Tensor ac = a, oc = out;
    const double w = take_mean ? 1.0 / static_cast<double>(n) : 1.0;
    g->record(out, [ac, oc, w]() mutable {
      const double* go = oc.grad_or_null();
      if (!go) return;
      const double gv = go[0] * w;
      double* ga = ac.grad();
      const int64_t n = ac.size();
      for (int64_t i = 0; i < n; ++i) ga[i] += gv;
    });
  }
  return out;
}

}  // namespace

Tensor sum(Graph* g, const Tensor& a) { return reduce_all(g, a, false); }
Tensor mean(Graph* g, const Tensor& a) { return reduce_all(g, a, true); }

Tensor concat_cols(Graph* g, const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[0] != b.shape()[0]) {
    shape_mismatch("concat_cols", a.shape(), b.shape());
  }
  const int64_t m = a.shape()[0], na = a.shape()[1], nb = b.shape()[1];
  Tensor out = Tensor::zeros({m, na + nb});
  double* y = out.data();
  const double* xa = a.data();
  const double* xb = b.data();
  for (int64_t i = 0; i < m; ++i) {
    std::memcpy(y + i * (na + nb), xa + i * na, sizeof(double) * static_cast<size_t>(na));
    std::memcpy(y + i * (na + nb) + na, xb + i * nb, sizeof(double) * static_cast<size_t>(nb));
  }
  if (track(g, {&a, &b})) {
    out.set_requires_grad(true);
    Tensor ac = a, bc = b, oc = out;
    g->record(out, [ac, bc, oc, m, na, nb]() mutable {
      const double* go = oc.grad_or_null();
      if (!go) return;
      if (ac.requires_grad()) {
        double* ga = ac.grad();
        for (int64_t i = 0; i < m; ++i)
          for (int64_t j = 0; j < na; ++j) ga[i * na + j] += go[i * (na + nb) + j];
      }
      if (bc.requires_grad()) {
        double* gb = bc.grad();
        for (int64_t i = 0; i < m; ++i)
          for (int64_t j = 0; j < nb; ++j) gb[i * nb + j] += go[i * (na + nb) + na + j];
      }
    });
  }
  return out;
}

Tensor slice_cols(Graph* g, const Tensor& a, int64_t start, int64_t len) {
  if (a.shape().size() != 2) fail(ErrorKind::shape, "slice_cols: rank-2 tensor required");
  const int64_t m = a.shape()[0], n = a.shape()[1];
  if (start < 0 || len <= 0 || start + len > n) {
    fail(ErrorKind::shape, "slice_cols: range [" + std::to_string(start) + ", " +
                               std::to_string(start + len) + ") out of " + shape_str(a.shape()));
  }
  Tensor out = Tensor::zeros({m, len});
  double* y = out.data();
  const double* x = a.data();
  for (int64_t i = 0; i < m; ++i) {
    std::memcpy(y + i * len, x + i * n + start, sizeof(double) * static_cast<size_t>(len));
  }
  if (track(g, {&a})) {
    out.set_requires_grad(true);
    Tensor ac = a, oc = out;
    g->record(out, [ac, oc, m, n, start, len]() mutable {
      const double* go = oc.grad_or_null();
      if (!go) return;
      double* ga = ac.grad();
      for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < len; ++j) ga[i * n + start + j] += go[i * len + j];
    });
  }
  return out;
}

Tensor reshape(Graph* g, const Tensor& a, std::vector<int64_t> new_shape) {
  check_shape_valid(new_shape);
  if (numel(new_shape) != a.size()) {
    shape_mismatch("reshape", a.shape(), new_shape);
  }
  Tensor out = Tensor::from_data(std::move(new_shape),
                                 std::vector<double>(a.data(), a.data() + a.size()));
  if (track(g, {&a})) {
    out.set_requires_grad(true);
    Tensor ac = a, oc = out;
    g->record(out, [ac, oc]() mutable {
      const double* go = oc.grad_or_null();
      if (!go) return;
      ac.accumulate_grad(go, ac.size());
    });
  }
  return out;
}

Tensor clamp(Graph* g, const Tensor& a, double lo, double hi) {
  if (lo > hi) fail(ErrorKind::domain, "clamp: lo > hi");
  return unary_op(g, a, [lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); },
                  [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Tensor gather_rows(Graph* g, const Tensor& a, std::vector<int64_t> index) {
  if (a.shape().size() != 2) fail(ErrorKind::shape, "gather_rows: rank-2 tensor required");
  const int64_t m = a.shape()[0], n = a.shape()[1];
  const int64_t r = static_cast<int64_t>(index.size());
  if (r == 0) fail(ErrorKind::shape, "gather_rows: empty index");
  for (int64_t i : index) {
    if (i < 0 || i >= m) {
      fail(ErrorKind::shape, "gather_rows: index " + std::to_string(i) + " outside " +
                                 shape_str(a.shape()));
    }
  }
  Tensor out = Tensor::zeros({r, n});
  double* y = out.data();
  const double* x = a.data();
  for (int64_t i = 0; i < r; ++i) {
    std::memcpy(y + i * n, x + index[i] * n, sizeof(double) * static_cast<size_t>(n));
  }
  if (track(g, {&a})) {
    out.set_requires_grad(true);
    Tensor ac = a, oc = out;
    auto idx = std::make_shared<std::vector<int64_t>>(std::move(index));
    g->record(out, [ac, oc, idx, n, r]() mutable {
      const double* go = oc.grad_or_null();
      if (!go) return;
      double* ga = ac.grad();
      // sequential scatter-add: duplicate indices accumulate deterministically
      for (int64_t i = 0; i < r; ++i) {
        double* dst = ga + (*idx)[i] * n;
        const double* src = go + i * n;
        for (int64_t j = 0; j < n; ++j) dst[j] += src[j];
      }
    });
  }
  return out;
}

Tensor detach(const Tensor& a) {
  return Tensor::from_data(a.shape(), std::vector<double>(a.data(), a.data() + a.size()));
}

Tensor mean_abs(Graph* g, const Tensor& a) {
  Tensor pos = relu(g, a);
  Tensor neg = relu(g, scale(g, a, -1.0));
  return mean(g, add(g, pos, neg));
}

// ---- Adam ----

void adam_step(std::span<Tensor> params, AdamState& state, const AdamConfig& cfg) {
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (size_t p = 0; p < params.size(); ++p) {
      state.m[p].assign(static_cast<size_t>(params[p].size()), 0.0);
      state.v[p].assign(static_cast<size_t>(params[p].size()), 0.0);
    }
  }
  if (state.m.size() != params.size()) {
    fail(ErrorKind::shape, "adam_step: state holds " + std::to_string(state.m.size()) +
                               " slots for " + std::to_string(params.size()) + " params");
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (size_t p = 0; p < params.size(); ++p) {
    Tensor& t = params[p];
    const int64_t n = t.size();
    if (static_cast<int64_t>(state.m[p].size()) != n) {
      fail(ErrorKind::shape, "adam_step: param " + std::to_string(p) + " size changed");
    }
    const double* grad = t.grad_or_null();
    if (!grad) continue;  // no gradient contribution this step
    double* m = state.m[p].data();
    double* v = state.v[p].data();
    double* x = t.data();
    for (int64_t i = 0; i < n; ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
      const double mh = m[i] / bc1;
      const double vh = v[i] / bc2;
      x[i] -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
    }
  }
}

void zero_grads(std::span<Tensor> params) {
  for (auto& p : params) p.zero_grad();
}

// ---- Linear ----

Linear make_linear(int64_t in, int64_t out, Rng& rng) {
  // He-style fan-in scaling; fine for the relu MLPs used throughout.
  const double bound = std::sqrt(2.0 / static_cast<double>(in));
  Linear layer;
  layer.w = Tensor::gaussian({in, out}, bound, rng, true);
  layer.b = Tensor::zeros({1, out}, true);
  return layer;
}

Linear make_linear_zero(int64_t in, int64_t out) {
  Linear layer;
  layer.w = Tensor::zeros({in, out}, true);
  layer.b = Tensor::zeros({1, out}, true);
  return layer;
}

Tensor linear_forward(Graph* g, const Linear& layer, const Tensor& x) {
  return add(g, matmul(g, x, layer.w), layer.b);
}

void collect_params(const Linear& layer, std::vector<Tensor>& out) {
  out.push_back(layer.w);
  out.push_back(layer.b);
}

}  // namespace genn2n::ad
