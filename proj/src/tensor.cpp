#include "lane/tensor.hpp"

#include <cmath>
#include <cstring>

#include "lane/kernels.hpp"

namespace lane {

namespace {
constexpr std::size_t kBlockDoubles = 1u << 16;

const kernels::Ops& K() { return kernels::active(); }
}  // namespace

std::string Shape::str() const {
  if (is_vector()) return "(" + std::to_string(rows) + ")";
  return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

// ParameterStore -------------------------------------------------------------

Parameter& ParameterStore::add(const std::string& name, Shape shape) {
  if (index_.count(name) != 0) {
    throw ContractError("parameter already exists: " + name);
  }
  index_[name] = items_.size();
  items_.push_back(std::make_unique<Parameter>(name, shape));
  return *items_.back();
}

Parameter& ParameterStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("no such parameter: " + name);
  return *items_[it->second];
}

const Parameter& ParameterStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("no such parameter: " + name);
  return *items_[it->second];
}

bool ParameterStore::contains(const std::string& name) const {
  return index_.count(name) != 0;
}

void ParameterStore::zero_grad() {
  for (auto& p : items_) std::fill(p->grad.begin(), p->grad.end(), 0.0);
}

std::size_t ParameterStore::total_size() const {
  std::size_t n = 0;
  for (const auto& p : items_) n += p->value.size();
  return n;
}

// Tape -----------------------------------------------------------------------

void Tape::reset() {
  nodes_.clear();
  lists_.clear();
  masks_.clear();
  param_nodes_.clear();
  block_idx_ = 0;
  block_used_ = 0;
  backward_done_ = false;
}

double* Tape::arena_alloc(std::size_t n, bool zero) {
  if (n == 0) n = 1;
  while (true) {
    if (block_idx_ == blocks_.size()) {
      blocks_.emplace_back(std::max(kBlockDoubles, n));
    }
    std::vector<double>& blk = blocks_[block_idx_];
    if (block_used_ + n <= blk.size()) {
      double* out = blk.data() + block_used_;
      block_used_ += n;
      if (zero) std::memset(out, 0, n * sizeof(double));
      return out;
    }
    ++block_idx_;
    block_used_ = 0;
  }
}

int Tape::push(Node n) {
  nodes_.push_back(n);
  return static_cast<int>(nodes_.size()) - 1;
}

const Tape::Node& Tape::node(Var v) const {
  if (v.tape != this || v.id < 0 ||
      v.id >= static_cast<int>(nodes_.size())) {
    throw ContractError("variable does not belong to this tape");
  }
  return nodes_[static_cast<std::size_t>(v.id)];
}

Tape::Node& Tape::node(Var v) {
  return const_cast<Node&>(static_cast<const Tape*>(this)->node(v));
}

void Tape::check_same_shape(const char* op, Var a, Var b) const {
  if (!(node(a).shape == node(b).shape)) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     node(a).shape.str() + " vs " + node(b).shape.str());
  }
}

Shape Tape::shape(Var v) const { return node(v).shape; }

std::span<const double> Tape::values(Var v) const {
  const Node& n = node(v);
  return {n.val, static_cast<std::size_t>(n.shape.size())};
}

std::span<const double> Tape::grads(Var v) const {
  const Node& n = node(v);
  return {n.grad, static_cast<std::size_t>(n.shape.size())};
}

double Tape::value(Var v) const {
  const Node& n = node(v);
  if (!n.shape.is_scalar()) {
    throw ContractError("value(): node is not scalar, shape " + n.shape.str());
  }
  return n.val[0];
}

Var Tape::param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return {this, it->second};
  Node n;
  n.op = Op::kLeaf;
  n.shape = p.shape;
  n.val = p.value.data();
  n.grad = p.grad.data();
  n.param = &p;
  int id = push(n);
  param_nodes_[&p] = id;
  return {this, id};
}

Var Tape::input(Shape shape, const double* values) {
  Node n;
  n.op = Op::kInput;
  n.shape = shape;
  const std::size_t sz = static_cast<std::size_t>(shape.size());
  n.val = arena_alloc(sz, false);
  std::memcpy(n.val, values, sz * sizeof(double));
  n.grad = arena_alloc(sz, true);
  return {this, push(n)};
}

Var Tape::input(const std::vector<double>& values) {
  return input({static_cast<int>(values.size()), 1}, values.data());
}

Var Tape::constant(double v) { return input({1, 1}, &v); }

Var lookup_row(Tape& t, Parameter& table, int row) {
  if (row < 0 || row >= table.shape.rows) {
    throw ContractError("lookup: row " + std::to_string(row) +
                        " out of range for " + table.name + " " +
                        table.shape.str());
  }
  Tape::Node n;
  n.op = Op::kLookup;
  n.shape = {table.shape.cols, 1};
  n.aux = row;
  const std::size_t off =
      static_cast<std::size_t>(row) * static_cast<std::size_t>(table.shape.cols);
  n.val = table.value.data() + off;
  n.grad = table.grad.data() + off;
  n.param = &table;
  return {&t, t.push(n)};
}

Var Tape::matvec(Var w, Var x) {
  const Node& nw = node(w);
  const Node& nx = node(x);
  if (!nx.shape.is_vector() || nw.shape.cols != nx.shape.rows) {
    throw ShapeError("matvec: shape mismatch " + nw.shape.str() + " vs " +
                     nx.shape.str());
  }
  Node n;
  n.op = Op::kMatVec;
  n.shape = {nw.shape.rows, 1};
  n.a = w.id;
  n.b = x.id;
  n.val = arena_alloc(static_cast<std::size_t>(n.shape.size()), false);
  n.grad = arena_alloc(static_cast<std::size_t>(n.shape.size()), true);
  K().matvec(n.val, nw.val, nx.val, static_cast<std::size_t>(nw.shape.rows),
             static_cast<std::size_t>(nw.shape.cols));
  return {this, push(n)};
}

namespace {
Shape require_same(const Tape& t, const char* op, Var a, Var b,
                   Shape (*shape_of)(const Tape&, Var)) {
  Shape sa = shape_of(t, a);
  Shape sb = shape_of(t, b);
  if (!(sa == sb)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + sa.str() +
                     " vs " + sb.str());
  }
  return sa;
}
Shape shape_of(const Tape& t, Var v) { return t.shape(v); }
}  // namespace

Var Tape::add(Var a, Var b) {
  Shape s = require_same(*this, "add", a, b, shape_of);
  Node n;
  n.op = Op::kAdd;
  n.shape = s;
  n.a = a.id;
  n.b = b.id;
  n.val = arena_alloc(static_cast<std::size_t>(s.size()), false);
  n.grad = arena_alloc(static_cast<std::size_t>(s.size()), true);
  K().add(n.val, node(a).val, node(b).val, static_cast<std::size_t>(s.size()));
  return {this, push(n)};
}

Var Tape::sub(Var a, Var b) {
  Shape s = require_same(*this, "sub", a, b, shape_of);
  Node n;
  n.op = Op::kSub;
  n.shape = s;
  n.a = a.id;
  n.b = b.id;
  n.val = arena_alloc(static_cast<std::size_t>(s.size()), false);
  n.grad = arena_alloc(static_cast<std::size_t>(s.size()), true);
  K().sub(n.val, node(a).val, node(b).val, static_cast<std::size_t>(s.size()));
  return {this, push(n)};
}

Var Tape::mul(Var a, Var b) {
  Shape s = require_same(*this, "mul", a, b, shape_of);
  Node n;
  n.op = Op::kMul;
  n.shape = s;
  n.a = a.id;
  n.b = b.id;
  n.val = arena_alloc(static_cast<std::size_t>(s.size()), false);
  n.grad = arena_alloc(static_cast<std::size_t>(s.size()), true);
  K().mul(n.val, node(a).val, node(b).val, static_cast<std::size_t>(s.size()));
  return {this, push(n)};
}

Var Tape::concat(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  int total = 0;
  for (Var p : parts) {
    if (!node(p).shape.is_vector()) {
      throw ShapeError("concat: non-vector input " + node(p).shape.str());
    }
    total += node(p).shape.rows;
  }
  Node n;
  n.op = Op::kConcat;
  n.shape = {total, 1};
  n.list = static_cast<int>(lists_.size());
  std::vector<int> ids;
  ids.reserve(parts.size());
  for (Var p : parts) ids.push_back(p.id);
  lists_.push_back(std::move(ids));
  n.val = arena_alloc(static_cast<std::size_t>(total), false);
  n.grad = arena_alloc(static_cast<std::size_t>(total), true);
  std::size_t off = 0;
  for (Var p : parts) {
    const Node& np = node(p);
    std::memcpy(n.val + off, np.val,
                static_cast<std::size_t>(np.shape.rows) * sizeof(double));
    off += static_cast<std::size_t>(np.shape.rows);
  }
  return {this, push(n)};
}

Var Tape::slice(Var v, int start, int len) {
  const Node& nv = node(v);
  if (!nv.shape.is_vector() || start < 0 || len < 1 ||
      start + len > nv.shape.rows) {
    throw ShapeError("slice: range [" + std::to_string(start) + "," +
                     std::to_string(start + len) + ") out of " +
                     nv.shape.str());
  }
  Node n;
  n.op = Op::kSlice;
  n.shape = {len, 1};
  n.a = v.id;
  n.aux = start;
  // Aliases the input buffers: grads written here land in v's grad directly.
  n.val = nv.val + start;
  n.grad = nv.grad + start;
  return {this, push(n)};
}

namespace {
double stable_sigmoid(double x) {
  if (x >= 0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}
}  // namespace

Var Tape::sigmoid(Var v) {
  const Node& nv = node(v);
  Node n;
  n.op = Op::kSigmoid;
  n.shape = nv.shape;
  n.a = v.id;
  const std::size_t sz = static_cast<std::size_t>(nv.shape.size());
  n.val = arena_alloc(sz, false);
  n.grad = arena_alloc(sz, true);
  for (std::size_t i = 0; i < sz; ++i) n.val[i] = stable_sigmoid(nv.val[i]);
  return {this, push(n)};
}

Var Tape::tanh(Var v) {
  const Node& nv = node(v);
  Node n;
  n.op = Op::kTanh;
  n.shape = nv.shape;
  n.a = v.id;
  const std::size_t sz = static_cast<std::size_t>(nv.shape.size());
  n.val = arena_alloc(sz, false);
  n.grad = arena_alloc(sz, true);
  for (std::size_t i = 0; i < sz; ++i) n.val[i] = std::tanh(nv.val[i]);
  return {this, push(n)};
}

Var Tape::softmax(Var v) {
  const Node& nv = node(v);
  if (!nv.shape.is_vector()) {
    throw ShapeError("softmax: expects a vector, got " + nv.shape.str());
  }
  Node n;
  n.op = Op::kSoftmax;
  n.shape = nv.shape;
  n.a = v.id;
  const std::size_t sz = static_cast<std::size_t>(nv.shape.size());
  n.val = arena_alloc(sz, false);
  n.grad = arena_alloc(sz, true);
  double mx = nv.val[0];
  for (std::size_t i = 1; i < sz; ++i) mx = std::max(mx, nv.val[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < sz; ++i) {
    n.val[i] = std::exp(nv.val[i] - mx);
    z += n.val[i];
  }
  for (std::size_t i = 0; i < sz; ++i) n.val[i] /= z;
  return {this, push(n)};
}

Var Tape::masked_softmax(Var v, const std::vector<std::uint8_t>& mask) {
  const Node& nv = node(v);
  if (!nv.shape.is_vector() ||
      mask.size() != static_cast<std::size_t>(nv.shape.rows)) {
    throw ShapeError("masked_softmax: mask size " +
                     std::to_string(mask.size()) + " vs " + nv.shape.str());
  }
  Node n;
  n.op = Op::kMaskedSoftmax;
  n.shape = nv.shape;
  n.a = v.id;
  n.list = static_cast<int>(masks_.size());
  masks_.push_back(mask);
  const std::size_t sz = mask.size();
  n.val = arena_alloc(sz, false);
  n.grad = arena_alloc(sz, true);
  double mx = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < sz; ++i) {
    if (mask[i] && (!any || nv.val[i] > mx)) {
      mx = nv.val[i];
      any = true;
    }
  }
  if (!any) throw ContractError("masked_softmax: empty support");
  double z = 0.0;
  for (std::size_t i = 0; i < sz; ++i) {
    n.val[i] = mask[i] ? std::exp(nv.val[i] - mx) : 0.0;
    z += n.val[i];
  }
  for (std::size_t i = 0; i < sz; ++i) n.val[i] /= z;
  return {this, push(n)};
}

Var Tape::inner(Var a, Var b) {
  Shape s = require_same(*this, "inner", a, b, shape_of);
  if (!s.is_vector()) {
    throw ShapeError("inner: expects vectors, got " + s.str());
  }
  Node n;
  n.op = Op::kInner;
  n.shape = {1, 1};
  n.a = a.id;
  n.b = b.id;
  n.val = arena_alloc(1, false);
  n.grad = arena_alloc(1, true);
  n.val[0] = K().dot(node(a).val, node(b).val,
                     static_cast<std::size_t>(s.size()));
  return {this, push(n)};
}

Var Tape::scale(Var v, double s) {
  const Node& nv = node(v);
  Node n;
  n.op = Op::kScale;
  n.shape = nv.shape;
  n.a = v.id;
  n.c = s;
  const std::size_t sz = static_cast<std::size_t>(nv.shape.size());
  n.val = arena_alloc(sz, false);
  n.grad = arena_alloc(sz, true);
  K().scale(n.val, nv.val, s, sz);
  return {this, push(n)};
}

Var Tape::smul(Var s, Var v) {
  const Node& ns = node(s);
  const Node& nv = node(v);
  if (!ns.shape.is_scalar()) {
    throw ShapeError("smul: first operand must be scalar, got " +
                     ns.shape.str());
  }
  Node n;
  n.op = Op::kSMul;
  n.shape = nv.shape;
  n.a = s.id;
  n.b = v.id;
  const std::size_t sz = static_cast<std::size_t>(nv.shape.size());
  n.val = arena_alloc(sz, false);
  n.grad = arena_alloc(sz, true);
  K().scale(n.val, nv.val, ns.val[0], sz);
  return {this, push(n)};
}

Var Tape::log(Var v) {
  const Node& nv = node(v);
  Node n;
  n.op = Op::kLog;
  n.shape = nv.shape;
  n.a = v.id;
  const std::size_t sz = static_cast<std::size_t>(nv.shape.size());
  n.val = arena_alloc(sz, false);
  n.grad = arena_alloc(sz, true);
  for (std::size_t i = 0; i < sz; ++i) n.val[i] = std::log(nv.val[i]);
  return {this, push(n)};
}

Var Tape::sum(Var v) {
  const Node& nv = node(v);
  Node n;
  n.op = Op::kSum;
  n.shape = {1, 1};
  n.a = v.id;
  n.val = arena_alloc(1, false);
  n.grad = arena_alloc(1, true);
  double acc = 0.0;
  const std::size_t sz = static_cast<std::size_t>(nv.shape.size());
  for (std::size_t i = 0; i < sz; ++i) acc += nv.val[i];
  n.val[0] = acc;
  return {this, push(n)};
}

Var Tape::neg(Var v) {
  const Node& nv = node(v);
  Node n;
  n.op = Op::kNeg;
  n.shape = nv.shape;
  n.a = v.id;
  const std::size_t sz = static_cast<std::size_t>(nv.shape.size());
  n.val = arena_alloc(sz, false);
  n.grad = arena_alloc(sz, true);
  K().scale(n.val, nv.val, -1.0, sz);
  return {this, push(n)};
}

Var Tape::xlogx(Var v) {
  const Node& nv = node(v);
  Node n;
  n.op = Op::kXLogX;
  n.shape = nv.shape;
  n.a = v.id;
  const std::size_t sz = static_cast<std::size_t>(nv.shape.size());
  n.val = arena_alloc(sz, false);
  n.grad = arena_alloc(sz, true);
  for (std::size_t i = 0; i < sz; ++i) {
    n.val[i] = nv.val[i] > 0.0 ? nv.val[i] * std::log(nv.val[i]) : 0.0;
  }
  return {this, push(n)};
}

void Tape::backward(Var loss) {
  const Node& nl = node(loss);
  if (!nl.shape.is_scalar()) {
    throw ContractError("backward: loss must be scalar, got " +
                        nl.shape.str());
  }
  if (backward_done_) {
    throw ContractError("backward: already called on this tape");
  }
  backward_done_ = true;
  nl.grad[0] += 1.0;

  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    const std::size_t sz = static_cast<std::size_t>(n.shape.size());
    switch (n.op) {
      case Op::kLeaf:
      case Op::kInput:
      case Op::kLookup:
      case Op::kSlice:
        break;  // alias or sink; nothing to propagate
      case Op::kMatVec: {
        Node& w = nodes_[static_cast<std::size_t>(n.a)];
        Node& x = nodes_[static_cast<std::size_t>(n.b)];
        const std::size_t rows = static_cast<std::size_t>(w.shape.rows);
        const std::size_t cols = static_cast<std::size_t>(w.shape.cols);
        K().outer_acc(w.grad, n.grad, x.val, rows, cols);
        K().matvec_t_acc(x.grad, w.val, n.grad, rows, cols);
        break;
      }
      case Op::kAdd: {
        K().axpy(nodes_[static_cast<std::size_t>(n.a)].grad, 1.0, n.grad, sz);
        K().axpy(nodes_[static_cast<std::size_t>(n.b)].grad, 1.0, n.grad, sz);
        break;
      }
      case Op::kSub: {
        K().axpy(nodes_[static_cast<std::size_t>(n.a)].grad, 1.0, n.grad, sz);
        K().axpy(nodes_[static_cast<std::size_t>(n.b)].grad, -1.0, n.grad, sz);
        break;
      }
      case Op::kMul: {
        Node& a = nodes_[static_cast<std::size_t>(n.a)];
        Node& b = nodes_[static_cast<std::size_t>(n.b)];
        for (std::size_t j = 0; j < sz; ++j) {
          a.grad[j] += n.grad[j] * b.val[j];
          b.grad[j] += n.grad[j] * a.val[j];
        }
        break;
      }
      case Op::kConcat: {
        std::size_t off = 0;
        for (int pid : lists_[static_cast<std::size_t>(n.list)]) {
          Node& p = nodes_[static_cast<std::size_t>(pid)];
          const std::size_t psz = static_cast<std::size_t>(p.shape.size());
          K().axpy(p.grad, 1.0, n.grad + off, psz);
          off += psz;
        }
        break;
      }
      case Op::kSigmoid: {
        Node& a = nodes_[static_cast<std::size_t>(n.a)];
        for (std::size_t j = 0; j < sz; ++j) {
          a.grad[j] += n.grad[j] * n.val[j] * (1.0 - n.val[j]);
        }
        break;
      }
      case Op::kTanh: {
        Node& a = nodes_[static_cast<std::size_t>(n.a)];
        for (std::size_t j = 0; j < sz; ++j) {
          a.grad[j] += n.grad[j] * (1.0 - n.val[j] * n.val[j]);
        }
        break;
      }
      case Op::kSoftmax:
      case Op::kMaskedSoftmax: {
        // Masked entries have value exactly 0, so the common formula also
        // zeroes their contribution.
        Node& a = nodes_[static_cast<std::size_t>(n.a)];
        const double s = K().dot(n.grad, n.val, sz);
        for (std::size_t j = 0; j < sz; ++j) {
          a.grad[j] += n.val[j] * (n.grad[j] - s);
        }
        break;
      }
      case Op::kInner: {
        Node& a = nodes_[static_cast<std::size_t>(n.a)];
        Node& b = nodes_[static_cast<std::size_t>(n.b)];
        const std::size_t vsz = static_cast<std::size_t>(a.shape.size());
        K().axpy(a.grad, n.grad[0], b.val, vsz);
        K().axpy(b.grad, n.grad[0], a.val, vsz);
        break;
      }
      case Op::kScale: {
        K().axpy(nodes_[static_cast<std::size_t>(n.a)].grad, n.c, n.grad, sz);
        break;
      }
      case Op::kSMul: {
        Node& s = nodes_[static_cast<std::size_t>(n.a)];
        Node& v = nodes_[static_cast<std::size_t>(n.b)];
        s.grad[0] += K().dot(n.grad, v.val, sz);
        K().axpy(v.grad, s.val[0], n.grad, sz);
        break;
      }
      case Op::kLog: {
        Node& a = nodes_[static_cast<std::size_t>(n.a)];
        for (std::size_t j = 0; j < sz; ++j) {
          a.grad[j] += n.grad[j] / a.val[j];
        }
        break;
      }
      case Op::kSum: {
        Node& a = nodes_[static_cast<std::size_t>(n.a)];
        const std::size_t asz = static_cast<std::size_t>(a.shape.size());
        for (std::size_t j = 0; j < asz; ++j) a.grad[j] += n.grad[0];
        break;
      }
      case Op::kNeg: {
        K().axpy(nodes_[static_cast<std::size_t>(n.a)].grad, -1.0, n.grad, sz);
        break;
      }
      case Op::kXLogX: {
        Node& a = nodes_[static_cast<std::size_t>(n.a)];
        for (std::size_t j = 0; j < sz; ++j) {
          if (a.val[j] > 0.0) {
            a.grad[j] += n.grad[j] * (std::log(a.val[j]) + 1.0);
          }
        }
        break;
      }
    }
  }
}

}  // namespace lane
