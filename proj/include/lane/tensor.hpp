#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

// Minimal dense reverse-mode autodiff over 64-bit floats. Values are vectors
// (n x 1), matrices (rows x cols, row-major) or scalars (1 x 1). A Tape
// records the forward pass; backward() walks it once in reverse and
// accumulates gradients into every reachable learnable leaf. Tapes are
// single-threaded; parameters may be shared read-only across tapes, with
// gradient accumulation serialized by the caller.
namespace lane {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeError : Error {
  using Error::Error;
};
struct ContractError : Error {
  using Error::Error;
};

struct Shape {
  int rows = 0;
  int cols = 1;
  int size() const { return rows * cols; }
  bool is_vector() const { return cols == 1; }
  bool is_scalar() const { return rows == 1 && cols == 1; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

// Named learnable array. Gradient buffer always exists and matches the value
// shape; it is the accumulation target for every tape that uses the
// parameter.
struct Parameter {
  std::string name;
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;

  Parameter(std::string n, Shape s)
      : name(std::move(n)),
        shape(s),
        value(static_cast<std::size_t>(s.size()), 0.0),
        grad(static_cast<std::size_t>(s.size()), 0.0) {}
};

class ParameterStore {
 public:
  Parameter& add(const std::string& name, Shape shape);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const;
  void zero_grad();
  std::size_t total_size() const;

  // Creation order, which fixes initialization and checkpoint order.
  const std::vector<std::unique_ptr<Parameter>>& items() const {
    return items_;
  }

 private:
  std::vector<std::unique_ptr<Parameter>> items_;
  std::map<std::string, std::size_t> index_;
};

class Tape;

// Lightweight handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
  bool valid() const { return tape != nullptr && id >= 0; }
};

enum class Op : std::uint8_t {
  kLeaf,
  kInput,
  kLookup,
  kMatVec,
  kAdd,
  kSub,
  kMul,
  kConcat,
  kSlice,
  kSigmoid,
  kTanh,
  kSoftmax,
  kMaskedSoftmax,
  kInner,
  kScale,
  kSMul,
  kLog,
  kSum,
  kNeg,
  kXLogX,
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Drops all nodes but keeps allocated capacity for reuse.
  void reset();

  std::size_t node_count() const { return nodes_.size(); }

  // Leaves ----------------------------------------------------------------
  // Learnable leaf aliasing the parameter's value/grad storage. One node per
  // parameter per tape.
  Var param(Parameter& p);
  // Non-learnable input; values are copied onto the tape.
  Var input(Shape shape, const double* values);
  Var input(const std::vector<double>& values);
  Var constant(double v);

  // Primitive ops ----------------------------------------------------------
  Var matvec(Var w, Var x);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var concat(std::span<const Var> parts);
  Var slice(Var v, int start, int len);
  Var sigmoid(Var v);
  Var tanh(Var v);
  Var softmax(Var v);
  // Softmax restricted to mask[i] != 0; masked entries get probability
  // exactly zero and receive no gradient.
  Var masked_softmax(Var v, const std::vector<std::uint8_t>& mask);
  Var inner(Var a, Var b);
  Var scale(Var v, double s);
  // Scalar node times tensor node.
  Var smul(Var s, Var v);
  Var log(Var v);
  Var sum(Var v);
  Var neg(Var v);
  // Elementwise x*log(x) with 0 at x=0 (entropy building block).
  Var xlogx(Var v);

  // Access -----------------------------------------------------------------
  Shape shape(Var v) const;
  std::span<const double> values(Var v) const;
  std::span<const double> grads(Var v) const;
  double value(Var v) const;  // scalar nodes

  // Accumulates gradients of `loss` (scalar) into every reachable learnable
  // leaf. May be called once per recording; reset() re-arms it.
  void backward(Var loss);

 private:
  struct Node {
    Op op;
    Shape shape;
    int a = -1;
    int b = -1;
    int list = -1;   // concat input list / masked-softmax mask
    int aux = 0;     // slice start / lookup row
    double c = 0.0;  // scale factor
    double* val = nullptr;
    double* grad = nullptr;
    Parameter* param = nullptr;
  };

  friend Var lookup_row(Tape& t, Parameter& table, int row);

  double* arena_alloc(std::size_t n, bool zero);
  int push(Node n);
  const Node& node(Var v) const;
  Node& node(Var v);
  void check_same_shape(const char* op, Var a, Var b) const;

  std::vector<Node> nodes_;
  std::deque<std::vector<double>> blocks_;
  std::size_t block_used_ = 0;
  std::size_t block_idx_ = 0;
  std::vector<std::vector<int>> lists_;
  std::vector<std::vector<std::uint8_t>> masks_;
  std::unordered_map<const Parameter*, int> param_nodes_;
  bool backward_done_ = false;
};

// Row view into a (rows x cols) parameter table: values and gradient alias
// the table's row, so gradients land directly in the right place.
Var lookup_row(Tape& t, Parameter& table, int row);

}  // namespace lane
