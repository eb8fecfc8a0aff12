#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lane/tensor.hpp"

// Source/destination analytical expressions and the variable-slot Memory
// protocol: expressions are token sequences that may contain variables bound
// to memory items; slots temporarily hold constant destination expressions.
namespace lane::expr {

struct ProtocolError : Error {
  using Error::Error;
};
struct CapacityError : Error {
  using Error::Error;
};

// Symbol of a source expression: a word id or a source variable naming a
// memory item.
struct SrcSym {
  bool is_var = false;
  int id = 0;  // word id, or memory item index when is_var
  bool operator==(const SrcSym&) const = default;
};

// Symbol of a destination expression: an action-word id or a destination
// variable naming a memory item.
struct DstSym {
  bool is_var = false;
  int id = 0;
  bool operator==(const DstSym&) const = default;
};

using SrcExp = std::vector<SrcSym>;
using DstExp = std::vector<DstSym>;

inline bool is_constant(const SrcExp& e) {
  for (const auto& s : e)
    if (s.is_var) return false;
  return true;
}
inline bool is_constant(const DstExp& e) {
  for (const auto& s : e)
    if (s.is_var) return false;
  return true;
}

// Fixed pool of value slots. Key vectors live in the parameter store; only
// slot contents are trajectory state.
class MemoryState {
 public:
  explicit MemoryState(int pool_size)
      : slots_(static_cast<std::size_t>(pool_size)) {}

  int pool_size() const { return static_cast<int>(slots_.size()); }
  bool slot_filled(int i) const { return slots_.at(i).has_value(); }
  const DstExp& slot(int i) const;
  int filled_count() const;

  // Expands every destination variable in the skeleton with its stored
  // constant (repeated occurrences read the same value), then empties the
  // slot of each distinct variable used. Empty-slot reference is a
  // ProtocolError.
  DstExp substitute(const DstExp& skeleton);

  // Writes a constant into the lowest-index empty slot and returns that
  // index. CapacityError when the pool is full.
  int allocate_write(DstExp value);

 private:
  std::vector<std::optional<DstExp>> slots_;
};

// Replaces w[i..j] (inclusive) by the single source variable `var`.
SrcExp supersede(const SrcExp& w, int i, int j, int var);

}  // namespace lane::expr
