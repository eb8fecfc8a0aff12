#include "lane/expressions.hpp"

#include <set>

namespace lane::expr {

const DstExp& MemoryState::slot(int i) const {
  const auto& s = slots_.at(static_cast<std::size_t>(i));
  if (!s.has_value()) {
    throw ProtocolError("slot " + std::to_string(i) + " is empty");
  }
  return *s;
}

int MemoryState::filled_count() const {
  int n = 0;
  for (const auto& s : slots_)
    if (s.has_value()) ++n;
  return n;
}

DstExp MemoryState::substitute(const DstExp& skeleton) {
  DstExp out;
  std::set<int> used;
  for (const auto& sym : skeleton) {
    if (!sym.is_var) {
      out.push_back(sym);
      continue;
    }
    if (sym.id < 0 || sym.id >= pool_size() ||
        !slots_[static_cast<std::size_t>(sym.id)].has_value()) {
      throw ProtocolError("substitute: destination variable " +
                          std::to_string(sym.id) + " has an empty slot");
    }
    const DstExp& value = *slots_[static_cast<std::size_t>(sym.id)];
    out.insert(out.end(), value.begin(), value.end());
    used.insert(sym.id);
  }
  // Slots empty only after the whole skeleton is expanded, so repeated
  // occurrences of one variable all read the same value.
  for (int id : used) slots_[static_cast<std::size_t>(id)].reset();
  return out;
}

int MemoryState::allocate_write(DstExp value) {
  if (!is_constant(value)) {
    throw ProtocolError("allocate_write: value must be a constant expression");
  }
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (!slots_[i].has_value()) {
      slots_[i] = std::move(value);
      return static_cast<int>(i);
    }
  }
  throw CapacityError("memory pool exhausted (" +
                      std::to_string(slots_.size()) + " items)");
}

SrcExp supersede(const SrcExp& w, int i, int j, int var) {
  if (i < 0 || j < i || j >= static_cast<int>(w.size())) {
    throw ContractError("supersede: span [" + std::to_string(i) + "," +
                        std::to_string(j) + "] out of range for length " +
                        std::to_string(w.size()));
  }
  SrcExp out;
  out.reserve(w.size() - static_cast<std::size_t>(j - i));
  out.insert(out.end(), w.begin(), w.begin() + i);
  out.push_back(SrcSym{true, var});
  out.insert(out.end(), w.begin() + j + 1, w.end());
  return out;
}

}  // namespace lane::expr
