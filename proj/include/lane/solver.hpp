#pragma once

#include <vector>

#include "lane/model.hpp"

// Low-level policy: attention-equipped encoder-decoder translating a
// recognizable source expression into a skeleton destination expression,
// then resolving it against Memory.
namespace lane {

struct EncodeResult {
  std::vector<Var> h;  // one hidden state per input symbol
  Var h_last;
  Var c_last;
};

struct DecodeResult {
  std::vector<int> symbols;   // emitted ids, end marker included unless truncated
  expr::DstExp skeleton;      // emitted symbols without the end marker
  Var log_prob;
  Var entropy;
  bool truncated = false;     // hit the skeleton length cap
  std::vector<std::vector<double>> attention;  // per step, over input positions
};

struct SolveResult {
  std::vector<int> symbols;
  expr::DstExp skeleton;
  expr::DstExp constant;
  Var log_prob;
  Var entropy;
  bool truncated = false;
  // Slot written for non-terminal steps; -1 terminal, -2 pool exhausted
  // (trajectory must abort).
  int written_slot = -1;
};

// Single-layer recurrent encoding of the expression's leaf embeddings.
EncodeResult encode(Tape& tape, Model& m, const expr::SrcExp& g);

// Step-by-step decoding with dot-product attention. Output scores are inner
// products of the projected state with learned output embeddings (action
// words, end marker) and with destination key vectors (variables); variables
// with empty slots are masked to probability zero.
DecodeResult decode(Tape& tape, Model& m, const EncodeResult& enc,
                    const expr::MemoryState& mem, Mode mode, Rng* rng,
                    const std::vector<int>* replay);

// decode + substitution; non-terminal results are written to a fresh slot.
SolveResult solve(Tape& tape, Model& m, const expr::SrcExp& g,
                  expr::MemoryState& mem, Mode mode, bool terminal, Rng* rng,
                  const std::vector<int>* replay);

}  // namespace lane
