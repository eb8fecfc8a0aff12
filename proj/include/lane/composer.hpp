#pragma once

#include <string>
#include <vector>

#include "lane/model.hpp"

// High-level policy: bottom-up Tree-LSTM merging with per-layer candidate
// selection and a Bernoulli recognizability check, returning the span of a
// recognizable source expression.
namespace lane {

struct NodeRepr {
  Var h;
  Var c;
  int lo = 0;
  int hi = 0;
  std::string bracket;  // surface form for tree dumps
};

struct HighDecision {
  int merge_index = 0;
  int check_bit = 0;
};

struct MergeChoice {
  int k = 0;
  NodeRepr parent;
  Var log_prob;
  Var entropy;
  std::vector<double> probs;
};

struct CheckChoice {
  int bit = 0;
  double p = 0.0;
  Var log_prob;
  Var entropy;
};

struct ComposeResult {
  int lo = 0;
  int hi = 0;
  std::vector<HighDecision> decisions;
  bool forced_root = false;  // no check fired; root recognized by rule
  Var log_prob;
  Var entropy;
  std::string bracket;
};

// Leaf transform r_i = W_leaf * Emb(w_i) + b_leaf; Emb is the word embedding
// for words and the item's source key vector for variables. leaf_texts, when
// given, provides the surface form of each symbol for tree dumps.
std::vector<NodeRepr> leaf_transform(Tape& tape, Model& m, const expr::SrcExp& w,
                                     const std::vector<std::string>* leaf_texts);

// Gated merge of two adjacent nodes.
NodeRepr treelstm_merge(Tape& tape, Model& m, const NodeRepr& left,
                        const NodeRepr& right);

// Scores all adjacent-pair candidates with the query vector and draws (or
// argmaxes) one. Layer must have at least two nodes.
MergeChoice select_merge(Tape& tape, Model& m, const std::vector<NodeRepr>& layer,
                         Mode mode, Rng* rng, const int* replay_k);

// Recognizability check on a freshly built parent.
CheckChoice check(Tape& tape, Model& m, const NodeRepr& parent, Mode mode,
                  Rng* rng, const int* replay_bit);

// One full compose loop over w. The first decision pair selects and checks a
// single existing node (so a bare word can be recognized on its own); after
// that, merge then check until a check fires. The single leaf (|w|=1) and the
// fully merged root are recognized by rule.
ComposeResult compose_step(Tape& tape, Model& m, const expr::SrcExp& w, Mode mode,
                           Rng* rng, const std::vector<HighDecision>* replay,
                           const std::vector<std::string>* leaf_texts = nullptr);

}  // namespace lane
