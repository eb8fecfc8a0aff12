#include "lane/composer.hpp"

#include <algorithm>

namespace lane {

namespace {

Var node_repr(Tape& tape, const NodeRepr& n) {
  const Var hc[] = {n.h, n.c};
  return tape.concat(hc);
}

// log p and entropy of a Bernoulli given the pre-sigmoid logit; both sides
// go through sigmoid so saturation stays finite.
struct BernoulliVars {
  Var p1;
  Var log_p1;
  Var log_p0;
  Var entropy;
};

BernoulliVars bernoulli_vars(Tape& tape, Var logit) {
  BernoulliVars out;
  out.p1 = tape.sigmoid(logit);
  Var p0 = tape.sigmoid(tape.neg(logit));
  out.log_p1 = tape.log(out.p1);
  out.log_p0 = tape.log(p0);
  Var h = tape.add(tape.xlogx(out.p1), tape.xlogx(p0));
  out.entropy = tape.neg(h);
  return out;
}

}  // namespace

std::vector<NodeRepr> leaf_transform(Tape& tape, Model& m, const expr::SrcExp& w,
                                     const std::vector<std::string>* leaf_texts) {
  if (w.empty()) throw ContractError("leaf_transform: empty expression");
  Parameter& emb = m.p("emb");
  Parameter& src_keys = m.p("src_keys");
  Var leaf_w = tape.param(m.p("leaf_w"));
  Var leaf_b = tape.param(m.p("leaf_b"));
  const int d = m.cfg().dim;

  std::vector<NodeRepr> out;
  out.reserve(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    Var e = w[i].is_var ? lookup_row(tape, src_keys, w[i].id)
                        : lookup_row(tape, emb, w[i].id);
    Var r = tape.add(tape.matvec(leaf_w, e), leaf_b);
    NodeRepr n;
    n.h = tape.slice(r, 0, d);
    n.c = tape.slice(r, d, d);
    n.lo = n.hi = static_cast<int>(i);
    n.bracket = leaf_texts ? (*leaf_texts)[i]
                           : (w[i].is_var ? "$" + std::to_string(w[i].id)
                                          : m.src_vocab().token(w[i].id));
    out.push_back(std::move(n));
  }
  return out;
}

NodeRepr treelstm_merge(Tape& tape, Model& m, const NodeRepr& left,
                        const NodeRepr& right) {
  if (left.hi + 1 != right.lo) {
    throw ContractError("treelstm_merge: nodes are not adjacent");
  }
  const int d = m.cfg().dim;
  Var tree_w = tape.param(m.p("tree_w"));
  Var tree_b = tape.param(m.p("tree_b"));

  const Var hh[] = {left.h, right.h};
  Var gates = tape.add(tape.matvec(tree_w, tape.concat(hh)), tree_b);
  Var o = tape.sigmoid(tape.slice(gates, 0, d));
  Var f_left = tape.sigmoid(tape.slice(gates, d, d));
  Var f_right = tape.sigmoid(tape.slice(gates, 2 * d, d));
  Var e = tape.sigmoid(tape.slice(gates, 3 * d, d));
  Var g = tape.tanh(tape.slice(gates, 4 * d, d));

  NodeRepr parent;
  parent.c = tape.add(tape.add(tape.mul(f_left, left.c), tape.mul(f_right, right.c)),
                      tape.mul(e, g));
  parent.h = tape.mul(o, tape.tanh(parent.c));
  parent.lo = left.lo;
  parent.hi = right.hi;
  parent.bracket = "(" + left.bracket + " " + right.bracket + ")";
  return parent;
}

MergeChoice select_merge(Tape& tape, Model& m, const std::vector<NodeRepr>& layer,
                         Mode mode, Rng* rng, const int* replay_k) {
  if (layer.size() < 2) {
    throw ContractError("select_merge: layer needs at least two nodes");
  }
  Var query = tape.param(m.p("query"));
  const std::size_t k_count = layer.size() - 1;

  std::vector<NodeRepr> parents;
  std::vector<Var> scores;
  parents.reserve(k_count);
  scores.reserve(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    parents.push_back(treelstm_merge(tape, m, layer[k], layer[k + 1]));
    scores.push_back(tape.inner(query, node_repr(tape, parents.back())));
  }

  Var probs = tape.softmax(tape.concat(scores));
  auto pv = tape.values(probs);
  std::vector<double> pvec(pv.begin(), pv.end());

  std::size_t chosen = 0;
  switch (mode) {
    case Mode::kSample:
      chosen = rng->categorical(pvec);
      break;
    case Mode::kGreedy:
      chosen = static_cast<std::size_t>(
          std::max_element(pvec.begin(), pvec.end()) - pvec.begin());
      break;
    case Mode::kReplay:
      if (replay_k == nullptr || *replay_k < 0 ||
          static_cast<std::size_t>(*replay_k) >= k_count) {
        throw ContractError("select_merge: invalid replayed merge index");
      }
      chosen = static_cast<std::size_t>(*replay_k);
      break;
  }

  MergeChoice out;
  out.k = static_cast<int>(chosen);
  out.parent = parents[chosen];
  out.log_prob = tape.log(tape.slice(probs, static_cast<int>(chosen), 1));
  out.entropy = tape.neg(tape.sum(tape.xlogx(probs)));
  out.probs = std::move(pvec);
  return out;
}

CheckChoice check(Tape& tape, Model& m, const NodeRepr& parent, Mode mode,
                  Rng* rng, const int* replay_bit) {
  Var check_w = tape.param(m.p("check_w"));
  Var check_b = tape.param(m.p("check_b"));
  Var logit = tape.add(tape.inner(check_w, node_repr(tape, parent)), check_b);
  BernoulliVars bv = bernoulli_vars(tape, logit);
  const double p = tape.value(bv.p1);

  CheckChoice out;
  out.p = p;
  switch (mode) {
    case Mode::kSample:
      out.bit = rng->bernoulli(p) ? 1 : 0;
      break;
    case Mode::kGreedy:
      out.bit = p > 0.5 ? 1 : 0;
      break;
    case Mode::kReplay:
      if (replay_bit == nullptr || (*replay_bit != 0 && *replay_bit != 1)) {
        throw ContractError("check: invalid replayed bit");
      }
      out.bit = *replay_bit;
      break;
  }
  out.log_prob = out.bit ? bv.log_p1 : bv.log_p0;
  out.entropy = bv.entropy;
  return out;
}

// Picks one word leaf by merging score and checks it. This is the
// single-token recognition stage: a word like "walk" must be replaceable by a
// variable on its own before any merge consumes it. Variable leaves are not
// candidates: re-recognizing a bare variable is an identity step and only
// feeds degenerate loops. The recorded index is the absolute position in w.
// Returns false when the expression has no word leaves.
static bool leaf_stage(Tape& tape, Model& m, const expr::SrcExp& w,
                       const std::vector<NodeRepr>& layer, Mode mode, Rng* rng,
                       const HighDecision* replay, MergeChoice* selected,
                       CheckChoice* checked) {
  std::vector<int> candidates;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!w[i].is_var) candidates.push_back(static_cast<int>(i));
  }
  if (candidates.empty()) return false;

  Var query = tape.param(m.p("query"));
  std::vector<Var> scores;
  scores.reserve(candidates.size());
  for (int pos : candidates) {
    scores.push_back(
        tape.inner(query, node_repr(tape, layer[static_cast<std::size_t>(pos)])));
  }
  Var probs = tape.softmax(tape.concat(scores));
  auto pv = tape.values(probs);
  std::vector<double> pvec(pv.begin(), pv.end());

  std::size_t chosen = 0;
  switch (mode) {
    case Mode::kSample:
      chosen = rng->categorical(pvec);
      break;
    case Mode::kGreedy:
      chosen = static_cast<std::size_t>(
          std::max_element(pvec.begin(), pvec.end()) - pvec.begin());
      break;
    case Mode::kReplay: {
      if (replay == nullptr) {
        throw ContractError("compose_step: replay exhausted");
      }
      auto it = std::find(candidates.begin(), candidates.end(),
                          replay->merge_index);
      if (it == candidates.end()) {
        throw ContractError("compose_step: replayed leaf is not a word");
      }
      chosen = static_cast<std::size_t>(it - candidates.begin());
      break;
    }
  }
  const int pos = candidates[chosen];
  selected->k = pos;
  selected->parent = layer[static_cast<std::size_t>(pos)];
  selected->log_prob = tape.log(tape.slice(probs, static_cast<int>(chosen), 1));
  selected->entropy = tape.neg(tape.sum(tape.xlogx(probs)));
  selected->probs = std::move(pvec);

  const int* rb = replay ? &replay->check_bit : nullptr;
  *checked = check(tape, m, selected->parent, mode, rng, rb);
  return true;
}

ComposeResult compose_step(Tape& tape, Model& m, const expr::SrcExp& w, Mode mode,
                           Rng* rng, const std::vector<HighDecision>* replay,
                           const std::vector<std::string>* leaf_texts) {
  std::vector<NodeRepr> layer = leaf_transform(tape, m, w, leaf_texts);

  ComposeResult out;
  out.log_prob = tape.constant(0.0);
  out.entropy = tape.constant(0.0);

  if (layer.size() == 1) {
    out.lo = out.hi = 0;
    out.bracket = layer[0].bracket;
    return out;
  }

  std::size_t decision_idx = 0;
  {
    MergeChoice leaf_choice;
    CheckChoice cc;
    const HighDecision* rd = nullptr;
    if (mode == Mode::kReplay) {
      if (replay == nullptr || replay->empty()) {
        throw ContractError("compose_step: replay exhausted");
      }
      rd = &(*replay)[0];
    }
    if (leaf_stage(tape, m, w, layer, mode, rng, rd, &leaf_choice, &cc)) {
      out.decisions.push_back({leaf_choice.k, cc.bit});
      out.log_prob =
          tape.add(out.log_prob, tape.add(leaf_choice.log_prob, cc.log_prob));
      out.entropy =
          tape.add(out.entropy, tape.add(leaf_choice.entropy, cc.entropy));
      ++decision_idx;
      if (cc.bit == 1) {
        out.lo = leaf_choice.parent.lo;
        out.hi = leaf_choice.parent.hi;
        out.bracket = leaf_choice.parent.bracket;
        return out;
      }
    }
  }

  while (true) {
    const int* rk = nullptr;
    const int* rb = nullptr;
    if (mode == Mode::kReplay) {
      if (replay == nullptr || decision_idx >= replay->size()) {
        throw ContractError("compose_step: replay exhausted");
      }
      rk = &(*replay)[decision_idx].merge_index;
      rb = &(*replay)[decision_idx].check_bit;
    }

    MergeChoice mc = select_merge(tape, m, layer, mode, rng, rk);
    CheckChoice cc = check(tape, m, mc.parent, mode, rng, rb);
    out.decisions.push_back({mc.k, cc.bit});
    out.log_prob = tape.add(out.log_prob, tape.add(mc.log_prob, cc.log_prob));
    out.entropy = tape.add(out.entropy, tape.add(mc.entropy, cc.entropy));
    ++decision_idx;

    if (cc.bit == 1) {
      out.lo = mc.parent.lo;
      out.hi = mc.parent.hi;
      out.bracket = mc.parent.bracket;
      return out;
    }

    // Parent and unmerged nodes form the next layer.
    layer[static_cast<std::size_t>(mc.k)] = mc.parent;
    layer.erase(layer.begin() + mc.k + 1);
    if (layer.size() == 1) {
      // Every check declined; the root is recognized by rule. Its (negative)
      // check decision above stays scored so gradients flow.
      out.forced_root = true;
      out.lo = layer[0].lo;
      out.hi = layer[0].hi;
      out.bracket = layer[0].bracket;
      return out;
    }
  }
}

}  // namespace lane
