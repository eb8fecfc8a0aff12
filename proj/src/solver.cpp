#include "lane/solver.hpp"

#include <algorithm>

namespace lane {

namespace {

struct LstmCell {
  Var w;
  Var b;
  int dim;

  // One gated step; returns (h, c).
  std::pair<Var, Var> step(Tape& tape, Var x, Var h_prev, Var c_prev) const {
    const Var xh[] = {x, h_prev};
    Var gates = tape.add(tape.matvec(w, tape.concat(xh)), b);
    Var i = tape.sigmoid(tape.slice(gates, 0, dim));
    Var f = tape.sigmoid(tape.slice(gates, dim, dim));
    Var o = tape.sigmoid(tape.slice(gates, 2 * dim, dim));
    Var g = tape.tanh(tape.slice(gates, 3 * dim, dim));
    Var c = tape.add(tape.mul(f, c_prev), tape.mul(i, g));
    Var h = tape.mul(o, tape.tanh(c));
    return {h, c};
  }
};

Var zeros(Tape& tape, int n) {
  std::vector<double> z(static_cast<std::size_t>(n), 0.0);
  return tape.input(z);
}

}  // namespace

EncodeResult encode(Tape& tape, Model& m, const expr::SrcExp& g) {
  if (g.empty()) throw ContractError("encode: empty expression");
  const int d = m.cfg().dim;
  Parameter& emb = m.p("emb");
  Parameter& src_keys = m.p("src_keys");
  LstmCell cell{tape.param(m.p("enc_w")), tape.param(m.p("enc_b")), d};

  EncodeResult out;
  Var h = zeros(tape, d);
  Var c = zeros(tape, d);
  for (const auto& sym : g) {
    Var x = sym.is_var ? lookup_row(tape, src_keys, sym.id)
                       : lookup_row(tape, emb, sym.id);
    std::tie(h, c) = cell.step(tape, x, h, c);
    out.h.push_back(h);
  }
  out.h_last = h;
  out.c_last = c;
  return out;
}

DecodeResult decode(Tape& tape, Model& m, const EncodeResult& enc,
                    const expr::MemoryState& mem, Mode mode, Rng* rng,
                    const std::vector<int>* replay) {
  const int d = m.cfg().dim;
  const int n_actions = m.dst_vocab().size();
  const int n_symbols = m.out_symbol_count();
  Parameter& out_emb = m.p("out_emb");
  Parameter& dst_keys = m.p("dst_keys");
  LstmCell cell{tape.param(m.p("dec_w")), tape.param(m.p("dec_b")), d};
  Var out_w = tape.param(m.p("out_w"));
  Var out_b = tape.param(m.p("out_b"));

  // Action words and the end marker are always available; a destination
  // variable only while its slot is non-empty.
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(n_symbols), 0);
  for (int a = 0; a <= n_actions; ++a) mask[static_cast<std::size_t>(a)] = 1;
  for (int v = 0; v < mem.pool_size(); ++v) {
    mask[static_cast<std::size_t>(m.var_symbol(v))] = mem.slot_filled(v) ? 1 : 0;
  }

  DecodeResult out;
  out.log_prob = tape.constant(0.0);
  out.entropy = tape.constant(0.0);

  Var x = tape.param(m.p("start"));
  Var h = enc.h_last;
  Var c = enc.c_last;

  for (int step = 0;; ++step) {
    std::tie(h, c) = cell.step(tape, x, h, c);

    // Dot-product attention over encoder states.
    std::vector<Var> scores;
    scores.reserve(enc.h.size());
    for (const Var& eh : enc.h) scores.push_back(tape.inner(h, eh));
    Var attn = tape.softmax(tape.concat(scores));
    auto av = tape.values(attn);
    out.attention.emplace_back(av.begin(), av.end());
    Var ctx = tape.smul(tape.slice(attn, 0, 1), enc.h[0]);
    for (std::size_t i = 1; i < enc.h.size(); ++i) {
      ctx = tape.add(ctx, tape.smul(tape.slice(attn, static_cast<int>(i), 1),
                                    enc.h[i]));
    }

    const Var hc[] = {h, ctx};
    Var proj = tape.tanh(tape.add(tape.matvec(out_w, tape.concat(hc)), out_b));

    std::vector<Var> logits;
    logits.reserve(static_cast<std::size_t>(n_symbols));
    for (int a = 0; a <= n_actions; ++a) {
      logits.push_back(tape.inner(lookup_row(tape, out_emb, a), proj));
    }
    for (int v = 0; v < mem.pool_size(); ++v) {
      logits.push_back(tape.inner(lookup_row(tape, dst_keys, v), proj));
    }
    Var probs = tape.masked_softmax(tape.concat(logits), mask);
    auto pv = tape.values(probs);

    int sym;
    switch (mode) {
      case Mode::kSample: {
        std::vector<double> pvec(pv.begin(), pv.end());
        sym = static_cast<int>(rng->categorical(pvec));
        break;
      }
      case Mode::kGreedy:
        sym = static_cast<int>(std::max_element(pv.begin(), pv.end()) -
                               pv.begin());
        break;
      case Mode::kReplay: {
        if (replay == nullptr ||
            static_cast<std::size_t>(step) >= replay->size()) {
          throw ContractError("decode: replay exhausted");
        }
        sym = (*replay)[static_cast<std::size_t>(step)];
        if (sym < 0 || sym >= n_symbols || !mask[static_cast<std::size_t>(sym)]) {
          throw ContractError("decode: replayed symbol outside support");
        }
        break;
      }
    }

    out.symbols.push_back(sym);
    out.log_prob = tape.add(out.log_prob, tape.log(tape.slice(probs, sym, 1)));
    out.entropy = tape.add(out.entropy, tape.neg(tape.sum(tape.xlogx(probs))));

    if (sym == m.eos_id()) break;
    if (m.symbol_is_var(sym)) {
      const int item = m.symbol_var_index(sym);
      out.skeleton.push_back({true, item});
      x = lookup_row(tape, dst_keys, item);
    } else {
      out.skeleton.push_back({false, sym});
      x = lookup_row(tape, out_emb, sym);
    }
    if (static_cast<int>(out.skeleton.size()) >= m.cfg().skeleton_cap) {
      out.truncated = true;
      break;
    }
  }
  return out;
}

SolveResult solve(Tape& tape, Model& m, const expr::SrcExp& g,
                  expr::MemoryState& mem, Mode mode, bool terminal, Rng* rng,
                  const std::vector<int>* replay) {
  EncodeResult enc = encode(tape, m, g);
  DecodeResult dec = decode(tape, m, enc, mem, mode, rng, replay);

  SolveResult out;
  out.symbols = std::move(dec.symbols);
  out.skeleton = std::move(dec.skeleton);
  out.log_prob = dec.log_prob;
  out.entropy = dec.entropy;
  out.truncated = dec.truncated;
  out.constant = mem.substitute(out.skeleton);

  if (terminal) {
    out.written_slot = -1;  // answer emitted, nothing written back
  } else {
    bool has_empty = false;
    for (int v = 0; v < mem.pool_size(); ++v) has_empty |= !mem.slot_filled(v);
    out.written_slot = has_empty ? mem.allocate_write(out.constant) : -2;
  }
  return out;
}

}  // namespace lane
