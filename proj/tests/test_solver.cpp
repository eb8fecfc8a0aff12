#include <doctest.h>

#include <cmath>

#include "lane/solver.hpp"
#include "testutil.hpp"

using namespace lane;

namespace {

const std::vector<std::string> kSrc = {"jump", "twice", "walk"};
const std::vector<std::string> kDst = {"JUMP", "LTURN", "WALK"};

}  // namespace

TEST_CASE("encode") {
  SUBCASE("one hidden state per symbol, model width") {
    Model m = testutil::make_model(16, 3, kSrc, kDst, 2);
    Tape t;
    EncodeResult enc = encode(t, m, m.src_exp({"walk", "twice"}));
    REQUIRE(enc.h.size() == 2);
    for (const Var& h : enc.h) CHECK(t.shape(h).rows == 16);
  }
  SUBCASE("zero weights keep the state at zero") {
    Model m = testutil::make_model(8, 3, kSrc, kDst, 2);
    testutil::zero_params(m);
    Tape t;
    EncodeResult enc = encode(t, m, m.src_exp({"jump", "walk", "twice"}));
    for (const Var& h : enc.h) {
      for (double v : t.values(h)) CHECK(v == 0.0);
    }
    for (double v : t.values(enc.c_last)) CHECK(v == 0.0);
  }
  SUBCASE("gradient reaches the source key of a variable token") {
    Model m = testutil::make_model(6, 3, kSrc, kDst, 4);
    m.theta().zero_grad();
    m.phi().zero_grad();
    expr::SrcExp g = {{false, 0}, {true, 2}};  // "jump $z"
    {
      Tape t;
      EncodeResult enc = encode(t, m, g);
      t.backward(t.sum(enc.h_last));
    }
    Parameter& keys = m.p("src_keys");
    double row2 = 0;
    for (int j = 0; j < 6; ++j) row2 += std::fabs(keys.grad[12 + j]);
    CHECK(row2 > 0.0);

    auto loss_fn = [&]() {
      Tape t;
      return t.value(t.sum(encode(t, m, g).h_last));
    };
    auto rep = testutil::fd_check_param(keys, loss_fn, keys.grad);
    CHECK(rep.failed == 0);
  }
}

TEST_CASE("decode") {
  SUBCASE("empty memory masks every variable") {
    Model m = testutil::make_model(8, 3, kSrc, kDst, 6);
    expr::MemoryState mem(3);
    Tape t;
    EncodeResult enc = encode(t, m, m.src_exp({"walk"}));
    Rng rng(3);
    DecodeResult dec = decode(t, m, enc, mem, Mode::kSample, &rng, nullptr);
    for (int sym : dec.symbols) CHECK(sym <= m.eos_id());
    for (const auto& s : dec.skeleton) CHECK_FALSE(s.is_var);
  }

  SUBCASE("uniform logits over seven allowed symbols cost ln 7 per step") {
    Model m = testutil::make_model(8, 3, kSrc, kDst, 6);
    testutil::zero_params(m);
    expr::MemoryState mem(3);
    mem.allocate_write({{false, 0}});
    mem.allocate_write({{false, 1}});
    mem.allocate_write({{false, 2}});
    Tape t;
    EncodeResult enc = encode(t, m, m.src_exp({"walk", "twice"}));
    Rng rng(5);
    DecodeResult dec = decode(t, m, enc, mem, Mode::kSample, &rng, nullptr);
    REQUIRE(!dec.symbols.empty());
    // 3 action words + end marker + 3 live variables = 7 choices, all tied
    CHECK(t.value(dec.log_prob) ==
          doctest::Approx(-std::log(7.0) * dec.symbols.size()));
  }

  SUBCASE("attention rows sum to one over the input positions") {
    Model m = testutil::make_model(12, 3, kSrc, kDst, 8);
    expr::MemoryState mem(3);
    Tape t;
    EncodeResult enc = encode(t, m, m.src_exp({"jump", "twice", "walk"}));
    Rng rng(4);
    DecodeResult dec = decode(t, m, enc, mem, Mode::kSample, &rng, nullptr);
    REQUIRE(!dec.attention.empty());
    for (const auto& row : dec.attention) {
      REQUIRE(row.size() == 3);
      double total = 0;
      for (double v : row) total += v;
      CHECK(std::fabs(total - 1.0) <= 1e-12);
    }
  }

  SUBCASE("masking soundness over random memory configurations") {
    Rng rng(99);
    for (int trial = 0; trial < 300; ++trial) {
      Model m = testutil::make_model(5, 3, kSrc, kDst, 100 + trial);
      expr::MemoryState mem(3);
      std::vector<bool> filled(3, false);
      for (int v = 0; v < 3; ++v) {
        if (rng.bernoulli(0.5)) {
          filled[static_cast<std::size_t>(mem.allocate_write({{false, 0}}))] =
              true;
        }
      }
      Tape t;
      EncodeResult enc = encode(t, m, m.src_exp({"walk", "twice"}));
      DecodeResult dec = decode(t, m, enc, mem, Mode::kSample, &rng, nullptr);
      for (const auto& s : dec.skeleton) {
        if (s.is_var) CHECK(filled[static_cast<std::size_t>(s.id)]);
      }
    }
  }

  SUBCASE("greedy decoding is deterministic") {
    Model m = testutil::make_model(10, 3, kSrc, kDst, 21);
    expr::MemoryState mem(3);
    mem.allocate_write({{false, 2}});
    auto run = [&]() {
      Tape t;
      expr::MemoryState mem_copy = mem;
      EncodeResult enc = encode(t, m, m.src_exp({"walk", "twice"}));
      DecodeResult dec = decode(t, m, enc, mem_copy, Mode::kGreedy, nullptr,
                                nullptr);
      return std::pair(dec.symbols, t.value(dec.log_prob));
    };
    CHECK(run() == run());
  }

  SUBCASE("replay reproduces the stored log-probability") {
    Model m = testutil::make_model(9, 3, kSrc, kDst, 31);
    Rng rng(8);
    expr::MemoryState mem(3);
    mem.allocate_write({{false, 1}});
    Tape t;
    EncodeResult enc = encode(t, m, m.src_exp({"jump", "twice"}));
    expr::MemoryState mem1 = mem;
    DecodeResult a = decode(t, m, enc, mem1, Mode::kSample, &rng, nullptr);

    Tape t2;
    EncodeResult enc2 = encode(t2, m, m.src_exp({"jump", "twice"}));
    expr::MemoryState mem2 = mem;
    DecodeResult b = decode(t2, m, enc2, mem2, Mode::kReplay, nullptr, &a.symbols);
    CHECK(b.symbols == a.symbols);
    CHECK(t2.value(b.log_prob) == doctest::Approx(t.value(a.log_prob)).epsilon(1e-12));
  }
}

TEST_CASE("solve") {
  SUBCASE("terminal steps emit without writing") {
    Model m = testutil::make_model(8, 2, kSrc, kDst, 41);
    expr::MemoryState mem(2);
    mem.allocate_write({{false, 0}});
    Tape t;
    Rng rng(2);
    SolveResult r = solve(t, m, m.src_exp({"jump"}), mem, Mode::kSample,
                          /*terminal=*/true, &rng, nullptr);
    CHECK(r.written_slot == -1);
    CHECK(expr::is_constant(r.constant));
  }

  SUBCASE("non-terminal steps write the constant to a fresh slot") {
    Model m = testutil::make_model(8, 2, kSrc, kDst, 43);
    expr::MemoryState mem(2);
    Tape t;
    Rng rng(2);
    SolveResult r = solve(t, m, m.src_exp({"jump"}), mem, Mode::kSample,
                          /*terminal=*/false, &rng, nullptr);
    REQUIRE(r.written_slot == 0);
    CHECK(mem.slot_filled(0));
    CHECK(mem.slot(0) == r.constant);
  }

  SUBCASE("a full pool reports exhaustion instead of writing") {
    Model m = testutil::make_model(8, 2, kSrc, kDst, 47);
    expr::MemoryState mem(2);
    mem.allocate_write({{false, 0}});
    mem.allocate_write({{false, 1}});
    Tape t;
    Rng rng(2);
    // force a constant skeleton so substitution frees nothing
    const std::vector<int> replay = {0, m.eos_id()};
    SolveResult r = solve(t, m, m.src_exp({"jump"}), mem, Mode::kReplay,
                          /*terminal=*/false, nullptr, &replay);
    CHECK(r.written_slot == -2);
  }

  SUBCASE("the length cap truncates and flags the skeleton") {
    Model m = testutil::make_model(6, 2, kSrc, kDst, 53);
    testutil::zero_params(m);
    // make the first action word overwhelmingly likely so greedy never stops
    Parameter& out_emb = m.p("out_emb");
    Parameter& out_b = m.p("out_b");
    for (int j = 0; j < 6; ++j) out_emb.value[j] = 5.0;
    for (int j = 0; j < 6; ++j) out_b.value[j] = 5.0;
    expr::MemoryState mem(2);
    Tape t;
    SolveResult r = solve(t, m, m.src_exp({"walk"}), mem, Mode::kGreedy,
                          /*terminal=*/true, nullptr, nullptr);
    CHECK(r.truncated);
    CHECK(r.skeleton.size() == static_cast<std::size_t>(m.cfg().skeleton_cap));
  }

  SUBCASE("constants always equal the substituted skeleton") {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
      Model m = testutil::make_model(5, 3, kSrc, kDst, 200 + trial);
      expr::MemoryState mem(3);
      if (rng.bernoulli(0.7)) mem.allocate_write({{false, 2}, {false, 0}});
      if (rng.bernoulli(0.4)) mem.allocate_write({{false, 1}});
      expr::MemoryState before = mem;
      Tape t;
      SolveResult r = solve(t, m, m.src_exp({"walk", "twice"}), mem,
                            Mode::kSample, rng.bernoulli(0.5), &rng, nullptr);
      CHECK(before.substitute(r.skeleton) == r.constant);
    }
  }
}
