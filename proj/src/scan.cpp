#include "lane/scan.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "lane/rng.hpp"

namespace lane::scan {

namespace {

const std::vector<std::string> kPrimitives = {"walk", "look", "run", "jump"};
const std::unordered_map<std::string, std::string> kPrimitiveAction = {
    {"walk", "WALK"}, {"look", "LOOK"}, {"run", "RUN"}, {"jump", "JUMP"}};

std::string turn_action(const std::string& dir) {
  return dir == "left" ? "LTURN" : "RTURN";
}

void append(Tokens& out, const Tokens& more) {
  out.insert(out.end(), more.begin(), more.end());
}

// Recursive-descent parser for
//   command := clause (('and' clause)+ | 'after' clause)?
//   clause  := vp ('twice' | 'thrice')?
//   vp      := prim | prim dir | 'turn' dir
//            | prim ('opposite'|'around') dir | 'turn' ('opposite'|'around') dir
// evaluated directly to the action sequence.
class Parser {
 public:
  explicit Parser(const Tokens& toks) : toks_(toks) {}

  Tokens command() {
    Tokens out = clause();
    if (done()) return out;
    if (peek() == "after") {
      ++pos_;
      Tokens first = clause();
      expect_end();
      // "x after y" executes y first.
      append(first, out);
      return first;
    }
    while (!done() && peek() == "and") {
      ++pos_;
      append(out, clause());
    }
    expect_end();
    return out;
  }

 private:
  bool done() const { return pos_ >= toks_.size(); }
  const std::string& peek() const { return toks_[pos_]; }

  [[noreturn]] void fail(const std::string& what) const {
    const int p = static_cast<int>(pos_);
    std::string tok = done() ? "<end>" : toks_[pos_];
    throw ParseError("parse error at position " + std::to_string(p) + " ('" +
                         tok + "'): " + what,
                     p);
  }

  void expect_end() const {
    if (!done()) fail("unexpected trailing tokens");
  }

  std::string direction() {
    if (done()) fail("expected 'left' or 'right'");
    std::string d = peek();
    if (d != "left" && d != "right") fail("expected 'left' or 'right'");
    ++pos_;
    return d;
  }

  Tokens verb_phrase() {
    if (done()) fail("expected a verb");
    const std::string head = peek();
    const bool is_turn = head == "turn";
    const bool is_prim = kPrimitiveAction.count(head) != 0;
    if (!is_turn && !is_prim) fail("unknown verb");
    ++pos_;

    Tokens prim;
    if (is_prim) prim = {kPrimitiveAction.at(head)};

    if (is_turn) {
      if (done()) fail("'turn' needs a direction");
      const std::string mod = peek();
      if (mod == "left" || mod == "right") {
        ++pos_;
        return {turn_action(mod)};
      }
      if (mod == "opposite") {
        ++pos_;
        const std::string t = turn_action(direction());
        return {t, t};
      }
      if (mod == "around") {
        ++pos_;
        const std::string t = turn_action(direction());
        return {t, t, t, t};
      }
      fail("'turn' needs a direction or 'opposite'/'around'");
    }

    if (done()) return prim;
    const std::string mod = peek();
    if (mod == "left" || mod == "right") {
      ++pos_;
      Tokens out = {turn_action(mod)};
      append(out, prim);
      return out;
    }
    if (mod == "opposite") {
      ++pos_;
      const std::string t = turn_action(direction());
      Tokens out = {t, t};
      append(out, prim);
      return out;
    }
    if (mod == "around") {
      ++pos_;
      const std::string t = turn_action(direction());
      Tokens out;
      for (int i = 0; i < 4; ++i) {
        out.push_back(t);
        append(out, prim);
      }
      return out;
    }
    return prim;
  }

  Tokens clause() {
    Tokens base = verb_phrase();
    if (!done() && (peek() == "twice" || peek() == "thrice")) {
      const int reps = peek() == "twice" ? 2 : 3;
      ++pos_;
      Tokens out;
      for (int i = 0; i < reps; ++i) append(out, base);
      return out;
    }
    return base;
  }

  const Tokens& toks_;
  std::size_t pos_ = 0;
};

// All 102 clause-level commands in a fixed order.
std::vector<Tokens> all_clauses() {
  std::vector<Tokens> vps;
  for (const auto& p : kPrimitives) vps.push_back({p});
  for (std::string_view dir : {"left", "right"}) {
    for (std::string_view mod : {"", "opposite", "around"}) {
      for (const auto& p : kPrimitives) {
        Tokens t = {p};
        if (!mod.empty()) t.emplace_back(mod);
        t.emplace_back(dir);
        vps.push_back(t);
      }
      Tokens t = {"turn"};
      if (!mod.empty()) t.emplace_back(mod);
      t.emplace_back(dir);
      vps.push_back(t);
    }
  }
  std::vector<Tokens> clauses;
  for (const auto& vp : vps) {
    clauses.push_back(vp);
    for (std::string_view rep : {"twice", "thrice"}) {
      Tokens t = vp;
      t.emplace_back(rep);
      clauses.push_back(t);
    }
  }
  return clauses;
}

bool contains_token(const Tokens& toks, const std::string& t) {
  return std::find(toks.begin(), toks.end(), t) != toks.end();
}

bool contains_bigram(const Tokens& toks, const std::string& a,
                     const std::string& b) {
  for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
    if (toks[i] == a && toks[i + 1] == b) return true;
  }
  return false;
}

bool contains_trigram(const Tokens& toks, const std::string& a,
                      const std::string& b, const std::string& c) {
  for (std::size_t i = 0; i + 2 < toks.size(); ++i) {
    if (toks[i] == a && toks[i + 1] == b && toks[i + 2] == c) return true;
  }
  return false;
}

}  // namespace

Tokens tokenize(const std::string& line) {
  Tokens out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::string join(const Tokens& toks) {
  std::string out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) out += ' ';
    out += toks[i];
  }
  return out;
}

Tokens interpret(const Tokens& command) {
  if (command.empty()) throw ParseError("empty command", 0);
  return Parser(command).command();
}

std::vector<Example> generate_scan() {
  const std::vector<Tokens> clauses = all_clauses();
  std::vector<Example> out;
  out.reserve(20910);
  for (const auto& c : clauses) out.push_back({c, interpret(c)});
  for (std::string_view conj : {"and", "after"}) {
    for (const auto& x : clauses) {
      for (const auto& y : clauses) {
        Tokens cmd = x;
        cmd.emplace_back(conj);
        append(cmd, y);
        out.push_back({cmd, interpret(cmd)});
      }
    }
  }
  return out;
}

DatasetSplit split(const std::string& name, const std::vector<Example>& data,
                   std::uint64_t seed) {
  DatasetSplit out;
  out.name = name;
  out.seed = seed;
  if (name == "simple") {
    std::vector<Example> pool = data;
    Rng rng(seed);
    rng.shuffle(pool);
    const std::size_t train_n = 16728;
    if (pool.size() < train_n) throw DataError("simple: dataset too small");
    out.train.assign(pool.begin(), pool.begin() + train_n);
    out.test.assign(pool.begin() + train_n, pool.end());
  } else if (name == "add_jump") {
    Example bare_jump;
    for (const auto& ex : data) {
      const bool has_jump = contains_token(ex.command, "jump");
      if (!has_jump) {
        out.train.push_back(ex);
      } else if (ex.command.size() == 1) {
        bare_jump = ex;
      } else {
        out.test.push_back(ex);
      }
    }
    if (bare_jump.command.empty()) throw DataError("add_jump: no bare jump");
    // The source benchmark repeats the isolated primitive until it is 10% of
    // training: n_nonjump/9 extra copies on top of the one distinct command.
    const std::size_t copies = out.train.size() / 9;
    for (std::size_t i = 0; i < copies; ++i) out.train.push_back(bare_jump);
    Rng rng(seed);
    rng.shuffle(out.train);
  } else if (name == "around_right") {
    for (const auto& ex : data) {
      if (!contains_bigram(ex.command, "around", "right")) {
        out.train.push_back(ex);
      } else if (!contains_trigram(ex.command, "turn", "around", "right")) {
        out.test.push_back(ex);
      }
      // commands with "turn around right" are excluded from both sides
    }
  } else if (name == "length") {
    // Test takes the long outputs (24..48 actions); training tops out at 22.
    for (const auto& ex : data) {
      (ex.actions.size() >= 24 ? out.test : out.train).push_back(ex);
    }
  } else {
    throw DataError("unknown split: " + name);
  }
  return out;
}

DatasetSplit load_mcd(const std::string& train_index,
                      const std::string& test_index,
                      const std::vector<Example>& data, std::uint64_t seed) {
  std::unordered_map<std::string, const Example*> by_command;
  for (const auto& ex : data) by_command[join(ex.command)] = &ex;

  auto load_side = [&](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open index file: " + path);
    std::vector<Example> side;
    std::string line;
    while (std::getline(in, line)) {
      Tokens toks = tokenize(line);
      if (toks.empty()) continue;
      auto it = by_command.find(join(toks));
      if (it == by_command.end()) {
        throw DataError("index command not in generated set: '" + join(toks) +
                        "' (" + path + ")");
      }
      side.push_back(*it->second);
    }
    return side;
  };

  DatasetSplit out;
  out.name = "mcd";
  out.seed = seed;
  out.train = load_side(train_index);
  out.test = load_side(test_index);

  std::unordered_set<std::string> train_cmds;
  for (const auto& ex : out.train) train_cmds.insert(join(ex.command));
  for (const auto& ex : out.test) {
    if (train_cmds.count(join(ex.command)) != 0) {
      throw DataError("train/test overlap on command: " + join(ex.command));
    }
  }
  return out;
}

DatasetSplit generate_scan_ext(std::uint64_t seed, std::size_t train_size,
                               std::size_t test_size) {
  const std::vector<Tokens> clauses = all_clauses();
  Rng rng(seed);
  std::set<std::string> seen;

  auto sample_command = [&](int and_count) {
    Tokens cmd = clauses[rng.below(clauses.size())];
    for (int i = 0; i < and_count; ++i) {
      cmd.push_back("and");
      append(cmd, clauses[rng.below(clauses.size())]);
    }
    return cmd;
  };

  DatasetSplit out;
  out.name = "scan_ext";
  out.seed = seed;

  while (out.train.size() < train_size) {
    Tokens cmd = sample_command(static_cast<int>(rng.below(3)));
    if (!seen.insert(join(cmd)).second) continue;
    out.train.push_back({cmd, interpret(cmd)});
  }
  // Test quotas across "and" counts 3..9, near-uniform.
  const std::size_t base = test_size / 7;
  const std::size_t extra = test_size % 7;
  for (int k = 3; k <= 9; ++k) {
    const std::size_t quota = base + (static_cast<std::size_t>(k - 3) < extra ? 1 : 0);
    std::size_t made = 0;
    while (made < quota) {
      Tokens cmd = sample_command(k);
      if (!seen.insert(join(cmd)).second) continue;
      out.test.push_back({cmd, interpret(cmd)});
      ++made;
    }
  }
  return out;
}

DatasetSplit load_miniscan(const std::string& train_file,
                           const std::string& test_file,
                           std::string* warning) {
  DatasetSplit out;
  out.name = "miniscan";
  out.train = load_examples(train_file);
  out.test = load_examples(test_file);
  if (out.train.empty()) throw DataError("empty train file: " + train_file);
  if (out.test.empty()) throw DataError("empty test file: " + test_file);
  std::string warn;
  if (out.train.size() != 14) {
    warn += "expected 14 train examples, got " +
            std::to_string(out.train.size()) + "; ";
  }
  if (out.test.size() != 8) {
    warn += "expected 8 test examples, got " + std::to_string(out.test.size()) +
            "; ";
  }
  if (warning) *warning = warn;
  return out;
}

void save_examples(const std::string& path, const std::vector<Example>& ex) {
  std::ofstream outf(path, std::ios::binary);
  if (!outf) throw DataError("cannot write: " + path);
  for (const auto& e : ex) {
    outf << "IN: " << join(e.command) << " OUT: " << join(e.actions) << "\n";
  }
}

std::vector<Example> load_examples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path);
  std::vector<Example> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto in_pos = line.find("IN:");
    const auto out_pos = line.find(" OUT:");
    if (in_pos != 0 || out_pos == std::string::npos) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected 'IN: ... OUT: ...'");
    }
    Example ex;
    ex.command = tokenize(line.substr(3, out_pos - 3));
    ex.actions = tokenize(line.substr(out_pos + 5));
    if (ex.command.empty() || ex.actions.empty()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": empty side");
    }
    out.push_back(std::move(ex));
  }
  return out;
}

void extract_dev(DatasetSplit& split) {
  if (split.train.size() < 5) return;
  Rng rng(split.seed ^ 0x5eedDe57ULL);
  std::vector<Example> pool = split.train;
  rng.shuffle(pool);
  const std::size_t dev_n = pool.size() / 5;
  split.dev.assign(pool.begin(), pool.begin() + dev_n);
  split.train.assign(pool.begin() + dev_n, pool.end());
}

}  // namespace lane::scan
