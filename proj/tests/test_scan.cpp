#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "lane/rng.hpp"
#include "lane/scan.hpp"
#include "testutil.hpp"

using namespace lane::scan;

namespace {

Tokens tok(const std::string& s) { return tokenize(s); }

const std::vector<Example>& scan_data() {
  static const std::vector<Example> data = generate_scan();
  return data;
}

}  // namespace

TEST_CASE("interpreter handles the anchor commands") {
  CHECK(interpret(tok("jump")) == tok("JUMP"));
  CHECK(interpret(tok("run opposite left after walk twice")) ==
        tok("WALK WALK LTURN LTURN RUN"));
  CHECK(interpret(tok("walk around right")) ==
        tok("RTURN WALK RTURN WALK RTURN WALK RTURN WALK"));
  CHECK(interpret(tok("turn left")) == tok("LTURN"));
  CHECK(interpret(tok("turn around left")) == tok("LTURN LTURN LTURN LTURN"));
  CHECK(interpret(tok("look thrice and jump")) == tok("LOOK LOOK LOOK JUMP"));
}

TEST_CASE("interpreter rejects ungrammatical commands with a position") {
  CHECK_THROWS_AS(interpret(tok("jump jump")), ParseError);
  CHECK_THROWS_AS(interpret(tok("walk and")), ParseError);
  CHECK_THROWS_AS(interpret(tok("turn")), ParseError);
  CHECK_THROWS_AS(interpret(tok("opposite left")), ParseError);
  CHECK_THROWS_AS(interpret(tok("walk after run and jump")), ParseError);
  try {
    interpret(tok("jump jump"));
  } catch (const ParseError& e) {
    CHECK(e.position == 1);
  }
}

TEST_CASE("interpreter agrees with the bundled golden file") {
  std::ifstream in(testutil::data_file("golden_interpreter.txt"));
  REQUIRE(in.good());
  std::string line;
  int checked = 0;
  std::set<std::string> seen_words;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto out_pos = line.find(" OUT: ");
    REQUIRE(out_pos != std::string::npos);
    const Tokens cmd = tok(line.substr(4, out_pos - 4));
    const Tokens want = tok(line.substr(out_pos + 6));
    CHECK(interpret(cmd) == want);
    for (const auto& w : cmd) seen_words.insert(w);
    ++checked;
  }
  CHECK(checked >= 200);
  // every word of the grammar appears somewhere in the golden set
  for (const char* w :
       {"walk", "look", "run", "jump", "turn", "left", "right", "opposite",
        "around", "twice", "thrice", "and", "after"}) {
    CHECK(seen_words.count(w) == 1);
  }
}

TEST_CASE("generated corpus has the published shape") {
  const auto& data = scan_data();
  CHECK(data.size() == 20910);

  std::set<std::string> commands;
  bool has_bare_jump = false;
  for (const auto& ex : data) {
    commands.insert(join(ex.command));
    if (ex.command == tok("jump")) {
      has_bare_jump = true;
      CHECK(ex.actions == tok("JUMP"));
    }
  }
  CHECK(commands.size() == 20910);  // all distinct
  CHECK(has_bare_jump);
}

TEST_CASE("every generated pair round-trips through the interpreter") {
  for (const auto& ex : scan_data()) {
    REQUIRE(interpret(ex.command) == ex.actions);
    REQUIRE(!ex.actions.empty());
  }
}

TEST_CASE("interpreter length and order laws") {
  lane::Rng rng(21);
  const auto& data = scan_data();
  for (int trial = 0; trial < 300; ++trial) {
    const auto& x = data[rng.below(102)];  // clause-level entries come first
    const auto& y = data[rng.below(102)];

    Tokens tw = x.command;
    tw.push_back("twice");
    bool clause_allows_rep =
        x.command.back() != "twice" && x.command.back() != "thrice";
    if (clause_allows_rep) {
      CHECK(interpret(tw).size() == 2 * x.actions.size());
      tw.back() = "thrice";
      CHECK(interpret(tw).size() == 3 * x.actions.size());
    }

    Tokens both = x.command;
    both.push_back("and");
    both.insert(both.end(), y.command.begin(), y.command.end());
    Tokens and_out = interpret(both);
    CHECK(and_out.size() == x.actions.size() + y.actions.size());

    both[x.command.size()] = "after";
    Tokens after_out = interpret(both);
    CHECK(after_out.size() == x.actions.size() + y.actions.size());

    // "x after y" is the clause-order reversal of "x and y"
    Tokens reversed = y.actions;
    reversed.insert(reversed.end(), x.actions.begin(), x.actions.end());
    CHECK(after_out == reversed);
  }
}

TEST_CASE("published split sizes are exact") {
  const auto& data = scan_data();

  SUBCASE("simple") {
    auto s = split("simple", data, 1);
    CHECK(s.train.size() == 16728);
    CHECK(s.test.size() == 4182);
  }
  SUBCASE("add_jump") {
    auto s = split("add_jump", data, 1);
    CHECK(s.train.size() == 14670);
    CHECK(s.test.size() == 7706);
    // bare "jump" trains, compounds with jump test
    int bare = 0;
    for (const auto& ex : s.train) {
      if (ex.command == tok("jump")) ++bare;
      else CHECK(std::find(ex.command.begin(), ex.command.end(), "jump") ==
                 ex.command.end());
    }
    CHECK(bare == 1467);  // repeated until it is 10% of the train set
    for (const auto& ex : s.test) {
      CHECK(std::find(ex.command.begin(), ex.command.end(), "jump") !=
            ex.command.end());
      CHECK(ex.command.size() > 1);
    }
  }
  SUBCASE("around_right") {
    auto s = split("around_right", data, 1);
    CHECK(s.train.size() == 15225);
    CHECK(s.test.size() == 4476);
    auto has_around_right = [](const Tokens& c) {
      for (std::size_t i = 0; i + 1 < c.size(); ++i) {
        if (c[i] == "around" && c[i + 1] == "right") return true;
      }
      return false;
    };
    for (const auto& ex : s.train) CHECK(!has_around_right(ex.command));
    for (const auto& ex : s.test) CHECK(has_around_right(ex.command));
  }
  SUBCASE("length") {
    auto s = split("length", data, 1);
    CHECK(s.train.size() == 16990);
    CHECK(s.test.size() == 3920);
    std::size_t max_train = 0;
    for (const auto& ex : s.train) {
      max_train = std::max(max_train, ex.actions.size());
    }
    CHECK(max_train <= 24);
    for (const auto& ex : s.test) CHECK(ex.actions.size() > 24 - 1);
  }
  SUBCASE("unknown name") {
    CHECK_THROWS_AS(split("nope", data, 1), DataError);
  }
}

TEST_CASE("train and test stay disjoint by command string") {
  const auto& data = scan_data();
  for (const char* name : {"simple", "add_jump", "around_right", "length"}) {
    auto s = split(name, data, 9);
    std::set<std::string> train_cmds;
    for (const auto& ex : s.train) train_cmds.insert(join(ex.command));
    for (const auto& ex : s.test) {
      REQUIRE(train_cmds.count(join(ex.command)) == 0);
    }
  }
}

TEST_CASE("dev extraction is seed-deterministic and sized at 20%") {
  auto a = split("simple", scan_data(), 77);
  auto b = split("simple", scan_data(), 77);
  extract_dev(a);
  extract_dev(b);
  CHECK(a.dev.size() == 16728 / 5);
  CHECK(a.train.size() + a.dev.size() == 16728);
  REQUIRE(a.dev.size() == b.dev.size());
  for (std::size_t i = 0; i < a.dev.size(); ++i) CHECK(a.dev[i] == b.dev[i]);
}

TEST_CASE("mcd loader") {
  namespace fs = std::filesystem;
  const auto& data = scan_data();
  const fs::path dir = fs::temp_directory_path() / "lane_mcd_test";
  fs::create_directories(dir);

  SUBCASE("well-formed index files load to the published sizes") {
    // synthetic index files of the canonical sizes
    lane::Rng rng(3);
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    std::ofstream tr(dir / "train_idx.txt"), te(dir / "test_idx.txt");
    for (std::size_t i = 0; i < 8365; ++i) {
      tr << join(data[order[i]].command) << "\n";
    }
    for (std::size_t i = 8365; i < 8365 + 1045; ++i) {
      te << join(data[order[i]].command) << "\n";
    }
    tr.close();
    te.close();
    auto s = load_mcd((dir / "train_idx.txt").string(),
                      (dir / "test_idx.txt").string(), data, 1);
    CHECK(s.train.size() == 8365);
    CHECK(s.test.size() == 1045);
    for (const auto& ex : s.train) CHECK(interpret(ex.command) == ex.actions);
  }
  SUBCASE("an index referencing an ungrammatical command fails by name") {
    std::ofstream tr(dir / "bad_idx.txt");
    tr << "jump jump\n";
    tr.close();
    std::ofstream te(dir / "empty_idx.txt");
    te.close();
    CHECK_THROWS_WITH_AS(load_mcd((dir / "bad_idx.txt").string(),
                                  (dir / "empty_idx.txt").string(), data, 1),
                         doctest::Contains("jump jump"), DataError);
  }
  SUBCASE("overlapping sides are rejected") {
    std::ofstream tr(dir / "ov_train.txt"), te(dir / "ov_test.txt");
    tr << "jump\n";
    te << "jump\n";
    tr.close();
    te.close();
    CHECK_THROWS_AS(load_mcd((dir / "ov_train.txt").string(),
                             (dir / "ov_test.txt").string(), data, 1),
                    DataError);
  }
}

TEST_CASE("extended productivity set") {
  auto s = generate_scan_ext(5);
  CHECK(s.train.size() == 20506);
  CHECK(s.test.size() == 4000);

  auto ands = [](const Tokens& c) {
    return std::count(c.begin(), c.end(), "and");
  };
  std::set<long> test_counts;
  std::set<std::string> train_cmds;
  for (const auto& ex : s.train) {
    CHECK(ands(ex.command) <= 2);
    train_cmds.insert(join(ex.command));
  }
  lane::Rng rng(2);
  for (const auto& ex : s.test) {
    const long k = ands(ex.command);
    CHECK(k >= 3);
    CHECK(k <= 9);
    test_counts.insert(k);
    CHECK(train_cmds.count(join(ex.command)) == 0);
  }
  CHECK(test_counts.size() == 7);  // every count 3..9 represented
  // spot-check the interpreter oracle on a sample
  for (int i = 0; i < 200; ++i) {
    const auto& ex = s.test[rng.below(s.test.size())];
    CHECK(interpret(ex.command) == ex.actions);
  }
}

TEST_CASE("miniscan loader") {
  SUBCASE("bundled files have the published sizes") {
    std::string warning;
    auto s = load_miniscan(testutil::data_file("miniscan_limit_train.txt"),
                           testutil::data_file("miniscan_limit_test.txt"),
                           &warning);
    CHECK(s.train.size() == 14);
    CHECK(s.test.size() == 8);
    CHECK(warning.empty());

    // induced vocabulary covers every test token
    std::set<std::string> src, dst;
    for (const auto& ex : s.train) {
      src.insert(ex.command.begin(), ex.command.end());
      dst.insert(ex.actions.begin(), ex.actions.end());
    }
    for (const auto& ex : s.test) {
      for (const auto& t : ex.command) CHECK(src.count(t) == 1);
      for (const auto& t : ex.actions) CHECK(dst.count(t) == 1);
    }
  }
  SUBCASE("empty file is an error") {
    namespace fs = std::filesystem;
    const fs::path p = fs::temp_directory_path() / "lane_empty.txt";
    std::ofstream(p).close();
    CHECK_THROWS_AS(
        load_miniscan(p.string(), testutil::data_file("miniscan_limit_test.txt")),
        DataError);
  }
  SUBCASE("unexpected sizes warn but load") {
    namespace fs = std::filesystem;
    const fs::path p = fs::temp_directory_path() / "lane_short.txt";
    std::ofstream out(p);
    out << "IN: a OUT: B\n";
    out.close();
    std::string warning;
    auto s = load_miniscan(p.string(),
                           testutil::data_file("miniscan_limit_test.txt"),
                           &warning);
    CHECK(s.train.size() == 1);
    CHECK(!warning.empty());
  }
}

TEST_CASE("example files are byte-deterministic") {
  namespace fs = std::filesystem;
  auto s = generate_scan_ext(9, 50, 10);
  const fs::path a = fs::temp_directory_path() / "lane_io_a.txt";
  const fs::path b = fs::temp_directory_path() / "lane_io_b.txt";
  save_examples(a.string(), s.train);
  save_examples(b.string(), s.train);
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  std::string ca((std::istreambuf_iterator<char>(fa)), {});
  std::string cb((std::istreambuf_iterator<char>(fb)), {});
  CHECK(ca == cb);
  CHECK(load_examples(a.string()) == s.train);
}
