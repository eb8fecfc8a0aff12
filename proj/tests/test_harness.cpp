#include <doctest.h>

#include <cstdlib>
#include <set>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lane/checkpoint.hpp"
#include "lane/config.hpp"
#include "lane/eval.hpp"
#include "lane/scan.hpp"
#include "testutil.hpp"

using namespace lane;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

fs::path binary_path() {
  if (const char* env = std::getenv("LANE_BINARY")) return env;
  return fs::path("./lane");
}

int run_cli(const std::string& args) {
  const std::string cmd = binary_path().string() + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("run configuration") {
  SUBCASE("validation lists every problem at once") {
    RunConfig cfg;
    cfg.dim = 0;
    cfg.gamma = -1;
    cfg.samples = 0;
    try {
      cfg.validate();
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("dim") != std::string::npos);
      CHECK(msg.find("gamma") != std::string::npos);
      CHECK(msg.find("samples") != std::string::npos);
    }
  }
  SUBCASE("config files apply known keys and reject unknown ones") {
    const fs::path p = fs::temp_directory_path() / "lane_cfg_test.txt";
    {
      std::ofstream out(p);
      out << "# comment\n"
          << "gamma = 0.25\n"
          << "samples = 5\n"
          << "lesson_lengths = 2,4,6\n";
    }
    RunConfig cfg;
    cfg.apply_file(p.string());
    CHECK(cfg.gamma == doctest::Approx(0.25));
    CHECK(cfg.samples == 5);
    CHECK(cfg.lesson_lengths == std::vector<int>{2, 4, 6});

    {
      std::ofstream out(p);
      out << "not_a_key = 1\n";
    }
    CHECK_THROWS_AS(cfg.apply_file(p.string()), ConfigError);
  }
  SUBCASE("round-trips through json") {
    RunConfig cfg;
    cfg.gamma = 0.75;
    cfg.lesson_lengths = {3, 5};
    cfg.seed = 99;
    RunConfig back = RunConfig::from_json(cfg.to_json());
    CHECK(back.gamma == cfg.gamma);
    CHECK(back.lesson_lengths == cfg.lesson_lengths);
    CHECK(back.seed == cfg.seed);
  }
}

TEST_CASE("evaluation report") {
  // An untrained model is enough to validate the counting identities.
  auto split = scan::load_miniscan(testutil::data_file("miniscan_limit_train.txt"),
                                   testutil::data_file("miniscan_limit_test.txt"));
  auto [src, dst] = Vocab::build(split.train);
  RunConfig cfg;
  cfg.dim = 8;
  cfg.pool_size = 2;
  Model m(cfg.model_config(), src, dst);
  Rng rng(4);
  m.init_params(rng);

  std::vector<std::string> predictions;
  EvalReport report = evaluate(m, split.test, &split.train, &predictions);

  SUBCASE("accuracy equals an independent recount of the prediction dump") {
    REQUIRE(predictions.size() == split.test.size());
    int recount = 0;
    for (std::size_t i = 0; i < split.test.size(); ++i) {
      if (predictions[i] == scan::join(split.test[i].actions)) ++recount;
    }
    CHECK(report.correct == recount);
    CHECK(report.accuracy ==
          doctest::Approx(static_cast<double>(recount) / report.total));
  }
  SUBCASE("per-length rows cover every test length") {
    std::set<int> lengths;
    for (const auto& ex : split.test) {
      lengths.insert(static_cast<int>(ex.command.size()));
    }
    std::set<int> rows;
    int total = 0;
    for (const auto& row : report.per_length) {
      rows.insert(row.length);
      total += row.total;
    }
    CHECK(rows == lengths);
    CHECK(total == report.total);
    const std::string csv = per_length_csv(report);
    CHECK(csv.find("length,accuracy,train_frequency") == 0);
  }
  SUBCASE("vocabulary mismatches name the unknown tokens") {
    std::vector<scan::Example> alien = {{{"frob"}, {"RED"}}};
    CHECK_THROWS_WITH_AS(evaluate(m, alien, nullptr),
                         doctest::Contains("frob"), VocabError);
  }
}

TEST_CASE("tree dumps") {
  auto split = scan::load_miniscan(testutil::data_file("miniscan_limit_train.txt"),
                                   testutil::data_file("miniscan_limit_test.txt"));
  auto [src, dst] = Vocab::build(split.train);
  RunConfig cfg;
  cfg.dim = 8;
  cfg.pool_size = 2;
  Model m(cfg.model_config(), src, dst);
  Rng rng(4);
  m.init_params(rng);

  SUBCASE("a single word gives a one-node tree") {
    const std::string text = dump_tree(m, {"dax"});
    CHECK(text.find("dax") == 0);
    CHECK(text.find("=>") != std::string::npos);
  }
  SUBCASE("multi-token dumps bracket the derivation") {
    const std::string text = dump_tree(m, {"lug", "fep"});
    CHECK(text.find("lug") != std::string::npos);
    CHECK(text.find("fep") != std::string::npos);
  }
  SUBCASE("unknown tokens raise") {
    CHECK_THROWS_AS(dump_tree(m, {"xyzzy"}), VocabError);
  }
}

TEST_CASE("cli exit codes and data determinism") {
  if (!fs::exists(binary_path())) {
    MESSAGE("lane binary not found at ", binary_path().string(),
            "; skipping subprocess checks");
    return;
  }
  SUBCASE("config errors exit 1") {
    CHECK(run_cli("train --task simple --data /nonexistent --gamma=-3") == 1);
  }
  SUBCASE("data errors exit 2") {
    CHECK(run_cli("data mcd1") == 2);
    CHECK(run_cli("eval --checkpoint /nonexistent.ckpt --data /nonexistent") == 2);
  }
  SUBCASE("dataset build is byte-deterministic given a seed") {
    const fs::path a = fs::temp_directory_path() / "lane_data_a";
    const fs::path b = fs::temp_directory_path() / "lane_data_b";
    REQUIRE(run_cli("data scan_ext --seed 11 --out " + a.string()) == 0);
    REQUIRE(run_cli("data scan_ext --seed 11 --out " + b.string()) == 0);
    for (const char* f : {"train.txt", "dev.txt", "test.txt", "sizes.txt"}) {
      CHECK(slurp(a / f) == slurp(b / f));
    }
    CHECK(slurp(a / "train.txt").find("IN: ") == 0);
    fs::remove_all(a);
    fs::remove_all(b);
  }
}
