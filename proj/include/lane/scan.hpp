#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lane/tensor.hpp"

// SCAN-family command language: grammar, exact interpreter (the ground-truth
// oracle), dataset generation and the published train/test splits. Everything
// here is pure given (data, seed).
namespace lane::scan {

struct ParseError : Error {
  ParseError(const std::string& msg, int position)
      : Error(msg), position(position) {}
  int position;
};
struct DataError : Error {
  using Error::Error;
};

using Tokens = std::vector<std::string>;

struct Example {
  Tokens command;
  Tokens actions;
  bool operator==(const Example&) const = default;
};

struct DatasetSplit {
  std::string name;
  std::vector<Example> train;
  std::vector<Example> dev;
  std::vector<Example> test;
  std::uint64_t seed = 0;
};

Tokens tokenize(const std::string& line);
std::string join(const Tokens& toks);

// Canonical SCAN semantics. Accepts single clauses, one binary "after", or
// chains of "and" (the extended productivity set); plain SCAN commands use at
// most one conjunction. Throws ParseError with the offending token position.
Tokens interpret(const Tokens& command);

// All 20910 distinct SCAN commands (at most one conjunction) paired with
// their interpretations, in a fixed enumeration order.
std::vector<Example> generate_scan();

// Published splits over generate_scan() output. Sizes (train/test before dev
// extraction): simple 16728/4182, add_jump 14670/7706, around_right
// 15225/4476, length 16990/3920. The add_jump train set repeats the bare
// "jump" command so it makes up 10% of training, matching the source
// benchmark's counts; the around_right split drops commands containing "turn
// around right" entirely.
DatasetSplit split(const std::string& name, const std::vector<Example>& data,
                   std::uint64_t seed);

// Loads a maximum-compound-divergence split from index files listing one
// command per line. Every command must resolve to a generated pair.
DatasetSplit load_mcd(const std::string& train_index,
                      const std::string& test_index,
                      const std::vector<Example>& data, std::uint64_t seed);

// Extended productivity set: clauses chained by "and". Train commands carry
// at most 2 "and", test commands 3..9 with every count represented. Default
// sizes 20506 train / 4000 test.
DatasetSplit generate_scan_ext(std::uint64_t seed, std::size_t train_size = 20506,
                               std::size_t test_size = 4000);

// Few-shot split loaded from IN:/OUT: files (canonically 14 train / 8 test).
// Unexpected sizes warn but do not fail; empty files are an error. Returns
// the warning text through *warning when non-null.
DatasetSplit load_miniscan(const std::string& train_file,
                           const std::string& test_file,
                           std::string* warning = nullptr);

// One example per line: "IN: <tokens> OUT: <tokens>".
void save_examples(const std::string& path, const std::vector<Example>& ex);
std::vector<Example> load_examples(const std::string& path);

// Moves a seed-deterministic 20% of train into dev (floor). No-op when
// train has fewer than five examples.
void extract_dev(DatasetSplit& split);

}  // namespace lane::scan
