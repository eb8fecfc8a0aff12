#pragma once

#include <string>
#include <vector>

#include "lane/scan.hpp"
#include "lane/trainer.hpp"

namespace lane {

struct PerLengthRow {
  int length = 0;        // input token count
  int total = 0;
  int correct = 0;
  int train_frequency = 0;  // examples of this length in the train set
  double accuracy() const {
    return total == 0 ? 0.0 : static_cast<double>(correct) / total;
  }
};

struct EvalReport {
  int total = 0;
  int correct = 0;
  double accuracy = 0.0;
  std::vector<PerLengthRow> per_length;              // ascending length
  std::vector<std::pair<std::string, std::string>> failures;  // command, got
};

// Greedy inference over a test set. Fails fast on tokens outside the model's
// vocabulary. predictions, when non-null, receives one joined action line per
// example ("" for aborted episodes).
EvalReport evaluate(Model& m, const std::vector<scan::Example>& test,
                    const std::vector<scan::Example>* train_for_frequency,
                    std::vector<std::string>* predictions = nullptr,
                    std::size_t failure_cap = 20);

// Comma-separated plot data: length,accuracy,train_frequency.
std::string per_length_csv(const EvalReport& report);

// Greedy derivation dump: a bracketed tree line plus one
// "SrcExp => skeleton => constant" line per step. Throws on ungrammatical or
// out-of-vocabulary input; reports aborted episodes in the text.
std::string dump_tree(Model& m, const std::vector<std::string>& command);

}  // namespace lane
