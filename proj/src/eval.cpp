#include "lane/eval.hpp"

#include <map>
#include <set>
#include <sstream>

namespace lane {

namespace {

// Names any tokens the checkpointed vocabulary cannot resolve.
void check_vocab(const Model& m, const std::vector<scan::Example>& test) {
  std::set<std::string> unknown;
  for (const auto& ex : test) {
    for (const auto& t : ex.command) {
      if (!m.src_vocab().contains(t)) unknown.insert(t);
    }
    for (const auto& t : ex.actions) {
      if (!m.dst_vocab().contains(t)) unknown.insert(t);
    }
  }
  if (!unknown.empty()) {
    std::string msg = "vocabulary mismatch, unknown tokens:";
    for (const auto& t : unknown) msg += " " + t;
    throw VocabError(msg);
  }
}

}  // namespace

EvalReport evaluate(Model& m, const std::vector<scan::Example>& test,
                    const std::vector<scan::Example>* train_for_frequency,
                    std::vector<std::string>* predictions,
                    std::size_t failure_cap) {
  check_vocab(m, test);

  std::map<int, PerLengthRow> rows;
  std::map<int, int> train_freq;
  if (train_for_frequency != nullptr) {
    for (const auto& ex : *train_for_frequency) {
      ++train_freq[static_cast<int>(ex.command.size())];
    }
  }

  EvalReport report;
  report.total = static_cast<int>(test.size());
  for (const auto& ex : test) {
    const std::vector<std::string> got = predict(m, ex.command);
    const bool ok = got == ex.actions;
    if (predictions != nullptr) predictions->push_back(scan::join(got));
    const int len = static_cast<int>(ex.command.size());
    PerLengthRow& row = rows[len];
    row.length = len;
    ++row.total;
    if (ok) {
      ++row.correct;
      ++report.correct;
    } else if (report.failures.size() < failure_cap) {
      report.failures.emplace_back(scan::join(ex.command), scan::join(got));
    }
  }
  report.accuracy = report.total == 0
                        ? 0.0
                        : static_cast<double>(report.correct) / report.total;
  for (auto& [len, row] : rows) {
    auto it = train_freq.find(len);
    row.train_frequency = it == train_freq.end() ? 0 : it->second;
    report.per_length.push_back(row);
  }
  return report;
}

std::string per_length_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "length,accuracy,train_frequency\n";
  for (const auto& row : report.per_length) {
    out << row.length << ',' << row.accuracy() << ',' << row.train_frequency
        << '\n';
  }
  return out.str();
}

std::string dump_tree(Model& m, const std::vector<std::string>& command) {
  Tape tape;
  scan::Example ex{command, {}};
  Trajectory t = rollout(tape, m, ex, Mode::kGreedy, nullptr);

  std::ostringstream out;
  if (!t.steps.empty()) out << t.steps.back().bracket << '\n';
  for (const auto& st : t.steps) {
    out << render(m, expr::SrcExp(st.w_before.begin() + st.lo,
                                  st.w_before.begin() + st.hi + 1))
        << " => " << render(m, st.skeleton) << " => " << render(m, st.constant)
        << '\n';
  }
  if (t.aborted) {
    out << "(aborted: " << t.abort_reason << ")\n";
  } else {
    out << "output: " << scan::join(t.final_tokens) << '\n';
  }
  return out.str();
}

}  // namespace lane
