#pragma once

#include <deque>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "lane/adadelta.hpp"
#include "lane/composer.hpp"
#include "lane/config.hpp"
#include "lane/scan.hpp"
#include "lane/solver.hpp"

// Hierarchical REINFORCE: trajectory rollouts alternating compose and solve,
// similarity/simplicity rewards with a mean baseline, entropy regularization,
// differential AdaDelta updates and curriculum scheduling.
namespace lane {

struct StepRecord {
  expr::SrcExp w_before;
  int lo = 0, hi = 0;
  std::vector<HighDecision> decisions;
  bool forced_root = false;
  std::vector<int> low_symbols;
  bool truncated = false;
  expr::DstExp skeleton;
  expr::DstExp constant;
  int written_slot = -1;
  std::string bracket;
};

struct Trajectory {
  std::vector<StepRecord> steps;
  expr::DstExp final_output;
  std::vector<std::string> final_tokens;
  int T = 0;
  int T_star = 0;  // steps whose skeleton is nonempty and variables-only
  double logp_theta = 0.0;
  double logp_phi = 0.0;
  double entropy_theta = 0.0;
  double entropy_phi = 0.0;
  bool aborted = false;
  std::string abort_reason;
};

// Tape handles of the most recent rollout, for building the surrogate loss.
struct RolloutVars {
  Var logp_theta;
  Var logp_phi;
  Var entropy;
};

// Runs one episode: compose, solve, supersede, until the recognized span
// covers the whole expression. Aborts (reward 0) on pool exhaustion or step
// overflow. In replay mode the recorded decisions are re-taken verbatim.
Trajectory rollout(Tape& tape, Model& m, const scan::Example& ex, Mode mode,
                   Rng* rng, const Trajectory* replay = nullptr,
                   RolloutVars* vars = nullptr);

// Greedy inference; empty result when the episode aborts.
std::vector<std::string> predict(Model& m, const std::vector<std::string>& command);

// IoU similarity over the longest common contiguous substring:
// |lcs| / (|a| + |o| - |lcs|). o must be nonempty; empty a scores 0.
double reward_similarity(const std::vector<std::string>& a,
                         const std::vector<std::string>& o);
int longest_common_substring(const std::vector<std::string>& a,
                             const std::vector<std::string>& o);

// T*/T: fraction of steps whose skeleton contains only destination variables.
double reward_simplicity(const Trajectory& t);

struct RewardConfig {
  double gamma = 0.5;
  int samples = 10;
};

// R_s + gamma * R_a; aborted trajectories score 0.
double total_reward(const Trajectory& t, const std::vector<std::string>& truth,
                    const RewardConfig& cfg);

struct UpdateStats {
  double mean_reward = 0.0;
  bool sampled_exact = false;  // some sample matched the ground truth exactly
  int aborted = 0;
  bool skipped = false;  // every sample aborted; parameters untouched
};

struct LessonSummary {
  std::string label;
  std::size_t pool_size = 0;
  int epochs = 0;
  double accuracy = 0.0;
  bool converged = false;
};

struct CurriculumResult {
  std::vector<LessonSummary> lessons;
  std::vector<std::string> warnings;
  long updates = 0;
  int skipped = 0;
};

struct RunHooks {
  std::ostream* metrics = nullptr;  // one line per update
  std::function<void(int lesson_idx, const LessonSummary&)> on_lesson_end;
};

class Trainer {
 public:
  Trainer(Model& m, const RunConfig& cfg);

  // One REINFORCE update on a single example: N sampled rollouts, mean-reward
  // baseline, entropy bonus, differential AdaDelta step.
  UpdateStats update_example(const scan::Example& ex, double entropy_weight,
                             Rng& rng);

  // Lessons by input length (plus "and"-count lessons for the extended set),
  // accumulating data; advances on dev accuracy or the epoch cap.
  CurriculumResult run_curriculum(const scan::DatasetSplit& split, Rng& rng,
                                  const RunHooks& hooks);

  AdaDelta& opt_theta() { return opt_theta_; }
  AdaDelta& opt_phi() { return opt_phi_; }

 private:
  Model& model_;
  RunConfig cfg_;
  AdaDelta opt_theta_;
  AdaDelta opt_phi_;
  std::deque<Tape> tapes_;
};

double exact_match_accuracy(Model& m,
                            const std::vector<const scan::Example*>& set);

// Regularizer weight for a lesson: initial weight times anneal^lesson.
double lesson_entropy_weight(const RunConfig& cfg, int lesson_idx);

}  // namespace lane
