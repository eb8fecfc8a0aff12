#include "lane/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace lane {

Trajectory rollout(Tape& tape, Model& m, const scan::Example& ex, Mode mode,
                   Rng* rng, const Trajectory* replay, RolloutVars* vars) {
  Trajectory out;
  expr::SrcExp w = m.src_exp(ex.command);
  std::vector<std::string> texts(ex.command.begin(), ex.command.end());
  expr::MemoryState mem(m.cfg().pool_size);

  Var logp_theta = tape.constant(0.0);
  Var logp_phi = tape.constant(0.0);
  Var ent_theta = tape.constant(0.0);
  Var ent_phi = tape.constant(0.0);

  bool completed = false;
  for (int t = 0; t < m.cfg().max_steps; ++t) {
    const StepRecord* rstep = nullptr;
    if (mode == Mode::kReplay) {
      if (replay == nullptr || static_cast<std::size_t>(t) >= replay->steps.size()) {
        throw ContractError("rollout: replay exhausted");
      }
      rstep = &replay->steps[static_cast<std::size_t>(t)];
    }

    ComposeResult cr =
        compose_step(tape, m, w, mode, rng, rstep ? &rstep->decisions : nullptr,
                     &texts);
    logp_theta = tape.add(logp_theta, cr.log_prob);
    ent_theta = tape.add(ent_theta, cr.entropy);

    const bool terminal = cr.lo == 0 && cr.hi == static_cast<int>(w.size()) - 1;
    expr::SrcExp g(w.begin() + cr.lo, w.begin() + cr.hi + 1);

    SolveResult sr = solve(tape, m, g, mem, mode, terminal, rng,
                           rstep ? &rstep->low_symbols : nullptr);
    logp_phi = tape.add(logp_phi, sr.log_prob);
    ent_phi = tape.add(ent_phi, sr.entropy);

    StepRecord rec;
    rec.w_before = w;
    rec.lo = cr.lo;
    rec.hi = cr.hi;
    rec.decisions = cr.decisions;
    rec.forced_root = cr.forced_root;
    rec.low_symbols = sr.symbols;
    rec.truncated = sr.truncated;
    rec.skeleton = sr.skeleton;
    rec.constant = sr.constant;
    rec.written_slot = sr.written_slot;
    rec.bracket = cr.bracket;
    out.steps.push_back(std::move(rec));

    if (terminal) {
      out.final_output = sr.constant;
      out.final_tokens = m.action_tokens(sr.constant);
      completed = true;
      break;
    }
    if (sr.written_slot == -2) {
      out.aborted = true;
      out.abort_reason = "capacity";
      break;
    }
    texts[static_cast<std::size_t>(cr.lo)] = out.steps.back().bracket;
    texts.erase(texts.begin() + cr.lo + 1, texts.begin() + cr.hi + 1);
    w = expr::supersede(w, cr.lo, cr.hi, sr.written_slot);
  }

  out.T = static_cast<int>(out.steps.size());
  if (!completed && !out.aborted) {
    out.aborted = true;
    out.abort_reason = "max_steps";
  }
  for (const auto& st : out.steps) {
    if (!st.skeleton.empty() && std::all_of(st.skeleton.begin(),
                                            st.skeleton.end(),
                                            [](const expr::DstSym& s) {
                                              return s.is_var;
                                            })) {
      ++out.T_star;
    }
  }

  out.logp_theta = tape.value(logp_theta);
  out.logp_phi = tape.value(logp_phi);
  out.entropy_theta = tape.value(ent_theta);
  out.entropy_phi = tape.value(ent_phi);
  if (vars != nullptr) {
    vars->logp_theta = logp_theta;
    vars->logp_phi = logp_phi;
    vars->entropy = tape.add(ent_theta, ent_phi);
  }
  return out;
}

std::vector<std::string> predict(Model& m,
                                 const std::vector<std::string>& command) {
  Tape tape;
  Trajectory t = rollout(tape, m, {command, {}}, Mode::kGreedy, nullptr);
  if (t.aborted) return {};
  return t.final_tokens;
}

int longest_common_substring(const std::vector<std::string>& a,
                             const std::vector<std::string>& o) {
  if (a.empty() || o.empty()) return 0;
  // dp[j] = length of the common suffix of a[..i] and o[..j].
  std::vector<int> dp(o.size() + 1, 0);
  int best = 0;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    int diag = 0;  // dp[j-1] from the previous row
    for (std::size_t j = 1; j <= o.size(); ++j) {
      const int prev = dp[j];
      dp[j] = a[i - 1] == o[j - 1] ? diag + 1 : 0;
      best = std::max(best, dp[j]);
      diag = prev;
    }
  }
  return best;
}

double reward_similarity(const std::vector<std::string>& a,
                         const std::vector<std::string>& o) {
  if (o.empty()) throw ContractError("reward_similarity: empty ground truth");
  const int lcs = longest_common_substring(a, o);
  return static_cast<double>(lcs) /
         static_cast<double>(a.size() + o.size() - static_cast<std::size_t>(lcs));
}

double reward_simplicity(const Trajectory& t) {
  if (t.T < 1) throw ContractError("reward_simplicity: empty trajectory");
  return static_cast<double>(t.T_star) / static_cast<double>(t.T);
}

double total_reward(const Trajectory& t, const std::vector<std::string>& truth,
                    const RewardConfig& cfg) {
  if (t.aborted) return 0.0;
  return reward_similarity(t.final_tokens, truth) +
         cfg.gamma * reward_simplicity(t);
}

Trainer::Trainer(Model& m, const RunConfig& cfg)
    : model_(m),
      cfg_(cfg),
      opt_theta_(cfg.lr_theta, cfg.adadelta_rho, cfg.adadelta_eps),
      opt_phi_(cfg.lr_phi, cfg.adadelta_rho, cfg.adadelta_eps) {}

UpdateStats Trainer::update_example(const scan::Example& ex,
                                    double entropy_weight, Rng& rng) {
  const std::size_t n = static_cast<std::size_t>(cfg_.samples);
  while (tapes_.size() < n) tapes_.emplace_back();

  std::vector<Trajectory> trajs(n);
  std::vector<RolloutVars> vars(n);
  std::vector<double> rewards(n);
  const RewardConfig rcfg{cfg_.gamma, cfg_.samples};

  UpdateStats stats;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    tapes_[i].reset();
    trajs[i] = rollout(tapes_[i], model_, ex, Mode::kSample, &rng, nullptr,
                       &vars[i]);
    rewards[i] = total_reward(trajs[i], ex.actions, rcfg);
    sum += rewards[i];
    if (trajs[i].aborted) ++stats.aborted;
    if (!trajs[i].aborted && trajs[i].final_tokens == ex.actions) {
      stats.sampled_exact = true;
    }
  }
  stats.mean_reward = sum / static_cast<double>(n);
  if (stats.aborted == static_cast<int>(n)) {
    stats.skipped = true;  // nothing to learn from; leave parameters alone
    for (std::size_t i = 0; i < n; ++i) tapes_[i].reset();
    model_.theta().zero_grad();
    model_.phi().zero_grad();
    return stats;
  }

  const double baseline = stats.mean_reward;
  for (std::size_t i = 0; i < n; ++i) {
    Tape& tape = tapes_[i];
    const double advantage = rewards[i] - baseline;
    Var logp = tape.add(vars[i].logp_theta, vars[i].logp_phi);
    Var loss = tape.add(tape.scale(logp, -advantage),
                        tape.scale(vars[i].entropy, -entropy_weight));
    tape.backward(loss);
  }
  opt_theta_.step(model_.theta());
  opt_phi_.step(model_.phi());
  return stats;
}

namespace {

int and_count(const scan::Example& ex) {
  return static_cast<int>(
      std::count(ex.command.begin(), ex.command.end(), "and"));
}

struct LessonFilter {
  std::string label;
  std::function<bool(const scan::Example&)> accept;
};

std::vector<LessonFilter> build_filters(const RunConfig& cfg,
                                        const std::vector<scan::Example>& train) {
  std::vector<LessonFilter> filters;
  if (!cfg.curriculum) {
    filters.push_back({"all", [](const scan::Example&) { return true; }});
    return filters;
  }
  const bool with_and = cfg.and_lessons;
  for (int len : cfg.lesson_lengths) {
    filters.push_back({"len<=" + std::to_string(len),
                       [len, with_and](const scan::Example& ex) {
                         if (with_and && and_count(ex) > 0) return false;
                         return static_cast<int>(ex.command.size()) <= len;
                       }});
  }
  if (with_and) {
    int max_and = 0;
    for (const auto& ex : train) max_and = std::max(max_and, and_count(ex));
    filters.push_back({"and=0", [](const scan::Example& ex) {
                         return and_count(ex) == 0;
                       }});
    for (int k = 1; k <= max_and; ++k) {
      filters.push_back({"and<=" + std::to_string(k),
                         [k](const scan::Example& ex) {
                           return and_count(ex) <= k;
                         }});
    }
  } else {
    filters.push_back({"all", [](const scan::Example&) { return true; }});
  }
  return filters;
}

}  // namespace

CurriculumResult Trainer::run_curriculum(const scan::DatasetSplit& split,
                                         Rng& rng, const RunHooks& hooks) {
  CurriculumResult result;
  const std::vector<LessonFilter> filters = build_filters(cfg_, split.train);

  std::size_t prev_pool = 0;
  int lesson_idx = -1;
  for (std::size_t f = 0; f < filters.size(); ++f) {
    std::vector<const scan::Example*> pool;
    std::vector<const scan::Example*> dev_pool;
    for (const auto& ex : split.train) {
      if (filters[f].accept(ex)) pool.push_back(&ex);
    }
    for (const auto& ex : split.dev) {
      if (filters[f].accept(ex)) dev_pool.push_back(&ex);
    }
    if (pool.empty() || (f + 1 < filters.size() && pool.size() == prev_pool)) {
      continue;  // lesson adds nothing new
    }
    prev_pool = pool.size();
    ++lesson_idx;

    const double e_weight = lesson_entropy_weight(cfg_, lesson_idx);
    LessonSummary summary;
    summary.label = filters[f].label;
    summary.pool_size = pool.size();

    for (int epoch = 0; epoch < cfg_.epoch_cap; ++epoch) {
      std::vector<const scan::Example*> order = pool;
      rng.shuffle(order);
      for (std::size_t i = 0; i < order.size(); ++i) {
        UpdateStats st = update_example(*order[i], e_weight, rng);
        ++result.updates;
        if (st.skipped) ++result.skipped;
        if (hooks.metrics != nullptr) {
          (*hooks.metrics) << lesson_idx << ' ' << epoch << ' ' << i << ' '
                           << st.mean_reward << ' ' << (st.sampled_exact ? 1 : 0)
                           << '\n';
        }
      }
      summary.epochs = epoch + 1;
      summary.accuracy =
          exact_match_accuracy(model_, dev_pool.empty() ? pool : dev_pool);
      if (summary.accuracy >= cfg_.advance_accuracy) {
        summary.converged = true;
        break;
      }
    }
    if (!summary.converged) {
      result.warnings.push_back("lesson " + summary.label +
                                " hit the epoch cap at accuracy " +
                                std::to_string(summary.accuracy));
    }
    result.lessons.push_back(summary);
    if (hooks.on_lesson_end) hooks.on_lesson_end(lesson_idx, summary);
  }
  return result;
}

double lesson_entropy_weight(const RunConfig& cfg, int lesson_idx) {
  return cfg.entropy_weight * std::pow(cfg.entropy_anneal, lesson_idx);
}

double exact_match_accuracy(Model& m,
                            const std::vector<const scan::Example*>& set) {
  if (set.empty()) return 0.0;
  std::size_t correct = 0;
  for (const scan::Example* ex : set) {
    if (predict(m, ex->command) == ex->actions) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(set.size());
}

}  // namespace lane
