#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "lane/expressions.hpp"
#include "lane/rng.hpp"
#include "lane/tensor.hpp"

namespace lane {

struct VocabError : Error {
  using Error::Error;
};

class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(std::vector<std::string> tokens);

  int id(const std::string& token) const;
  bool contains(const std::string& token) const { return index_.count(token); }
  const std::string& token(int id) const { return tokens_.at(id); }
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Sorted-unique vocabulary over both sides of the examples.
  template <typename Examples>
  static std::pair<Vocab, Vocab> build(const Examples& examples) {
    std::vector<std::string> src, dst;
    for (const auto& ex : examples) {
      src.insert(src.end(), ex.command.begin(), ex.command.end());
      dst.insert(dst.end(), ex.actions.begin(), ex.actions.end());
    }
    auto dedupe = [](std::vector<std::string>& v) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    dedupe(src);
    dedupe(dst);
    return {Vocab(std::move(src)), Vocab(std::move(dst))};
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct ModelConfig {
  int dim = 128;           // word embeddings, hidden states, key vectors
  int pool_size = 3;       // memory items
  int max_steps = 20;      // rollout step cap
  int skeleton_cap = 16;   // decoded skeleton length cap
};

// Decision mode for both policies.
enum class Mode { kSample, kGreedy, kReplay };

// Parameter layout for the two policies. theta: tree encoder, query, check,
// word embeddings and memory key vectors. phi: encoder/decoder/attention/
// output weights. The stores carry different learning-rate multipliers.
class Model {
 public:
  Model(ModelConfig cfg, Vocab src_vocab, Vocab dst_vocab);

  void init_params(Rng& rng);  // uniform(-0.08, 0.08) weights, zero biases

  const ModelConfig& cfg() const { return cfg_; }
  const Vocab& src_vocab() const { return src_vocab_; }
  const Vocab& dst_vocab() const { return dst_vocab_; }

  ParameterStore& theta() { return theta_; }
  ParameterStore& phi() { return phi_; }
  const ParameterStore& theta() const { return theta_; }
  const ParameterStore& phi() const { return phi_; }

  Parameter& p(const std::string& name);

  // Decoder output symbol space: [0, A) action words, A end marker,
  // (A, A+pool] destination variables.
  int eos_id() const { return dst_vocab_.size(); }
  int out_symbol_count() const { return dst_vocab_.size() + 1 + cfg_.pool_size; }
  bool symbol_is_var(int sym) const { return sym > eos_id(); }
  int symbol_var_index(int sym) const { return sym - eos_id() - 1; }
  int var_symbol(int item) const { return eos_id() + 1 + item; }

  expr::SrcExp src_exp(const std::vector<std::string>& tokens) const;
  std::vector<std::string> action_tokens(const expr::DstExp& constant) const;

 private:
  ModelConfig cfg_;
  Vocab src_vocab_;
  Vocab dst_vocab_;
  ParameterStore theta_;
  ParameterStore phi_;
};

// Renders an expression for logs and dumps: words/actions by token, source
// variables as $x,$y,$z,..., destination variables as $X,$Y,$Z,...
std::string render(const Model& m, const expr::SrcExp& e);
std::string render(const Model& m, const expr::DstExp& e);

}  // namespace lane
