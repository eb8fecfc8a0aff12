#include "lane/model.hpp"

#include <algorithm>

namespace lane {

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    index_[tokens_[i]] = static_cast<int>(i);
  }
}

int Vocab::id(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) throw VocabError("unknown token: " + token);
  return it->second;
}

Model::Model(ModelConfig cfg, Vocab src_vocab, Vocab dst_vocab)
    : cfg_(cfg), src_vocab_(std::move(src_vocab)), dst_vocab_(std::move(dst_vocab)) {
  const int d = cfg_.dim;
  const int p = cfg_.pool_size;
  const int a = dst_vocab_.size();

  theta_.add("emb", {src_vocab_.size(), d});
  theta_.add("src_keys", {p, d});
  theta_.add("dst_keys", {p, d});
  theta_.add("leaf_w", {2 * d, d});
  theta_.add("leaf_b", {2 * d, 1});
  theta_.add("tree_w", {5 * d, 2 * d});
  theta_.add("tree_b", {5 * d, 1});
  theta_.add("query", {2 * d, 1});
  theta_.add("check_w", {2 * d, 1});
  theta_.add("check_b", {1, 1});

  phi_.add("enc_w", {4 * d, 2 * d});
  phi_.add("enc_b", {4 * d, 1});
  phi_.add("dec_w", {4 * d, 2 * d});
  phi_.add("dec_b", {4 * d, 1});
  phi_.add("out_w", {d, 2 * d});
  phi_.add("out_b", {d, 1});
  phi_.add("out_emb", {a + 1, d});
  phi_.add("start", {d, 1});
}

void Model::init_params(Rng& rng) {
  auto is_bias = [](const std::string& name) {
    return name.size() >= 2 && name.compare(name.size() - 2, 2, "_b") == 0;
  };
  for (ParameterStore* store : {&theta_, &phi_}) {
    for (const auto& up : store->items()) {
      Parameter& prm = *up;
      if (is_bias(prm.name)) {
        std::fill(prm.value.begin(), prm.value.end(), 0.0);
      } else {
        for (double& v : prm.value) v = rng.uniform(-0.08, 0.08);
      }
    }
  }
}

Parameter& Model::p(const std::string& name) {
  if (theta_.contains(name)) return theta_.at(name);
  return phi_.at(name);
}

expr::SrcExp Model::src_exp(const std::vector<std::string>& tokens) const {
  expr::SrcExp out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back({false, src_vocab_.id(t)});
  return out;
}

std::vector<std::string> Model::action_tokens(const expr::DstExp& constant) const {
  std::vector<std::string> out;
  out.reserve(constant.size());
  for (const auto& s : constant) {
    if (s.is_var) throw ContractError("action_tokens: expression not constant");
    out.push_back(dst_vocab_.token(s.id));
  }
  return out;
}

namespace {
std::string var_name(int idx, bool upper) {
  // x, y, z, then v3, v4, ...
  static const char low[] = {'x', 'y', 'z'};
  if (idx < 3) {
    char c = low[idx];
    if (upper) c = static_cast<char>(c - 'a' + 'A');
    return std::string("$") + c;
  }
  return std::string("$") + (upper ? 'V' : 'v') + std::to_string(idx);
}
}  // namespace

std::string render(const Model& m, const expr::SrcExp& e) {
  std::string out;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (i) out += ' ';
    out += e[i].is_var ? var_name(e[i].id, false) : m.src_vocab().token(e[i].id);
  }
  return out;
}

std::string render(const Model& m, const expr::DstExp& e) {
  std::string out;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (i) out += ' ';
    out += e[i].is_var ? var_name(e[i].id, true) : m.dst_vocab().token(e[i].id);
  }
  return out;
}

}  // namespace lane
