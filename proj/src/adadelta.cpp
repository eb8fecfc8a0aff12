#include "lane/adadelta.hpp"

#include "lane/kernels.hpp"

namespace lane {

void AdaDelta::step(ParameterStore& store) {
  for (const auto& up : store.items()) {
    Parameter& p = *up;
    State& st = states_[&p];
    if (st.eg2.empty()) {
      st.eg2.assign(p.value.size(), 0.0);
      st.ed2.assign(p.value.size(), 0.0);
    }
    kernels::active().adadelta(p.value.data(), st.eg2.data(), st.ed2.data(),
                               p.grad.data(), p.value.size(), rho_, eps_, lr_);
    std::fill(p.grad.begin(), p.grad.end(), 0.0);
  }
}

}  // namespace lane
