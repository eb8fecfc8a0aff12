#include "lane/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

namespace lane::kernels {

#if defined(LANE_BUILD_AVX2)
const Ops* avx2_impl();
#endif

namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Ops* resolve(const std::string& name) {
  if (name == "scalar") return &scalar();
  if (name == "avx2") return avx2();
  if (name == "auto" || name.empty()) {
    if (const Ops* v = avx2()) return v;
    return &scalar();
  }
  return nullptr;
}

const Ops** active_slot() {
  static const Ops* slot = nullptr;
  return &slot;
}

}  // namespace

const Ops* avx2() {
#if defined(LANE_BUILD_AVX2)
  if (cpu_has_avx2_fma()) return avx2_impl();
#endif
  return nullptr;
}

const Ops& active() {
  const Ops** slot = active_slot();
  if (*slot == nullptr) {
    const char* env = std::getenv("LANE_KERNELS");
    const Ops* chosen = resolve(env ? env : "auto");
    if (chosen == nullptr) {
      // Unknown or unavailable request in the environment falls back to auto.
      chosen = resolve("auto");
    }
    *slot = chosen;
  }
  return **slot;
}

void set_active(const char* name) {
  const Ops* chosen = resolve(name ? name : "auto");
  if (chosen == nullptr) {
    throw std::runtime_error(std::string("kernel lane unavailable: ") +
                             (name ? name : "(null)"));
  }
  *active_slot() = chosen;
}

}  // namespace lane::kernels
