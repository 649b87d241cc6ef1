#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "latnet/kernels.hpp"

namespace latnet::kern {

bool avx2_available() { return avx2_ops() != nullptr; }

namespace {

const Ops& select() {
  if (const char* env = std::getenv("LATNET_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return scalar_ops();
    if (std::strcmp(env, "avx2") == 0) {
      if (const Ops* v = avx2_ops()) return *v;
      std::fprintf(stderr, "latnet: LATNET_KERNELS=avx2 requested but unavailable, using scalar\n");
      return scalar_ops();
    }
    std::fprintf(stderr, "latnet: ignoring unknown LATNET_KERNELS value '%s'\n", env);
  }
  if (const Ops* v = avx2_ops()) return *v;
  return scalar_ops();
}

}  // namespace

const Ops& active() {
  static const Ops& chosen = select();
  return chosen;
}

}  // namespace latnet::kern
