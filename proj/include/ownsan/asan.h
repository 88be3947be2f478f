// SPDX-License-Identifier: Apache-2.0
//
// Shadow-memory baseline: objects are laid out in one linear cell space with
// poisoned red zones on both sides, and freed regions wait in a FIFO
// quarantine before their cells may be handed out again.

#ifndef OWNSAN_ASAN_H
#define OWNSAN_ASAN_H

#include <cstddef>

#include "ownsan/runtime.h"

namespace ownsan {

struct AsanConfig {
  size_t redzone = 16;   // cells on each side of an object
  size_t quarantine = 4; // freed regions held back from reuse
  size_t max_cells = size_t{1} << 24;
};

ExecutionReport execute_asan(const Program &p, const AsanConfig &config,
                             const ExecOptions &opts = {});

} // namespace ownsan

#endif // OWNSAN_ASAN_H
