// SPDX-License-Identifier: Apache-2.0
//
// Random well-formed programs for oracle testing. Output depends only on
// (seed, size); every program validates and analyzes without error.

#ifndef OWNSAN_GENERATOR_H
#define OWNSAN_GENERATOR_H

#include <cstdint>
#include <string>

namespace ownsan {

inline constexpr size_t kMaxGeneratedSize = 400;

// `size` is the approximate instruction count of the entry function; size 0
// yields an empty main. Throws Error when size exceeds kMaxGeneratedSize.
std::string generate_program(uint64_t seed, size_t size);

} // namespace ownsan

#endif // OWNSAN_GENERATOR_H
