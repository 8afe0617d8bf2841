#ifndef TABFE_HASH_H_
#define TABFE_HASH_H_

#include <cstdint>
#include <string_view>

namespace tabfe {

inline constexpr uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr uint64_t kFnvPrime = 0x100000001b3ULL;

// 64-bit FNV-1a. Interaction hashing and schema fingerprints depend on this
// exact function; changing it changes every persisted artifact.
constexpr uint64_t Fnv1a64(std::string_view bytes,
                           uint64_t state = kFnvOffsetBasis) {
  for (const char c : bytes) {
    state ^= static_cast<uint8_t>(c);
    state *= kFnvPrime;
  }
  return state;
}

}  // namespace tabfe

#endif  // TABFE_HASH_H_
