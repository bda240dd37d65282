#pragma once

#include <cstdint>
#include <string_view>

namespace mcqpsy {

// Derives an independent stream seed for one report cell from the master
// seed and a stable cell label, so evaluation order never changes results.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view label);

}  // namespace mcqpsy
