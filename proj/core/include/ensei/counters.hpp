#pragma once

#include <cstdint>

namespace ensei {

/// Per-thread operation counters. Each protocol party runs on its own thread,
/// so a party's online work is exactly its thread's delta between reset and
/// snapshot. Buckets:
///   ct_ntt     - ring transforms applied to ciphertext elements by the
///                public domain conversions (the butterflies the frequency
///                direct encryption mode eliminates)
///   ring_ntt   - every length-n negacyclic transform, any modulus, any
///                caller (superset of ct_ntt)
///   image_ntt  - 2D image-domain transforms (forward or inverse)
///   hadamard   - slotwise ciphertext-plaintext multiplications
struct TransformCounters {
    std::uint64_t ct_ntt = 0;
    std::uint64_t ring_ntt = 0;
    std::uint64_t image_ntt = 0;
    std::uint64_t hadamard = 0;

    TransformCounters operator-(const TransformCounters& o) const {
        return {ct_ntt - o.ct_ntt, ring_ntt - o.ring_ntt,
                image_ntt - o.image_ntt, hadamard - o.hadamard};
    }
};

TransformCounters& transform_counters();
void reset_transform_counters();

} // namespace ensei
