#pragma once

#include <vector>

#include "ensei/modfield.hpp"

namespace ensei::detail {

// In-place iterative radix-2 transform, natural order in and out.
// wtab holds omega^k for k < n/2; caller guarantees n is a power of two.
inline void ntt_pow2_inplace(std::vector<Residue>& x,
                             const std::vector<Residue>& wtab,
                             const FieldSpec& f) {
    std::size_t n = x.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        std::size_t step = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t j = 0; j < len / 2; ++j) {
                Residue w = wtab[j * step];
                Residue u = x[i + j];
                Residue v = f.mul(x[i + j + len / 2], w);
                x[i + j] = f.add(u, v);
                x[i + j + len / 2] = f.sub(u, v);
            }
        }
    }
}

} // namespace ensei::detail
