#pragma once

#include <cstdint>
#include <vector>

#include "ensei/modfield.hpp"

namespace ensei {

enum class TensorDomain { Time, Frequency };
enum class ConvType { Same, Valid };

/// Signed integer matrix, row-major. Inputs, weights, and recovered shares
/// all travel in this shape.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::int64_t> data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0) {}
    std::int64_t& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    std::int64_t at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    bool operator==(const Mat&) const = default;
};

/// Padded-grid bookkeeping for one convolution. Padded lengths are the
/// smallest power of two >= dim + filter - 1 when that length divides
/// p_N - 1 (radix-2 fast path); otherwise the smallest divisor of p_N - 1
/// that fits (direct path).
struct ConvGeometry {
    std::size_t image_h = 0, image_w = 0;
    std::size_t filter_h = 0, filter_w = 0;
    ConvType conv_type = ConvType::Valid;
    std::size_t padded_h = 0, padded_w = 0;

    std::size_t out_h() const {
        return conv_type == ConvType::Same ? image_h : image_h - filter_h + 1;
    }
    std::size_t out_w() const {
        return conv_type == ConvType::Same ? image_w : image_w - filter_w + 1;
    }
    // Crop origin inside the full linear-convolution grid. Same-type crops
    // center with top-left bias on ties.
    std::size_t crop_r0() const {
        return conv_type == ConvType::Same ? (filter_h - 1) / 2 : filter_h - 1;
    }
    std::size_t crop_c0() const {
        return conv_type == ConvType::Same ? (filter_w - 1) / 2 : filter_w - 1;
    }
    bool operator==(const ConvGeometry&) const = default;
};

ConvGeometry make_geometry(std::size_t image_h, std::size_t image_w,
                           std::size_t filter_h, std::size_t filter_w,
                           ConvType type, const FieldSpec& field);

/// 2D array of residues over the image modulus, tagged with its domain.
struct FreqTensor {
    std::vector<Residue> data; // row-major, rows*cols entries
    std::size_t rows = 0;
    std::size_t cols = 0;
    FieldSpec field;
    TensorDomain domain = TensorDomain::Time;

    Residue& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    Residue at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// y_k = sum_i x_i w^{ik} mod p. Radix-2 fast path for power-of-two lengths,
/// O(L^2) direct evaluation otherwise. Throws BadRoot unless w is a primitive
/// L-th root of unity.
std::vector<Residue> ntt_1d(const std::vector<Residue>& x, Residue omega,
                            const FieldSpec& f);

/// Exact inverse: ntt_1d with w^{-1} followed by scaling with L^{-1}.
std::vector<Residue> intt_1d(const std::vector<Residue>& y, Residue omega,
                             const FieldSpec& f);

/// Separable 2D transform: rows then columns. Flips the domain tag.
FreqTensor ntt_2d(const FreqTensor& t);
FreqTensor intt_2d(const FreqTensor& t);

/// Embeds the signed image at the origin of the padded grid, centered
/// residue encoding.
FreqTensor pad_image(const Mat& raw, const ConvGeometry& g, const FieldSpec& f);

/// Same embedding for values that are already residues mod f.
FreqTensor pad_residues(const std::vector<Residue>& vals, std::size_t rows,
                        std::size_t cols, const ConvGeometry& g,
                        const FieldSpec& f);

/// Element-wise product of two frequency tensors of identical geometry.
FreqTensor freq_hadamard(const FreqTensor& a, const FreqTensor& b);

/// Ground truth: direct nested-loop linear convolution (flipped kernel),
/// reduced mod p, cropped per conv_type. Output entries are residues.
std::vector<Residue> conv_oracle(const Mat& image, const Mat& filter,
                                 const ConvGeometry& g, const FieldSpec& f);

/// Frequency-domain convolution of one image/filter pair on the padded grid;
/// returns the cropped result as residues. Used by tests and the reference
/// pipeline; the protocol reproduces the same values obliviously.
std::vector<Residue> fdconv(const Mat& image, const Mat& filter,
                            const ConvGeometry& g, const FieldSpec& f);

/// Flattens row-major / reassembles. Helpers for slot packing.
std::vector<Residue> flatten(const FreqTensor& t);
FreqTensor unflatten(const std::vector<Residue>& v, std::size_t rows,
                     std::size_t cols, const FieldSpec& f, TensorDomain domain);

} // namespace ensei
