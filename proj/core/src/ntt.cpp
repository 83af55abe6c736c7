#include "ensei/ntt.hpp"

#include <algorithm>

#include "ensei/counters.hpp"
#include "ntt_kernel.hpp"

namespace ensei {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void check_primitive_root(Residue omega, std::size_t len, const FieldSpec& f) {
    std::uint64_t l = static_cast<std::uint64_t>(len);
    if ((f.modulus() - 1) % l != 0 || f.pow(omega, l) != 1)
        throw BadRoot("omega is not an L-th root of unity");
    for (std::uint64_t p : distinct_prime_factors(l)) {
        if (f.pow(omega, l / p) == 1)
            throw BadRoot("omega is not primitive");
    }
}

// Radix-2 transform via the shared kernel, natural-order in and out.
void ntt_pow2(std::vector<Residue>& x, Residue omega, const FieldSpec& f) {
    std::size_t n = x.size();
    std::vector<Residue> wtab(n / 2);
    if (n >= 2) {
        wtab[0] = 1;
        for (std::size_t k = 1; k < n / 2; ++k) wtab[k] = f.mul(wtab[k - 1], omega);
    }
    detail::ntt_pow2_inplace(x, wtab, f);
}

std::vector<Residue> ntt_direct(const std::vector<Residue>& x, Residue omega,
                                const FieldSpec& f) {
    std::size_t n = x.size();
    std::vector<Residue> y(n, 0);
    std::vector<Residue> wpow(n);
    wpow[0] = 1;
    for (std::size_t k = 1; k < n; ++k) wpow[k] = f.mul(wpow[k - 1], omega);
    for (std::size_t k = 0; k < n; ++k) {
        Residue acc = 0;
        for (std::size_t i = 0; i < n; ++i)
            acc = f.add(acc, f.mul(x[i], wpow[(i * k) % n]));
        y[k] = acc;
    }
    return y;
}

std::size_t choose_padded_len(std::size_t min_len, const FieldSpec& f) {
    std::uint64_t order = f.modulus() - 1;
    std::size_t p2 = 1;
    while (p2 < min_len) p2 <<= 1;
    if (order % p2 == 0) return p2;
    std::size_t cap = static_cast<std::size_t>(std::min<std::uint64_t>(order, 1u << 20));
    for (std::size_t l = min_len; l <= cap; ++l) {
        if (order % l == 0) return l;
    }
    throw BadGeometry("no transform length >= requested divides p-1");
}

} // namespace

ConvGeometry make_geometry(std::size_t image_h, std::size_t image_w,
                           std::size_t filter_h, std::size_t filter_w,
                           ConvType type, const FieldSpec& field) {
    if (image_h == 0 || image_w == 0 || filter_h == 0 || filter_w == 0)
        throw BadGeometry("zero dimension");
    if (type == ConvType::Valid && (filter_h > image_h || filter_w > image_w))
        throw BadGeometry("valid convolution needs filter <= image");
    ConvGeometry g;
    g.image_h = image_h;
    g.image_w = image_w;
    g.filter_h = filter_h;
    g.filter_w = filter_w;
    g.conv_type = type;
    g.padded_h = choose_padded_len(image_h + filter_h - 1, field);
    g.padded_w = choose_padded_len(image_w + filter_w - 1, field);
    return g;
}

std::vector<Residue> ntt_1d(const std::vector<Residue>& x, Residue omega,
                            const FieldSpec& f) {
    check_primitive_root(omega, x.size(), f);
    if (is_pow2(x.size())) {
        std::vector<Residue> y = x;
        ntt_pow2(y, omega, f);
        return y;
    }
    return ntt_direct(x, omega, f);
}

std::vector<Residue> intt_1d(const std::vector<Residue>& y, Residue omega,
                             const FieldSpec& f) {
    check_primitive_root(omega, y.size(), f);
    std::vector<Residue> x;
    Residue winv = f.inv(omega);
    if (is_pow2(y.size())) {
        x = y;
        ntt_pow2(x, winv, f);
    } else {
        x = ntt_direct(y, winv, f);
    }
    Residue ninv = f.inv(static_cast<Residue>(y.size() % f.modulus()));
    for (Residue& v : x) v = f.mul(v, ninv);
    return x;
}

namespace {

FreqTensor transform_2d(const FreqTensor& t, bool inverse) {
    const FieldSpec& f = t.field;
    if ((f.modulus() - 1) % t.rows != 0 || (f.modulus() - 1) % t.cols != 0)
        throw BadGeometry("tensor dims must divide p-1");
    Residue wr = find_root_of_unity(t.rows, f);
    Residue wc = find_root_of_unity(t.cols, f);

    FreqTensor out = t;
    std::vector<Residue> line;
    line.reserve(std::max(t.rows, t.cols));
    for (std::size_t r = 0; r < t.rows; ++r) {
        line.assign(out.data.begin() + r * t.cols, out.data.begin() + (r + 1) * t.cols);
        std::vector<Residue> tr = inverse ? intt_1d(line, wc, f) : ntt_1d(line, wc, f);
        std::copy(tr.begin(), tr.end(), out.data.begin() + r * t.cols);
    }
    line.resize(t.rows);
    for (std::size_t c = 0; c < t.cols; ++c) {
        for (std::size_t r = 0; r < t.rows; ++r) line[r] = out.at(r, c);
        std::vector<Residue> tr = inverse ? intt_1d(line, wr, f) : ntt_1d(line, wr, f);
        for (std::size_t r = 0; r < t.rows; ++r) out.at(r, c) = tr[r];
    }
    transform_counters().image_ntt += 1;
    return out;
}

} // namespace

FreqTensor ntt_2d(const FreqTensor& t) {
    if (t.domain != TensorDomain::Time)
        throw BadGeometry("ntt_2d expects a time-domain tensor");
    FreqTensor out = transform_2d(t, false);
    out.domain = TensorDomain::Frequency;
    return out;
}

FreqTensor intt_2d(const FreqTensor& t) {
    if (t.domain != TensorDomain::Frequency)
        throw BadGeometry("intt_2d expects a frequency-domain tensor");
    FreqTensor out = transform_2d(t, true);
    out.domain = TensorDomain::Time;
    return out;
}

FreqTensor pad_image(const Mat& raw, const ConvGeometry& g, const FieldSpec& f) {
    if (raw.rows != g.image_h || raw.cols != g.image_w)
        throw BadGeometry("image dims do not match geometry");
    FreqTensor t;
    t.rows = g.padded_h;
    t.cols = g.padded_w;
    t.field = f;
    t.domain = TensorDomain::Time;
    t.data.assign(t.rows * t.cols, 0);
    for (std::size_t r = 0; r < raw.rows; ++r)
        for (std::size_t c = 0; c < raw.cols; ++c)
            t.at(r, c) = encode_signed(raw.at(r, c), f);
    return t;
}

FreqTensor pad_residues(const std::vector<Residue>& vals, std::size_t rows,
                        std::size_t cols, const ConvGeometry& g,
                        const FieldSpec& f) {
    if (vals.size() != rows * cols || rows != g.image_h || cols != g.image_w)
        throw BadGeometry("share dims do not match geometry");
    FreqTensor t;
    t.rows = g.padded_h;
    t.cols = g.padded_w;
    t.field = f;
    t.domain = TensorDomain::Time;
    t.data.assign(t.rows * t.cols, 0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            t.at(r, c) = f.reduce(vals[r * cols + c]);
    return t;
}

FreqTensor freq_hadamard(const FreqTensor& a, const FreqTensor& b) {
    if (a.rows != b.rows || a.cols != b.cols || a.field != b.field ||
        a.domain != TensorDomain::Frequency || b.domain != TensorDomain::Frequency)
        throw GeometryMismatch("hadamard operands disagree");
    FreqTensor out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = a.field.mul(a.data[i], b.data[i]);
    return out;
}

std::vector<Residue> conv_oracle(const Mat& image, const Mat& filter,
                                 const ConvGeometry& g, const FieldSpec& f) {
    if (image.rows != g.image_h || image.cols != g.image_w ||
        filter.rows != g.filter_h || filter.cols != g.filter_w)
        throw BadGeometry("operand dims do not match geometry");
    std::size_t full_h = g.image_h + g.filter_h - 1;
    std::size_t full_w = g.image_w + g.filter_w - 1;
    // full linear convolution: y[r][c] = sum u[i][j] * w[r-i][c-j]
    std::vector<Residue> full(full_h * full_w, 0);
    for (std::size_t i = 0; i < g.image_h; ++i) {
        for (std::size_t j = 0; j < g.image_w; ++j) {
            Residue u = encode_signed(image.at(i, j), f);
            if (u == 0) continue;
            for (std::size_t a = 0; a < g.filter_h; ++a) {
                for (std::size_t b = 0; b < g.filter_w; ++b) {
                    Residue w = encode_signed(filter.at(a, b), f);
                    Residue& y = full[(i + a) * full_w + (j + b)];
                    y = f.add(y, f.mul(u, w));
                }
            }
        }
    }
    std::size_t oh = g.out_h(), ow = g.out_w();
    std::size_t r0 = g.crop_r0(), c0 = g.crop_c0();
    std::vector<Residue> out(oh * ow);
    for (std::size_t r = 0; r < oh; ++r)
        for (std::size_t c = 0; c < ow; ++c)
            out[r * ow + c] = full[(r + r0) * full_w + (c + c0)];
    return out;
}

std::vector<Residue> fdconv(const Mat& image, const Mat& filter,
                            const ConvGeometry& g, const FieldSpec& f) {
    FreqTensor u = ntt_2d(pad_image(image, g, f));
    ConvGeometry fg = g;
    std::swap(fg.image_h, fg.filter_h);
    std::swap(fg.image_w, fg.filter_w);
    FreqTensor w = ntt_2d(pad_image(filter, fg, f));
    FreqTensor y = intt_2d(freq_hadamard(u, w));
    std::size_t oh = g.out_h(), ow = g.out_w();
    std::size_t r0 = g.crop_r0(), c0 = g.crop_c0();
    std::vector<Residue> out(oh * ow);
    for (std::size_t r = 0; r < oh; ++r)
        for (std::size_t c = 0; c < ow; ++c)
            out[r * ow + c] = y.at(r + r0, c + c0);
    return out;
}

std::vector<Residue> flatten(const FreqTensor& t) { return t.data; }

FreqTensor unflatten(const std::vector<Residue>& v, std::size_t rows,
                     std::size_t cols, const FieldSpec& f, TensorDomain domain) {
    if (v.size() != rows * cols) throw BadGeometry("unflatten size mismatch");
    FreqTensor t;
    t.rows = rows;
    t.cols = cols;
    t.field = f;
    t.domain = domain;
    t.data = v;
    return t;
}

} // namespace ensei
