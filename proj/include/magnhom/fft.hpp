#pragma once

// In-place iterative radix-2 complex FFT and a 3D transform built from it.
// Power-of-two sizes only; the demag module pads to the next power of two.

#include <complex>
#include <stdexcept>
#include <vector>

#include "magnhom/geometry.hpp"

namespace magnhom {

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

inline int next_power_of_two(int n) {
    int m = 1;
    while (m < n) m *= 2;
    return m;
}

namespace fftcore {

using cplx = std::complex<double>;

// Plan for a single 1D size: bit-reversal permutation and forward twiddles.
struct Plan1D {
    int n = 1;
    std::vector<int> bitrev;
    std::vector<cplx> twiddle;  // exp(-2 pi i k / n), k < n/2

    explicit Plan1D(int n_) : n(n_) {
        if (!is_power_of_two(n)) throw std::invalid_argument("FFT size must be a power of two");
        bitrev.resize(n);
        int log2n = 0;
        while ((1 << log2n) < n) ++log2n;
        for (int i = 0; i < n; ++i) {
            int r = 0;
            for (int b = 0; b < log2n; ++b)
                if (i & (1 << b)) r |= 1 << (log2n - 1 - b);
            bitrev[i] = r;
        }
        twiddle.resize(std::max(1, n / 2));
        const double two_pi = 2.0 * 3.14159265358979323846;
        for (int k = 0; k < n / 2; ++k)
            twiddle[k] = cplx(std::cos(two_pi * k / n), -std::sin(two_pi * k / n));
    }

    // Transform a contiguous line in place. inverse=true applies the
    // conjugate transform without the 1/n scaling.
    void transform(cplx* a, bool inverse) const {
        for (int i = 0; i < n; ++i) {
            int r = bitrev[i];
            if (i < r) std::swap(a[i], a[r]);
        }
        for (int len = 2; len <= n; len <<= 1) {
            int half = len >> 1;
            int step = n / len;
            for (int base = 0; base < n; base += len) {
                for (int k = 0; k < half; ++k) {
                    cplx w = twiddle[static_cast<std::size_t>(k) * step];
                    if (inverse) w = std::conj(w);
                    cplx u = a[base + k];
                    cplx v = a[base + k + half] * w;
                    a[base + k] = u + v;
                    a[base + k + half] = u - v;
                }
            }
        }
    }
};

// 3D transform over a flat array indexed (i*ny + j)*nz + k.
struct Fft3 {
    GridSize size;
    Plan1D px, py, pz;

    explicit Fft3(const GridSize& s) : size(s), px(s.nx), py(s.ny), pz(s.nz) {}

    void run(std::vector<cplx>& a, bool inverse) const {
        if (a.size() != size.count()) throw std::invalid_argument("FFT buffer size mismatch");
        const int nx = size.nx, ny = size.ny, nz = size.nz;
        // z lines are contiguous
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < ny; ++j) pz.transform(&a[size.flat(i, j, 0)], inverse);
        // y lines, gathered through scratch
        std::vector<cplx> line(std::max(nx, ny));
        for (int i = 0; i < nx; ++i)
            for (int k = 0; k < nz; ++k) {
                for (int j = 0; j < ny; ++j) line[j] = a[size.flat(i, j, k)];
                py.transform(line.data(), inverse);
                for (int j = 0; j < ny; ++j) a[size.flat(i, j, k)] = line[j];
            }
        // x lines
        for (int j = 0; j < ny; ++j)
            for (int k = 0; k < nz; ++k) {
                for (int i = 0; i < nx; ++i) line[i] = a[size.flat(i, j, k)];
                px.transform(line.data(), inverse);
                for (int i = 0; i < nx; ++i) a[size.flat(i, j, k)] = line[i];
            }
        if (inverse) {
            double scale = 1.0 / static_cast<double>(size.count());
            for (cplx& c : a) c *= scale;
        }
    }

    void forward(std::vector<cplx>& a) const { run(a, false); }
    void inverse(std::vector<cplx>& a) const { run(a, true); }
};

}  // namespace fftcore

}  // namespace magnhom
