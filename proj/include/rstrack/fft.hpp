#pragma once

#include <vector>

#include "rstrack/grid.hpp"

namespace rstrack {

// Complex grid stored as separate real/imaginary planes, row-major.
struct ComplexGrid {
    int rows = 0;
    int cols = 0;
    std::vector<double> re, im;

    ComplexGrid() = default;
    ComplexGrid(int r, int c)
        : rows(r), cols(c), re(std::size_t(r) * c, 0.0), im(std::size_t(r) * c, 0.0) {}
    std::size_t count() const { return re.size(); }
};

// Forward 2-D DFT of a real grid (unnormalized).
ComplexGrid fft2(const Grid& in);

// Inverse 2-D DFT; returns the real plane scaled by 1/(rows*cols).
Grid ifft2_real(const ComplexGrid& in);

// Circularly shift so the zero-frequency bin lands at (rows/2, cols/2).
Grid fftshift(const Grid& in);

}  // namespace rstrack
