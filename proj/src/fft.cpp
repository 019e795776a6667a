#include "rstrack/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

namespace rstrack {

namespace {

// FFTW plan creation/destruction is not thread-safe; execution of distinct
// plans is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwBuffer {
    fftw_complex* p = nullptr;
    explicit FftwBuffer(std::size_t n) { p = fftw_alloc_complex(n); }
    ~FftwBuffer() { fftw_free(p); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
};

}  // namespace

ComplexGrid fft2(const Grid& in) {
    if (in.empty()) throw std::invalid_argument("fft2: empty grid");
    const std::size_t n = in.count();
    FftwBuffer buf_in(n), buf_out(n);
    for (std::size_t i = 0; i < n; ++i) {
        buf_in.p[i][0] = in.v[i];
        buf_in.p[i][1] = 0.0;
    }
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_dft_2d(in.rows, in.cols, buf_in.p, buf_out.p, FFTW_FORWARD,
                                FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    ComplexGrid out(in.rows, in.cols);
    for (std::size_t i = 0; i < n; ++i) {
        out.re[i] = buf_out.p[i][0];
        out.im[i] = buf_out.p[i][1];
    }
    return out;
}

Grid ifft2_real(const ComplexGrid& in) {
    if (in.count() == 0) throw std::invalid_argument("ifft2_real: empty grid");
    const std::size_t n = in.count();
    FftwBuffer buf_in(n), buf_out(n);
    for (std::size_t i = 0; i < n; ++i) {
        buf_in.p[i][0] = in.re[i];
        buf_in.p[i][1] = in.im[i];
    }
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_dft_2d(in.rows, in.cols, buf_in.p, buf_out.p, FFTW_BACKWARD,
                                FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    Grid out(in.rows, in.cols);
    const double scale = 1.0 / double(n);
    for (std::size_t i = 0; i < n; ++i) out.v[i] = buf_out.p[i][0] * scale;
    return out;
}

Grid fftshift(const Grid& in) {
    Grid out(in.rows, in.cols);
    int dr = in.rows / 2;
    int dc = in.cols / 2;
    for (int r = 0; r < in.rows; ++r) {
        int rr = (r + dr) % in.rows;
        for (int c = 0; c < in.cols; ++c) {
            int cc = (c + dc) % in.cols;
            out.at(rr, cc) = in.at(r, c);
        }
    }
    return out;
}

}  // namespace rstrack
