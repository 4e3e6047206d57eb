#include "faraday/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

#include "faraday/errors.hpp"
#include "faraday/parallel.hpp"

// FFTW backs all transforms. Plans are created once per (size, direction)
// under a mutex with FFTW_ESTIMATE | FFTW_UNALIGNED and executed on caller
// buffers via the new-array interface, which is thread-safe.

namespace faraday::fft {

namespace {

class PlanCache {
public:
    fftw_plan get(std::size_t n, int sign) {
        std::scoped_lock lock(mutex_);
        auto key = std::make_pair(n, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<std::complex<double>> dummy(n);
        fftw_plan p = fftw_plan_dft_1d(int(n), reinterpret_cast<fftw_complex*>(dummy.data()),
                                       reinterpret_cast<fftw_complex*>(dummy.data()), sign,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!p) throw numerical_error("fftw plan creation failed for n=" + std::to_string(n));
        plans_[key] = p;
        return p;
    }

private:
    std::mutex mutex_;
    std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

void execute(std::complex<double>* data, std::size_t n, int sign) {
    if (n == 0) throw numerical_error("fft: empty input");
    fftw_plan p = cache().get(n, sign);
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(data),
                     reinterpret_cast<fftw_complex*>(data));
}

} // namespace

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

void forward(std::complex<double>* data, std::size_t n) { execute(data, n, FFTW_FORWARD); }

void inverse(std::complex<double>* data, std::size_t n) {
    execute(data, n, FFTW_BACKWARD);
    const double s = 1.0 / double(n);
    for (std::size_t i = 0; i < n; ++i) data[i] *= s;
}

namespace {

void transform_2d(std::complex<double>* data, std::size_t ny, std::size_t nx, int sign) {
    fftw_plan row_plan = cache().get(nx, sign);
    parallel_for(std::int64_t(ny), [&](std::int64_t iy) {
        auto* row = reinterpret_cast<fftw_complex*>(data + std::size_t(iy) * nx);
        fftw_execute_dft(row_plan, row, row);
    });
    fftw_plan col_plan = cache().get(ny, sign);
    parallel_for(std::int64_t(nx), [&](std::int64_t ix) {
        std::vector<std::complex<double>> col(ny);
        for (std::size_t iy = 0; iy < ny; ++iy) col[iy] = data[iy * nx + ix];
        fftw_execute_dft(col_plan, reinterpret_cast<fftw_complex*>(col.data()),
                         reinterpret_cast<fftw_complex*>(col.data()));
        for (std::size_t iy = 0; iy < ny; ++iy) data[iy * nx + ix] = col[iy];
    });
}

} // namespace

void forward_2d(std::complex<double>* data, std::size_t ny, std::size_t nx) {
    transform_2d(data, ny, nx, FFTW_FORWARD);
}

void inverse_2d(std::complex<double>* data, std::size_t ny, std::size_t nx) {
    transform_2d(data, ny, nx, FFTW_BACKWARD);
    const double s = 1.0 / double(nx * ny);
    const std::size_t total = nx * ny;
    for (std::size_t i = 0; i < total; ++i) data[i] *= s;
}

std::vector<std::complex<double>> forward_copy(const std::vector<std::complex<double>>& in) {
    std::vector<std::complex<double>> out = in;
    forward(out.data(), out.size());
    return out;
}

} // namespace faraday::fft
