#include "pcwlad/fft.hpp"

#include <mutex>

#include <fftw3.h>

#include "pcwlad/errors.hpp"

namespace pcwlad {

namespace {

// FFTW's planner is not thread-safe; execution on distinct buffers is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

ComplexImage transform(const ComplexImage& in, int sign) {
    ComplexImage out(in.width, in.height);
    ComplexImage work = in; // FFTW may clobber the input during planning
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_dft_2d(in.height, in.width,
                                reinterpret_cast<fftw_complex*>(work.bins.data()),
                                reinterpret_cast<fftw_complex*>(out.bins.data()),
                                sign, FFTW_ESTIMATE);
    }
    if (!plan)
        throw NumericError("fftw plan creation failed");
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

} // namespace

ComplexImage dft2(const Raster& r) {
    ComplexImage in(r.width(), r.height());
    const auto src = r.samples();
    for (std::size_t i = 0; i < src.size(); ++i)
        in.bins[i] = std::complex<double>(src[i], 0.0);
    return transform(in, FFTW_FORWARD);
}

ComplexImage dft2(const ComplexImage& g) {
    return transform(g, FFTW_FORWARD);
}

ComplexImage idft2(const ComplexImage& g) {
    ComplexImage out = transform(g, FFTW_BACKWARD);
    const double scale = 1.0 / (static_cast<double>(g.width) * g.height);
    for (auto& v : out.bins)
        v *= scale;
    return out;
}

Raster idft2_real(const ComplexImage& g) {
    ComplexImage c = idft2(g);
    Raster r(g.width, g.height);
    auto dst = r.samples();
    for (std::size_t i = 0; i < dst.size(); ++i)
        dst[i] = c.bins[i].real();
    return r;
}

} // namespace pcwlad
