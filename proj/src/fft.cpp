#include "dualfocus/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <new>
#include <tuple>

namespace dualfocus::fft {

namespace detail {
void* aligned_alloc_bytes(std::size_t bytes) {
    void* p = fftw_malloc(bytes == 0 ? 1 : bytes);
    if (!p) throw std::bad_alloc();
    return p;
}
void aligned_free(void* p) noexcept { fftw_free(p); }
} // namespace detail

namespace {

enum class PlanKind { r2c_2d, c2r_2d, r2c_rows, c2r_1d };

// FFTW planning is not thread-safe; execution on fresh arrays is. Plans are
// built with FFTW_ESTIMATE so the chosen algorithm, and hence every rounding
// step, is identical across runs.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(PlanKind kind, int a, int b) {
        std::lock_guard lock(mutex_);
        auto key = std::make_tuple(kind, a, b);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        fftw_plan plan = make(kind, a, b);
        plans_.emplace(key, plan);
        return plan;
    }

    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

private:
    static fftw_plan make(PlanKind kind, int a, int b) {
        const unsigned flags = FFTW_ESTIMATE;
        switch (kind) {
        case PlanKind::r2c_2d: {
            AlignedBuffer<double> in(static_cast<std::size_t>(a) * b);
            AlignedBuffer<Complex> out(static_cast<std::size_t>(a) * (b / 2 + 1));
            return fftw_plan_dft_r2c_2d(a, b, in.data(), reinterpret_cast<fftw_complex*>(out.data()), flags);
        }
        case PlanKind::c2r_2d: {
            AlignedBuffer<Complex> in(static_cast<std::size_t>(a) * (b / 2 + 1));
            AlignedBuffer<double> out(static_cast<std::size_t>(a) * b);
            return fftw_plan_dft_c2r_2d(a, b, reinterpret_cast<fftw_complex*>(in.data()), out.data(),
                                        flags | FFTW_DESTROY_INPUT);
        }
        case PlanKind::r2c_rows: {
            const int n[] = {b};
            AlignedBuffer<double> in(static_cast<std::size_t>(a) * b);
            AlignedBuffer<Complex> out(static_cast<std::size_t>(a) * (b / 2 + 1));
            return fftw_plan_many_dft_r2c(1, n, a, in.data(), nullptr, 1, b,
                                          reinterpret_cast<fftw_complex*>(out.data()), nullptr, 1, b / 2 + 1,
                                          flags);
        }
        case PlanKind::c2r_1d: {
            AlignedBuffer<Complex> in(static_cast<std::size_t>(b / 2 + 1));
            AlignedBuffer<double> out(static_cast<std::size_t>(b));
            return fftw_plan_dft_c2r_1d(b, reinterpret_cast<fftw_complex*>(in.data()), out.data(),
                                        flags | FFTW_DESTROY_INPUT);
        }
        }
        return nullptr;
    }

    std::mutex mutex_;
    std::map<std::tuple<PlanKind, int, int>, fftw_plan> plans_;
};

fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

} // namespace

Spectrum2d forward_2d(const Image& img) {
    const int h = img.height();
    const int w = img.width();
    AlignedBuffer<double> in(img.size());
    std::copy(img.pixels().begin(), img.pixels().end(), in.begin());
    Spectrum2d spec{h, w, AlignedBuffer<Complex>(static_cast<std::size_t>(h) * (w / 2 + 1))};
    fftw_execute_dft_r2c(PlanCache::instance().get(PlanKind::r2c_2d, h, w), in.data(), as_fftw(spec.bins.data()));
    return spec;
}

Image inverse_2d(const Spectrum2d& spec) {
    const int h = spec.height;
    const int w = spec.width;
    AlignedBuffer<Complex> in(spec.bins);
    AlignedBuffer<double> out(static_cast<std::size_t>(h) * w);
    fftw_execute_dft_c2r(PlanCache::instance().get(PlanKind::c2r_2d, h, w), as_fftw(in.data()), out.data());
    Image img(w, h);
    const double scale = 1.0 / (static_cast<double>(h) * w);
    auto px = img.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = out[i] * scale;
    return img;
}

void forward_rows(const AlignedBuffer<double>& in, AlignedBuffer<Complex>& out, int rows, int n) {
    fftw_execute_dft_r2c(PlanCache::instance().get(PlanKind::r2c_rows, rows, n),
                         const_cast<double*>(in.data()), as_fftw(out.data()));
}

void inverse_1d(AlignedBuffer<Complex>& in, AlignedBuffer<double>& out, int n) {
    fftw_execute_dft_c2r(PlanCache::instance().get(PlanKind::c2r_1d, 0, n), as_fftw(in.data()), out.data());
}

} // namespace dualfocus::fft
