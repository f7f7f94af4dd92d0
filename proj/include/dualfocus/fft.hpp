#pragma once

#include "dualfocus/image.hpp"

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace dualfocus::fft {

using Complex = std::complex<double>;

namespace detail {
void* aligned_alloc_bytes(std::size_t bytes);
void aligned_free(void* p) noexcept;
struct AlignedDeleter {
    void operator()(void* p) const noexcept { aligned_free(p); }
};
} // namespace detail

/// SIMD-aligned heap array, suitable for FFTW new-array execution.
template <class T>
class AlignedBuffer {
public:
    AlignedBuffer() = default;
    explicit AlignedBuffer(std::size_t n)
        : ptr_(static_cast<T*>(detail::aligned_alloc_bytes(n * sizeof(T)))), size_(n) {
        for (std::size_t i = 0; i < n; ++i) ptr_.get()[i] = T{};
    }
    AlignedBuffer(const AlignedBuffer& other) : AlignedBuffer(other.size_) {
        std::copy(other.begin(), other.end(), begin());
    }
    AlignedBuffer& operator=(const AlignedBuffer& other) {
        if (this != &other) {
            AlignedBuffer tmp(other);
            *this = std::move(tmp);
        }
        return *this;
    }
    AlignedBuffer(AlignedBuffer&&) noexcept = default;
    AlignedBuffer& operator=(AlignedBuffer&&) noexcept = default;

    T* data() noexcept { return ptr_.get(); }
    const T* data() const noexcept { return ptr_.get(); }
    std::size_t size() const noexcept { return size_; }
    T& operator[](std::size_t i) noexcept { return ptr_.get()[i]; }
    const T& operator[](std::size_t i) const noexcept { return ptr_.get()[i]; }
    T* begin() noexcept { return data(); }
    T* end() noexcept { return data() + size_; }
    const T* begin() const noexcept { return data(); }
    const T* end() const noexcept { return data() + size_; }
    std::span<T> span() noexcept { return {data(), size_}; }
    std::span<const T> span() const noexcept { return {data(), size_}; }

private:
    std::unique_ptr<T, detail::AlignedDeleter> ptr_;
    std::size_t size_ = 0;
};

/// Half-plane spectrum of a real height x width image (FFTW r2c layout).
struct Spectrum2d {
    int height = 0;
    int width = 0;
    AlignedBuffer<Complex> bins; // height * (width/2 + 1)

    int half_width() const noexcept { return width / 2 + 1; }
    Complex& at(int ky, int kx) noexcept { return bins[static_cast<std::size_t>(ky) * half_width() + kx]; }
    const Complex& at(int ky, int kx) const noexcept {
        return bins[static_cast<std::size_t>(ky) * half_width() + kx];
    }
};

/// Signed frequency in cycles/sample for DFT bin k of an n-point transform.
inline double signed_frequency(int k, int n) noexcept {
    return (k <= n / 2 ? k : k - n) / static_cast<double>(n);
}

Spectrum2d forward_2d(const Image& img);
/// Inverse transform, normalized so inverse_2d(forward_2d(x)) == x.
Image inverse_2d(const Spectrum2d& spec);

/// Unnormalized r2c transform of each row of a rows x n aligned array.
void forward_rows(const AlignedBuffer<double>& in, AlignedBuffer<Complex>& out, int rows, int n);
/// Unnormalized c2r transform of a single n-point half spectrum. Clobbers `in`.
void inverse_1d(AlignedBuffer<Complex>& in, AlignedBuffer<double>& out, int n);

} // namespace dualfocus::fft
