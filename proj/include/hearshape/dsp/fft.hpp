// Copyright 2026 The hearshape Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Thin RAII layer over FFTW. Plans are created once per (kind, size) with
// FFTW_ESTIMATE so that the chosen algorithm, and therefore every rounding
// decision, is the same on every run. Buffers come from fftw_malloc so the
// SIMD alignment of any buffer matches the alignment used at planning time.

#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <new>
#include <utility>
#include <vector>

#include "hearshape/core/error.hpp"

namespace hearshape::fft {

using cplx = std::complex<double>;

template <class T>
struct FftwAllocator {
  using value_type = T;
  FftwAllocator() noexcept = default;
  template <class U>
  FftwAllocator(const FftwAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) {
    if (n == 0) return nullptr;
    void* p = fftw_malloc(n * sizeof(T));
    if (!p) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { fftw_free(p); }
  template <class U>
  bool operator==(const FftwAllocator<U>&) const noexcept { return true; }
};

template <class T>
using AlignedVector = std::vector<T, FftwAllocator<T>>;
using RealBuffer = AlignedVector<double>;
using ComplexBuffer = AlignedVector<cplx>;

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

namespace detail {

enum class Kind { forward, backward, r2c, c2r };

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(Kind kind, std::size_t n) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(kind, n);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    // FFTW's planner is not reentrant; all plan creation happens here under
    // the lock. Executing a plan on fresh arrays is thread-safe.
    const int len = static_cast<int>(n);
    fftw_plan plan = nullptr;
    switch (kind) {
      case Kind::forward:
      case Kind::backward: {
        ComplexBuffer a(n), b(n);
        plan = fftw_plan_dft_1d(len, reinterpret_cast<fftw_complex*>(a.data()),
                                reinterpret_cast<fftw_complex*>(b.data()),
                                kind == Kind::forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                FFTW_ESTIMATE);
        break;
      }
      case Kind::r2c: {
        RealBuffer a(n);
        ComplexBuffer b(n / 2 + 1);
        plan = fftw_plan_dft_r2c_1d(len, a.data(), reinterpret_cast<fftw_complex*>(b.data()),
                                    FFTW_ESTIMATE);
        break;
      }
      case Kind::c2r: {
        ComplexBuffer a(n / 2 + 1);
        RealBuffer b(n);
        plan = fftw_plan_dft_c2r_1d(len, reinterpret_cast<fftw_complex*>(a.data()), b.data(),
                                    FFTW_ESTIMATE | FFTW_DESTROY_INPUT);
        break;
      }
    }
    require(plan != nullptr, Errc::invalid_argument, "FFTW could not plan a transform");
    plans_.emplace(key, plan);
    return plan;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::pair<Kind, std::size_t>, fftw_plan> plans_;
};

inline fftw_complex* raw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace detail

/// Unnormalized forward DFT: out[k] = sum_t in[t] exp(-2 pi i k t / n).
inline void forward(const ComplexBuffer& in, ComplexBuffer& out) {
  const std::size_t n = in.size();
  out.resize(n);
  auto plan = detail::PlanCache::instance().get(detail::Kind::forward, n);
  fftw_execute_dft(plan, detail::raw(const_cast<cplx*>(in.data())), detail::raw(out.data()));
}

/// Inverse DFT including the 1/n factor.
inline void inverse(const ComplexBuffer& in, ComplexBuffer& out) {
  const std::size_t n = in.size();
  out.resize(n);
  auto plan = detail::PlanCache::instance().get(detail::Kind::backward, n);
  fftw_execute_dft(plan, detail::raw(const_cast<cplx*>(in.data())), detail::raw(out.data()));
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& v : out) v *= scale;
}

/// One-sided spectrum of a real signal: n/2 + 1 bins, unnormalized.
inline void forward_real(const RealBuffer& in, ComplexBuffer& out) {
  const std::size_t n = in.size();
  out.resize(n / 2 + 1);
  auto plan = detail::PlanCache::instance().get(detail::Kind::r2c, n);
  fftw_execute_dft_r2c(plan, const_cast<double*>(in.data()), detail::raw(out.data()));
}

/// Real signal of length n from its one-sided spectrum (n/2 + 1 bins),
/// including the 1/n factor. The input is left untouched.
inline void inverse_real(const ComplexBuffer& half, std::size_t n, RealBuffer& out) {
  require(half.size() == n / 2 + 1, Errc::length_mismatch, "half spectrum has wrong length");
  thread_local ComplexBuffer scratch;
  scratch.assign(half.begin(), half.end());
  out.resize(n);
  auto plan = detail::PlanCache::instance().get(detail::Kind::c2r, n);
  fftw_execute_dft_c2r(plan, detail::raw(scratch.data()), out.data());
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& v : out) v *= scale;
}

}  // namespace hearshape::fft
