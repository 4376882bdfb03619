#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <tuple>
#include <vector>

namespace gkdv {

using cplx = std::complex<double>;

namespace detail {

// Process-wide cache of FFTW plans. Plans are created with FFTW_ESTIMATE so
// that the chosen algorithm (and hence every output bit) is a function of the
// transform size only. FFTW_UNALIGNED lets one plan serve any buffer through
// the new-array execute interface, which is thread-safe; planning itself is
// serialised by the mutex.
class PlanCache {
 public:
  enum class Kind { c2c_forward, c2c_inverse, r2c, c2r };

  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(Kind kind, std::size_t n, bool in_place) {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto key = std::make_tuple(kind, n, in_place);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    const int size = static_cast<int>(n);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = nullptr;
    switch (kind) {
      case Kind::c2c_forward:
      case Kind::c2c_inverse: {
        auto* a = fftw_alloc_complex(n);
        auto* b = in_place ? a : fftw_alloc_complex(n);
        plan = fftw_plan_dft_1d(size, a, b,
                                kind == Kind::c2c_forward ? FFTW_FORWARD : FFTW_BACKWARD, flags);
        if (b != a) fftw_free(b);
        fftw_free(a);
        break;
      }
      case Kind::r2c: {
        auto* r = fftw_alloc_real(2 * (n / 2 + 1));
        auto* c = fftw_alloc_complex(n / 2 + 1);
        plan = fftw_plan_dft_r2c_1d(size, r, c, flags);
        fftw_free(c);
        fftw_free(r);
        break;
      }
      case Kind::c2r: {
        auto* r = fftw_alloc_real(2 * (n / 2 + 1));
        auto* c = fftw_alloc_complex(n / 2 + 1);
        plan = fftw_plan_dft_c2r_1d(size, c, r, flags);
        fftw_free(c);
        fftw_free(r);
        break;
      }
    }
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
  std::map<std::tuple<Kind, std::size_t, bool>, fftw_plan> plans_;
};

inline fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }
inline fftw_complex* as_fftw(const cplx* p) {
  return reinterpret_cast<fftw_complex*>(const_cast<cplx*>(p));
}

}  // namespace detail

// Unnormalised forward DFT: out[k] = sum_j in[j] exp(-2 pi i jk/n).
// `in` and `out` may alias exactly.
inline void fft_forward(std::span<const cplx> in, std::span<cplx> out) {
  const bool in_place = in.data() == out.data();
  auto plan = detail::PlanCache::instance().get(detail::PlanCache::Kind::c2c_forward, in.size(),
                                                in_place);
  fftw_execute_dft(plan, detail::as_fftw(in.data()), detail::as_fftw(out.data()));
}

// Unnormalised inverse DFT (sign +1). Divide by n to invert fft_forward.
inline void fft_inverse(std::span<const cplx> in, std::span<cplx> out) {
  const bool in_place = in.data() == out.data();
  auto plan = detail::PlanCache::instance().get(detail::PlanCache::Kind::c2c_inverse, in.size(),
                                                in_place);
  fftw_execute_dft(plan, detail::as_fftw(in.data()), detail::as_fftw(out.data()));
}

// Real-to-half-complex forward transform; out has n/2+1 entries. `in` is not
// modified.
inline void rfft_forward(std::span<const double> in, std::span<cplx> out) {
  auto plan = detail::PlanCache::instance().get(detail::PlanCache::Kind::r2c, in.size(), false);
  fftw_execute_dft_r2c(plan, const_cast<double*>(in.data()), detail::as_fftw(out.data()));
}

// Half-complex-to-real inverse (unnormalised). FFTW destroys the input of a
// c2r transform, so the input is copied into `scratch` first.
inline void rfft_inverse(std::span<const cplx> in, std::span<double> out,
                         std::vector<cplx>& scratch) {
  scratch.assign(in.begin(), in.end());
  auto plan = detail::PlanCache::instance().get(detail::PlanCache::Kind::c2r, out.size(), false);
  fftw_execute_dft_c2r(plan, detail::as_fftw(scratch.data()), out.data());
}

inline std::vector<cplx> fft_forward(std::span<const cplx> in) {
  std::vector<cplx> out(in.size());
  fft_forward(in, out);
  return out;
}

// Normalised inverse: returns the samples whose forward DFT is `spectrum`.
inline std::vector<cplx> fft_inverse_normalized(std::span<const cplx> spectrum) {
  std::vector<cplx> out(spectrum.size());
  fft_inverse(spectrum, out);
  const double scale = 1.0 / static_cast<double>(spectrum.size());
  for (auto& v : out) v *= scale;
  return out;
}

}  // namespace gkdv
