#include "prx/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <utility>

namespace prx::fft {
namespace {

struct CachedPlan {
  fftw_plan plan = nullptr;
  fftw_complex* buf = nullptr;
};

std::mutex g_mutex;

std::map<std::pair<std::size_t, int>, CachedPlan>& plan_cache() {
  static std::map<std::pair<std::size_t, int>, CachedPlan> cache;
  return cache;
}

// FFTW_ESTIMATE keeps planning deterministic (no runtime measurement), which
// matters for byte-identical outputs across runs on the same host.
CachedPlan& get_plan(std::size_t n, int sign) {
  auto key = std::make_pair(n, sign);
  auto it = plan_cache().find(key);
  if (it != plan_cache().end()) return it->second;
  CachedPlan entry;
  entry.buf = fftw_alloc_complex(n);
  if (entry.buf == nullptr) throw pipeline_error("fft: allocation failed");
  entry.plan = fftw_plan_dft_1d(static_cast<int>(n), entry.buf, entry.buf,
                                sign, FFTW_ESTIMATE);
  if (entry.plan == nullptr) {
    fftw_free(entry.buf);
    throw pipeline_error("fft: planning failed");
  }
  return plan_cache().emplace(key, entry).first->second;
}

cvec transform(const cvec& x, int sign) {
  if (x.empty()) throw config_error("fft: empty input");
  std::lock_guard<std::mutex> lock(g_mutex);
  const std::size_t n = x.size();
  CachedPlan& p = get_plan(n, sign);
  static_assert(sizeof(fftw_complex) == sizeof(cplx));
  std::memcpy(p.buf, x.data(), n * sizeof(cplx));
  fftw_execute(p.plan);
  cvec out(n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = cplx(p.buf[i][0], p.buf[i][1]) * scale;
  }
  return out;
}

}  // namespace

cvec forward(const cvec& x) { return transform(x, FFTW_FORWARD); }
cvec inverse(const cvec& x) { return transform(x, FFTW_BACKWARD); }

}  // namespace prx::fft
