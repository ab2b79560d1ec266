#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace cgolab::fft {

enum class Direction { forward, inverse };

namespace detail {

inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanKey {
  std::vector<int> dims;
  int howmany;
  int sign;
  auto operator<=>(const PlanKey&) const = default;
};

class Plan {
 public:
  explicit Plan(const PlanKey& key) {
    std::size_t per = 1;
    for (int d : key.dims) per *= static_cast<std::size_t>(d);
    const std::size_t total = per * static_cast<std::size_t>(key.howmany);
    std::lock_guard lock(planner_mutex());
    auto* buf = fftw_alloc_complex(total);
    plan_ = fftw_plan_many_dft(static_cast<int>(key.dims.size()), key.dims.data(), key.howmany, buf,
                               nullptr, 1, static_cast<int>(per), buf, nullptr, 1,
                               static_cast<int>(per), key.sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    if (plan_ == nullptr) throw std::runtime_error("fftw planning failed");
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  fftw_plan get() const { return plan_; }

 private:
  fftw_plan plan_ = nullptr;
};

inline Plan& cached_plan(const PlanKey& key) {
  thread_local std::map<PlanKey, std::unique_ptr<Plan>> cache;
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, std::make_unique<Plan>(key)).first;
  return *it->second;
}

}  // namespace detail

/// In-place unitary DFT over the trailing axes `dims`, repeated `howmany` times over
/// contiguous blocks. Forward uses e^{-i}, inverse e^{+i}; both scale by 1/sqrt(prod dims).
inline void transform_inplace(std::complex<double>* data, const std::vector<int>& dims, int howmany,
                              Direction dir) {
  std::size_t per = 1;
  for (int d : dims) per *= static_cast<std::size_t>(d);
  if (per == 0 || howmany <= 0) return;
  const int sign = dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD;
  auto& plan = detail::cached_plan({dims, howmany, sign});
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(plan.get(), p, p);
  const double scale = 1.0 / std::sqrt(static_cast<double>(per));
  const std::size_t total = per * static_cast<std::size_t>(howmany);
  for (std::size_t i = 0; i < total; ++i) data[i] *= scale;
}

}  // namespace cgolab::fft
