#include "snls/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace snls::fft {
namespace {

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int dim, int points, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(dim, points, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    std::size_t total = 1;
    std::vector<int> dims(static_cast<std::size_t>(dim), points);
    for (int d = 0; d < dim; ++d) total *= static_cast<std::size_t>(points);
    // Planning scratch only; FFTW_ESTIMATE never touches its contents.
    std::vector<cplx> scratch(total);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft(dim, dims.data(), buf, buf, sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw std::runtime_error("fftw: plan creation failed");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

void execute(int dim, int points, std::span<cplx> data, int sign) {
  fftw_plan plan = cache().get(dim, points, sign);
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, buf, buf);
}

}  // namespace

void forward(int dim, int points, std::span<cplx> data) {
  execute(dim, points, data, FFTW_FORWARD);
}

void inverse(int dim, int points, std::span<cplx> data) {
  execute(dim, points, data, FFTW_BACKWARD);
}

}  // namespace snls::fft
