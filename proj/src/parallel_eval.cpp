#include <omp.h>

#include <exception>

#include "kbmrc/execution.hpp"
#include "kbmrc/ranker.hpp"

namespace kbmrc {

int parallel_threads() { return omp_get_max_threads(); }

std::vector<Prediction> predict_all(const QaModel& model, const std::vector<Instance>& instances,
                                    Execution exec) {
  std::vector<Prediction> out(instances.size());
  const auto n = static_cast<long>(instances.size());
  if (exec == Execution::kSerial) {
    for (long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = predict(model, instances[i]);
    return out;
  }
  // Each instance builds its own graph over frozen parameters and writes only
  // its own slot, so results match the serial loop exactly.
  // Exceptions cannot cross the region boundary; the first one is rethrown.
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = predict(model, instances[static_cast<std::size_t>(i)]);
    } catch (...) {
#pragma omp critical(kbmrc_predict_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace kbmrc
