#pragma once

#include <cblas.h>

#include <cstdlib>
#include <mutex>

namespace casunext::detail {

// Run-to-run determinism on one machine requires a fixed thread count;
// default to one unless the user pinned it themselves.
inline void ensure_blas_threads() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (std::getenv("OPENBLAS_NUM_THREADS") == nullptr) {
      openblas_set_num_threads(1);
    }
  });
}

inline void gemm(CBLAS_TRANSPOSE ta, CBLAS_TRANSPOSE tb, int m, int n, int k,
                 double alpha, const double* a, int lda, const double* b,
                 int ldb, double beta, double* c, int ldc) {
  ensure_blas_threads();
  cblas_dgemm(CblasRowMajor, ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c,
              ldc);
}

}  // namespace casunext::detail
