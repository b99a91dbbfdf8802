#include "metashape/kernels.h"

#if defined(__aarch64__)
#include <arm_neon.h>

namespace metashape::kernels {

namespace {

void AddNeon(const double* x, double* y, size_t n) {
  size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += x[i];
}

void AxpyNeon(double a, const double* x, double* y, size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  size_t i = 0;
  // Separate multiply and add: vfmaq would round differently from scalar.
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void ScaleNeon(double a, double* y, size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vmulq_f64(vld1q_f64(y + i), va));
  for (; i < n; ++i) y[i] *= a;
}

double DotNeon(const double* x, const double* y, size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double SumSquaresNeon(const double* x, size_t n) { return DotNeon(x, x, n); }

double MaxNeon(const double* x, size_t n) {
  size_t i = 0;
  double m = x[0];
  if (n >= 2) {
    float64x2_t acc = vld1q_f64(x);
    for (i = 2; i + 2 <= n; i += 2) acc = vmaxq_f64(acc, vld1q_f64(x + i));
    m = vmaxvq_f64(acc);
  }
  for (; i < n; ++i) m = x[i] > m ? x[i] : m;
  return m;
}

}  // namespace

const KernelTable* NeonTable() {
  static const KernelTable table{Isa::kNeon, "neon", AddNeon, AxpyNeon,
                                 ScaleNeon,  DotNeon, SumSquaresNeon, MaxNeon};
  return &table;
}

}  // namespace metashape::kernels

#else

namespace metashape::kernels {
const KernelTable* NeonTable() { return nullptr; }
}  // namespace metashape::kernels

#endif
