#pragma once

#include <algorithm>
#include <cstddef>
#include <cstring>

// Minimal dense kernels for the sequence models. Row-major with explicit
// leading dimensions; operands must not overlap.
//
// Both products accumulate every output element in ascending order over the
// shared dimension into register partials that are added to C once, so
// results are bit-reproducible across runs and independent of how rows are
// grouped into batches. No floating-point reassociation flags are needed:
// the summation order is fixed in the source.
//
// Layout of the compute path: A panels of four rows are packed k-major
// (gemm_nn) or are already k-major (gemm_tn_acc), so the k loop issues
// contiguous loads of four A values and one B row tile, feeding a 4 x JT
// register accumulator block. JT drops 16 -> 8 -> 4 -> scalar on the column
// remainder.
namespace otom {
namespace matdetail {

// 4-row kernel: C tile (4 x JT) [+]= panel (k x 4, contiguous) * B tile.
template <std::size_t JT>
inline void tile4(std::size_t k, const double* panel, const double* B, std::size_t ldb,
                  double* c0, double* c1, double* c2, double* c3, bool accumulate) {
    double acc0[JT] = {0}, acc1[JT] = {0}, acc2[JT] = {0}, acc3[JT] = {0};
    const double* b = B;
    for (std::size_t p = 0; p < k; ++p, b += ldb, panel += 4) {
        const double a0 = panel[0], a1 = panel[1], a2 = panel[2], a3 = panel[3];
        for (std::size_t j = 0; j < JT; ++j) {
            const double bj = b[j];
            acc0[j] += a0 * bj;
            acc1[j] += a1 * bj;
            acc2[j] += a2 * bj;
            acc3[j] += a3 * bj;
        }
    }
    if (accumulate) {
        for (std::size_t j = 0; j < JT; ++j) c0[j] += acc0[j];
        for (std::size_t j = 0; j < JT; ++j) c1[j] += acc1[j];
        for (std::size_t j = 0; j < JT; ++j) c2[j] += acc2[j];
        for (std::size_t j = 0; j < JT; ++j) c3[j] += acc3[j];
    } else {
        std::memcpy(c0, acc0, sizeof acc0);
        std::memcpy(c1, acc1, sizeof acc1);
        std::memcpy(c2, acc2, sizeof acc2);
        std::memcpy(c3, acc3, sizeof acc3);
    }
}

// Single-row kernel: C tile (1 x JT) [+]= a (k, contiguous, stride sa) * B.
template <std::size_t JT>
inline void tile1(std::size_t k, const double* a, std::size_t sa, const double* B,
                  std::size_t ldb, double* c, bool accumulate) {
    double acc[JT] = {0};
    const double* b = B;
    for (std::size_t p = 0; p < k; ++p, b += ldb, a += sa) {
        const double ap = *a;
        for (std::size_t j = 0; j < JT; ++j) acc[j] += ap * b[j];
    }
    if (accumulate) {
        for (std::size_t j = 0; j < JT; ++j) c[j] += acc[j];
    } else {
        std::memcpy(c, acc, sizeof acc);
    }
}

// Runs the column tiling (16/8/4/scalar) for one packed 4-row panel.
inline void row4_sweep(std::size_t n, std::size_t k, const double* panel, const double* B,
                       std::size_t ldb, double* c0, double* c1, double* c2, double* c3,
                       bool accumulate) {
    std::size_t j = 0;
    for (; j + 16 <= n; j += 16) {
        tile4<16>(k, panel, B + j, ldb, c0 + j, c1 + j, c2 + j, c3 + j, accumulate);
    }
    if (j + 8 <= n) {
        tile4<8>(k, panel, B + j, ldb, c0 + j, c1 + j, c2 + j, c3 + j, accumulate);
        j += 8;
    }
    if (j + 4 <= n) {
        tile4<4>(k, panel, B + j, ldb, c0 + j, c1 + j, c2 + j, c3 + j, accumulate);
        j += 4;
    }
    for (; j < n; ++j) {
        double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
        const double* b = B + j;
        const double* ap = panel;
        for (std::size_t p = 0; p < k; ++p, b += ldb, ap += 4) {
            const double bj = *b;
            s0 += ap[0] * bj;
            s1 += ap[1] * bj;
            s2 += ap[2] * bj;
            s3 += ap[3] * bj;
        }
        if (accumulate) {
            c0[j] += s0;
            c1[j] += s1;
            c2[j] += s2;
            c3[j] += s3;
        } else {
            c0[j] = s0;
            c1[j] = s1;
            c2[j] = s2;
            c3[j] = s3;
        }
    }
}

inline void row1_sweep(std::size_t n, std::size_t k, const double* a, std::size_t sa,
                       const double* B, std::size_t ldb, double* c, bool accumulate) {
    std::size_t j = 0;
    for (; j + 16 <= n; j += 16) tile1<16>(k, a, sa, B + j, ldb, c + j, accumulate);
    if (j + 8 <= n) {
        tile1<8>(k, a, sa, B + j, ldb, c + j, accumulate);
        j += 8;
    }
    if (j + 4 <= n) {
        tile1<4>(k, a, sa, B + j, ldb, c + j, accumulate);
        j += 4;
    }
    for (; j < n; ++j) {
        double s = 0;
        const double* b = B + j;
        const double* ap = a;
        for (std::size_t p = 0; p < k; ++p, b += ldb, ap += sa) s += *ap * *b;
        if (accumulate) {
            c[j] += s;
        } else {
            c[j] = s;
        }
    }
}

inline constexpr std::size_t kPackMaxK = 512;

}  // namespace matdetail

// C (m x n, ldc) = [accumulate ? C : 0] + A (m x k, lda) * B (k x n, ldb).
inline void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* A,
                    std::size_t lda, const double* B, std::size_t ldb, double* C,
                    std::size_t ldc, bool accumulate) {
    using namespace matdetail;
    std::size_t i = 0;
    if (k <= kPackMaxK) {
        double panel[4 * kPackMaxK];
        for (; i + 4 <= m; i += 4) {
            const double* a = A + i * lda;
            for (std::size_t p = 0; p < k; ++p) {
                panel[4 * p] = a[p];
                panel[4 * p + 1] = a[lda + p];
                panel[4 * p + 2] = a[2 * lda + p];
                panel[4 * p + 3] = a[3 * lda + p];
            }
            double* c = C + i * ldc;
            row4_sweep(n, k, panel, B, ldb, c, c + ldc, c + 2 * ldc, c + 3 * ldc, accumulate);
        }
    }
    for (; i < m; ++i) {
        row1_sweep(n, k, A + i * lda, 1, B, ldb, C + i * ldc, accumulate);
    }
}

// C (m x n, ldc) += A^T * B with A (k x m, lda), B (k x n, ldb).
// A is already k-major, so rows of A^T are picked up contiguously.
inline void gemm_tn_acc(std::size_t m, std::size_t n, std::size_t k, const double* A,
                        std::size_t lda, const double* B, std::size_t ldb, double* C,
                        std::size_t ldc) {
    using namespace matdetail;
    std::size_t i = 0;
    if (k <= kPackMaxK) {
        double panel[4 * kPackMaxK];
        for (; i + 4 <= m; i += 4) {
            const double* a = A + i;
            for (std::size_t p = 0; p < k; ++p) {
                panel[4 * p] = a[p * lda];
                panel[4 * p + 1] = a[p * lda + 1];
                panel[4 * p + 2] = a[p * lda + 2];
                panel[4 * p + 3] = a[p * lda + 3];
            }
            double* c = C + i * ldc;
            row4_sweep(n, k, panel, B, ldb, c, c + ldc, c + 2 * ldc, c + 3 * ldc, true);
        }
    }
    for (; i < m; ++i) {
        row1_sweep(n, k, A + i, lda, B, ldb, C + i * ldc, true);
    }
}

// Dst (n x m, ldd) = Src (m x n, lds) transposed.
inline void transpose(std::size_t m, std::size_t n, const double* src, std::size_t lds,
                      double* dst, std::size_t ldd) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) dst[j * ldd + i] = src[i * lds + j];
    }
}

}  // namespace otom
