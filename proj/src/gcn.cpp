#include "bedrec/gcn.hpp"

#include <cmath>
#include <algorithm>
#include <cstring>
#ifdef __AVX2__
#include <immintrin.h>
#endif
#include <string>

#include "bedrec/errors.hpp"
#include "bedrec/rng.hpp"

namespace bedrec {

namespace {

// Scalar fallback rows of C = A * B over columns [j0, p).
void mm_rows_scalar(const double* A, const double* B, double* C, int i0, int i1, int m,
                    int p, int j0) {
    for (int i = i0; i < i1; ++i) {
        double* c = C + static_cast<std::size_t>(i) * p;
        for (int j = j0; j < p; ++j) c[j] = 0.0;
        const double* a = A + static_cast<std::size_t>(i) * m;
        for (int k = 0; k < m; ++k) {
            const double av = a[k];
            const double* b = B + static_cast<std::size_t>(k) * p;
            for (int j = j0; j < p; ++j) c[j] += av * b[j];
        }
    }
}

// C = A (n x m) * B (m x p), row-major. 4x8 register-blocked FMA kernel on
// AVX2 targets with scalar tails; plain blocked loops elsewhere.
void mm(const double* A, const double* B, double* C, int n, int m, int p) {
#ifdef __AVX2__
    const int p8 = p & ~7;
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        const double* a0 = A + static_cast<std::size_t>(i) * m;
        const double* a1 = a0 + m;
        const double* a2 = a1 + m;
        const double* a3 = a2 + m;
        for (int j0 = 0; j0 < p8; j0 += 8) {
            __m256d c00 = _mm256_setzero_pd(), c01 = _mm256_setzero_pd();
            __m256d c10 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd();
            __m256d c20 = _mm256_setzero_pd(), c21 = _mm256_setzero_pd();
            __m256d c30 = _mm256_setzero_pd(), c31 = _mm256_setzero_pd();
            for (int k = 0; k < m; ++k) {
                const double* b = B + static_cast<std::size_t>(k) * p + j0;
                const __m256d b0 = _mm256_loadu_pd(b);
                const __m256d b1 = _mm256_loadu_pd(b + 4);
                __m256d x = _mm256_set1_pd(a0[k]);
                c00 = _mm256_fmadd_pd(x, b0, c00);
                c01 = _mm256_fmadd_pd(x, b1, c01);
                x = _mm256_set1_pd(a1[k]);
                c10 = _mm256_fmadd_pd(x, b0, c10);
                c11 = _mm256_fmadd_pd(x, b1, c11);
                x = _mm256_set1_pd(a2[k]);
                c20 = _mm256_fmadd_pd(x, b0, c20);
                c21 = _mm256_fmadd_pd(x, b1, c21);
                x = _mm256_set1_pd(a3[k]);
                c30 = _mm256_fmadd_pd(x, b0, c30);
                c31 = _mm256_fmadd_pd(x, b1, c31);
            }
            double* c = C + static_cast<std::size_t>(i) * p + j0;
            _mm256_storeu_pd(c, c00);
            _mm256_storeu_pd(c + 4, c01);
            _mm256_storeu_pd(c + p, c10);
            _mm256_storeu_pd(c + p + 4, c11);
            _mm256_storeu_pd(c + 2 * p, c20);
            _mm256_storeu_pd(c + 2 * p + 4, c21);
            _mm256_storeu_pd(c + 3 * p, c30);
            _mm256_storeu_pd(c + 3 * p + 4, c31);
        }
        if (p8 < p) mm_rows_scalar(A, B, C, i, i + 4, m, p, p8);
    }
    if (i < n) mm_rows_scalar(A, B, C, i, n, m, p, 0);
#else
    mm_rows_scalar(A, B, C, 0, n, m, p, 0);
#endif
}

// C += A^T (m x n) * B (n x p) where A is stored n x m.
void mm_at_b_accum(const double* A, const double* B, double* C, int n, int m, int p) {
#ifdef __AVX2__
    const int p8 = p & ~7;
    const int m4 = m & ~3;
    for (int i = 0; i < m4; i += 4) {
        for (int j0 = 0; j0 < p8; j0 += 8) {
            double* c0 = C + static_cast<std::size_t>(i) * p + j0;
            double* c1 = c0 + p;
            double* c2 = c1 + p;
            double* c3 = c2 + p;
            __m256d s00 = _mm256_loadu_pd(c0), s01 = _mm256_loadu_pd(c0 + 4);
            __m256d s10 = _mm256_loadu_pd(c1), s11 = _mm256_loadu_pd(c1 + 4);
            __m256d s20 = _mm256_loadu_pd(c2), s21 = _mm256_loadu_pd(c2 + 4);
            __m256d s30 = _mm256_loadu_pd(c3), s31 = _mm256_loadu_pd(c3 + 4);
            for (int k = 0; k < n; ++k) {
                const double* a = A + static_cast<std::size_t>(k) * m + i;
                const double* b = B + static_cast<std::size_t>(k) * p + j0;
                const __m256d b0 = _mm256_loadu_pd(b);
                const __m256d b1 = _mm256_loadu_pd(b + 4);
                __m256d x = _mm256_set1_pd(a[0]);
                s00 = _mm256_fmadd_pd(x, b0, s00);
                s01 = _mm256_fmadd_pd(x, b1, s01);
                x = _mm256_set1_pd(a[1]);
                s10 = _mm256_fmadd_pd(x, b0, s10);
                s11 = _mm256_fmadd_pd(x, b1, s11);
                x = _mm256_set1_pd(a[2]);
                s20 = _mm256_fmadd_pd(x, b0, s20);
                s21 = _mm256_fmadd_pd(x, b1, s21);
                x = _mm256_set1_pd(a[3]);
                s30 = _mm256_fmadd_pd(x, b0, s30);
                s31 = _mm256_fmadd_pd(x, b1, s31);
            }
            _mm256_storeu_pd(c0, s00);
            _mm256_storeu_pd(c0 + 4, s01);
            _mm256_storeu_pd(c1, s10);
            _mm256_storeu_pd(c1 + 4, s11);
            _mm256_storeu_pd(c2, s20);
            _mm256_storeu_pd(c2 + 4, s21);
            _mm256_storeu_pd(c3, s30);
            _mm256_storeu_pd(c3 + 4, s31);
        }
        for (int k = 0; k < n; ++k) {  // column tail
            const double* a = A + static_cast<std::size_t>(k) * m;
            const double* b = B + static_cast<std::size_t>(k) * p;
            for (int ii = i; ii < i + 4; ++ii) {
                const double av = a[ii];
                double* c = C + static_cast<std::size_t>(ii) * p;
                for (int j = p8; j < p; ++j) c[j] += av * b[j];
            }
        }
    }
    for (int k = 0; k < n; ++k) {  // row tail
        const double* a = A + static_cast<std::size_t>(k) * m;
        const double* b = B + static_cast<std::size_t>(k) * p;
        for (int i = m4; i < m; ++i) {
            const double av = a[i];
            double* c = C + static_cast<std::size_t>(i) * p;
            for (int j = 0; j < p; ++j) c[j] += av * b[j];
        }
    }
#else
    constexpr int kTile = 16;
    for (int i0 = 0; i0 < m; i0 += kTile) {
        const int i1 = std::min(i0 + kTile, m);
        for (int k = 0; k < n; ++k) {
            const double* a = A + static_cast<std::size_t>(k) * m;
            const double* b = B + static_cast<std::size_t>(k) * p;
            for (int i = i0; i < i1; ++i) {
                const double av = a[i];
                double* c = C + static_cast<std::size_t>(i) * p;
                for (int j = 0; j < p; ++j) c[j] += av * b[j];
            }
        }
    }
#endif
}

void transpose(const double* A, double* At, int n, int m) {
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            At[static_cast<std::size_t>(j) * n + i] = A[static_cast<std::size_t>(i) * m + j];
        }
    }
}

void add_bias(double* M, const std::vector<double>& bias, int n) {
    const int p = static_cast<int>(bias.size());
    for (int i = 0; i < n; ++i) {
        double* row = M + static_cast<std::size_t>(i) * p;
        for (int j = 0; j < p; ++j) row[j] += bias[j];
    }
}

// Counter-based keep mask: element idx survives when its hash falls under
// the keep threshold. Masks depend only on (seed, pass, layer, index); the
// forward pass materializes them as bytes so the backward pass replays them
// without re-hashing.
struct DropoutSpec {
    std::uint64_t base = 0;
    std::uint64_t threshold = 0;
    double scale = 1.0;
    bool active = false;

    static DropoutSpec make(double rate, std::uint64_t seed, int pass, int layer) {
        DropoutSpec m;
        if (rate <= 0.0) return m;
        m.active = true;
        m.base = mix_seed(seed, {static_cast<std::uint64_t>(pass) + 1,
                                 static_cast<std::uint64_t>(layer) + 101});
        const double keep = 1.0 - rate;
        m.threshold = static_cast<std::uint64_t>(keep * 18446744073709551616.0);
        m.scale = 1.0 / keep;
        return m;
    }

    void materialize(std::vector<std::uint8_t>& keep, std::size_t count) const {
        keep.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            keep[i] = splitmix64(base + i) < threshold ? 1 : 0;
        }
    }
};

struct PassCache {
    Matrix z2;  // A_hat * dropout(relu(a1))
    Matrix a2;  // pre-activation of layer 2
    Matrix z3;  // A_hat * dropout(relu(a2))
    std::vector<double> y;
    std::vector<std::uint8_t> keep1, keep2;
    double scale = 1.0;
    bool dropout_active = false;
};

// Per-call buffers. Thread-local and grow-only so the hot loop never
// reallocates; every field is fully overwritten before use.
struct ForwardWork {
    Matrix z1;       // A_hat * X, pass-independent
    Matrix a1;       // pre-activation of layer 1, pass-independent
    Matrix h1;       // relu(a1), pass-independent
    Matrix scratch;  // dropped activations between propagations
    std::vector<PassCache> passes;
};

void resize_matrix(Matrix& m, int rows, int cols) {
    m.rows = rows;
    m.cols = cols;
    m.a.resize(static_cast<std::size_t>(rows) * cols);
}

void check_shapes(const GcnParams& params, const GridGraph& graph, const Matrix& X) {
    if (X.rows != graph.node_count || X.cols != params.feature_count) {
        throw ShapeError("gcn forward: features are " + std::to_string(X.rows) + "x" +
                         std::to_string(X.cols) + ", expected " +
                         std::to_string(graph.node_count) + "x" +
                         std::to_string(params.feature_count));
    }
    if (!graph.normalized()) {
        throw ShapeError("gcn forward: graph adjacency is not normalized");
    }
}

void run_forward(ForwardWork& work, const GcnParams& params, const GridGraph& graph,
                 const Matrix& X, const DropoutConfig& dropout, bool stochastic) {
    check_shapes(params, graph, X);
    const int n = graph.node_count;
    const int h = params.hidden;
    const int n_passes = stochastic ? dropout.passes : 1;
    if (n_passes < 1) throw ConfigError("gcn forward: passes must be >= 1");
    if (dropout.rate < 0.0 || dropout.rate >= 1.0) {
        throw ConfigError("gcn forward: dropout rate must be in [0, 1)");
    }

    resize_matrix(work.z1, n, params.feature_count);
    propagate(graph, X.a.data(), params.feature_count, work.z1.a.data());
    resize_matrix(work.a1, n, h);
    mm(work.z1.a.data(), params.w1.a.data(), work.a1.a.data(), n, params.feature_count, h);
    add_bias(work.a1.a.data(), params.b1, n);
    resize_matrix(work.scratch, n, h);

    const std::size_t hidden_size = static_cast<std::size_t>(n) * h;
    resize_matrix(work.h1, n, h);
    for (std::size_t i = 0; i < hidden_size; ++i) {
        const double v = work.a1.a[i];
        work.h1.a[i] = v > 0.0 ? v : 0.0;
    }

    work.passes.resize(static_cast<std::size_t>(n_passes));
    for (int p = 0; p < n_passes; ++p) {
        PassCache& pc = work.passes[static_cast<std::size_t>(p)];
        const DropoutSpec spec1 =
            stochastic ? DropoutSpec::make(dropout.rate, dropout.seed, p, 1) : DropoutSpec{};
        const DropoutSpec spec2 =
            stochastic ? DropoutSpec::make(dropout.rate, dropout.seed, p, 2) : DropoutSpec{};
        pc.dropout_active = spec1.active;
        pc.scale = spec1.scale;

        if (spec1.active) {
            spec1.materialize(pc.keep1, hidden_size);
            for (std::size_t i = 0; i < hidden_size; ++i) {
                work.scratch.a[i] = pc.keep1[i] ? work.h1.a[i] * pc.scale : 0.0;
            }
        } else {
            std::memcpy(work.scratch.a.data(), work.h1.a.data(),
                        hidden_size * sizeof(double));
        }

        resize_matrix(pc.z2, n, h);
        propagate(graph, work.scratch.a.data(), h, pc.z2.a.data());
        resize_matrix(pc.a2, n, h);
        mm(pc.z2.a.data(), params.w2.a.data(), pc.a2.a.data(), n, h, h);
        add_bias(pc.a2.a.data(), params.b2, n);

        if (spec2.active) {
            spec2.materialize(pc.keep2, hidden_size);
            for (std::size_t i = 0; i < hidden_size; ++i) {
                const double v = pc.a2.a[i];
                work.scratch.a[i] = (v > 0.0 && pc.keep2[i]) ? v * pc.scale : 0.0;
            }
        } else {
            for (std::size_t i = 0; i < hidden_size; ++i) {
                const double v = pc.a2.a[i];
                work.scratch.a[i] = v > 0.0 ? v : 0.0;
            }
        }

        resize_matrix(pc.z3, n, h);
        propagate(graph, work.scratch.a.data(), h, pc.z3.a.data());
        pc.y.assign(static_cast<std::size_t>(n), 0.0);
        for (int i = 0; i < n; ++i) {
            const double* z = pc.z3.row(i);
            double acc = params.b3[0];
            for (int j = 0; j < h; ++j) acc += z[j] * params.w3.a[static_cast<std::size_t>(j)];
            pc.y[static_cast<std::size_t>(i)] = acc;
        }
    }
}

ForwardWork& thread_work() {
    thread_local ForwardWork work;
    return work;
}

std::vector<double> mean_of_passes(const ForwardWork& work, int n) {
    std::vector<double> mean(static_cast<std::size_t>(n), 0.0);
    for (const PassCache& pc : work.passes) {
        for (int i = 0; i < n; ++i) mean[static_cast<std::size_t>(i)] += pc.y[static_cast<std::size_t>(i)];
    }
    const double inv = 1.0 / static_cast<double>(work.passes.size());
    for (double& v : mean) v *= inv;
    return mean;
}

void check_finite_terms(const LossTerms& terms, double total) {
    if (!std::isfinite(terms.radar)) throw NumericalError("non-finite loss term L_radar");
    if (!std::isfinite(terms.ref)) throw NumericalError("non-finite loss term L_ref");
    if (!std::isfinite(terms.unc)) throw NumericalError("non-finite loss term L_uncertainty");
    if (!std::isfinite(total)) throw NumericalError("non-finite balanced total");
}

}  // namespace

GcnParams init_params(int feature_count, std::uint64_t seed, int hidden) {
    if (feature_count < 1) throw ConfigError("init_params: feature_count must be >= 1");
    if (hidden < 1) throw ConfigError("init_params: hidden must be >= 1");
    GcnParams p;
    p.feature_count = feature_count;
    p.hidden = hidden;
    p.w1 = Matrix(feature_count, hidden);
    p.w2 = Matrix(hidden, hidden);
    p.w3 = Matrix(hidden, 1);
    p.b1.assign(static_cast<std::size_t>(hidden), 0.0);
    p.b2.assign(static_cast<std::size_t>(hidden), 0.0);
    p.b3.assign(1, 0.0);

    Rng rng(mix_seed(seed, {0x1717}));
    auto glorot = [&rng](Matrix& w, int fan_in, int fan_out) {
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (double& v : w.a) v = rng.uniform(-bound, bound);
    };
    glorot(p.w1, feature_count, hidden);
    glorot(p.w2, hidden, hidden);
    glorot(p.w3, hidden, 1);
    return p;
}

std::vector<std::vector<double>> forward(const GcnParams& params, const GridGraph& graph,
                                         const Matrix& features,
                                         const DropoutConfig& dropout, bool stochastic) {
    ForwardWork& work = thread_work();
    run_forward(work, params, graph, features, dropout, stochastic);
    std::vector<std::vector<double>> out;
    out.reserve(work.passes.size());
    for (PassCache& pc : work.passes) out.push_back(pc.y);
    return out;
}

ParamTensors ParamTensors::zeros_like(const GcnParams& params) {
    ParamTensors t;
    t.w1 = Matrix(params.w1.rows, params.w1.cols);
    t.w2 = Matrix(params.w2.rows, params.w2.cols);
    t.w3 = Matrix(params.w3.rows, params.w3.cols);
    t.b1.assign(params.b1.size(), 0.0);
    t.b2.assign(params.b2.size(), 0.0);
    t.b3.assign(params.b3.size(), 0.0);
    return t;
}

void ParamTensors::accumulate(const ParamTensors& other) {
    auto add = [](std::vector<double>& into, const std::vector<double>& from) {
        for (std::size_t i = 0; i < into.size(); ++i) into[i] += from[i];
    };
    add(w1.a, other.w1.a);
    add(w2.a, other.w2.a);
    add(w3.a, other.w3.a);
    add(b1, other.b1);
    add(b2, other.b2);
    add(b3, other.b3);
    for (std::size_t k = 0; k < 3; ++k) balancer[k] += other.balancer[k];
}

void ParamTensors::scale(double factor) {
    auto mul = [factor](std::vector<double>& v) {
        for (double& x : v) x *= factor;
    };
    mul(w1.a);
    mul(w2.a);
    mul(w3.a);
    mul(b1);
    mul(b2);
    mul(b3);
    for (double& x : balancer) x *= factor;
}

LossGradients loss_and_gradients(const GcnParams& params, const GridGraph& graph,
                                 const Matrix& features, const PatchSupervision& sup,
                                 const DropoutConfig& dropout,
                                 const BalancerState& balancer) {
    const int n = graph.node_count;
    const int h = params.hidden;
    if (sup.radar_values.size() != static_cast<std::size_t>(n)) {
        throw ShapeError("loss_and_gradients: supervision length mismatch");
    }

    ForwardWork& work = thread_work();
    run_forward(work, params, graph, features, dropout, true);
    const int n_passes = static_cast<int>(work.passes.size());

    LossGradients out;
    out.mean_prediction = mean_of_passes(work, n);
    std::vector<std::vector<double>> pass_values;
    pass_values.reserve(static_cast<std::size_t>(n_passes));
    for (const PassCache& pc : work.passes) pass_values.push_back(pc.y);
    out.terms = loss_terms(out.mean_prediction, pass_values, sup.radar_values,
                           sup.radar_mask, sup.confidences, sup.ref_values,
                           sup.valid_mask, sup.eval_mask);
    out.total = balanced_total(out.terms, balancer, sup.use_ref_loss);
    check_finite_terms(out.terms, out.total);

    out.grads = ParamTensors::zeros_like(params);
    out.grads.balancer = balancer_gradients(out.terms, balancer, sup.use_ref_loss);

    const double w_radar = 0.5 * std::exp(-2.0 * balancer.log_sigma[0]);
    const double w_ref = 0.5 * std::exp(-2.0 * balancer.log_sigma[1]);
    const double w_unc = 0.5 * std::exp(-2.0 * balancer.log_sigma[2]);

    // d total / d mean prediction, shared across passes.
    std::vector<double> g_mean(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        if (!sup.eval_mask[ui] || !sup.valid_mask[ui]) continue;
        if (sup.radar_mask[ui]) {
            if (out.terms.radar_count > 0) {
                g_mean[ui] = w_radar * 2.0 / static_cast<double>(out.terms.radar_count) *
                             sup.confidences[ui] *
                             (out.mean_prediction[ui] - sup.radar_values[ui]);
            }
        } else if (sup.use_ref_loss && out.terms.ref_count > 0) {
            g_mean[ui] = w_ref * 2.0 / static_cast<double>(out.terms.ref_count) *
                         (out.mean_prediction[ui] - sup.ref_values[ui]);
        }
    }

    const double inv_passes = 1.0 / static_cast<double>(n_passes);
    const double unc_coeff =
        out.terms.cell_count > 0
            ? w_unc * 2.0 * inv_passes / static_cast<double>(out.terms.cell_count)
            : 0.0;

    // Backward scratch, thread-local like the forward buffers.
    struct BackwardWork {
        std::vector<double> g_y;
        Matrix g_h2, g_a2, g_z2, g_h1, g_a1, w2t;
    };
    thread_local BackwardWork bw;
    bw.g_y.resize(static_cast<std::size_t>(n));
    resize_matrix(bw.g_h2, n, h);
    resize_matrix(bw.g_a2, n, h);
    resize_matrix(bw.g_z2, n, h);
    resize_matrix(bw.g_h1, n, h);
    resize_matrix(bw.g_a1, n, h);
    resize_matrix(bw.w2t, h, h);
    transpose(params.w2.a.data(), bw.w2t.a.data(), h, h);

    for (int p = 0; p < n_passes; ++p) {
        PassCache& pc = work.passes[static_cast<std::size_t>(p)];
        // d total / d y for this pass: the mean-prediction share plus the
        // variance penalty's direct dependence on the pass value.
        for (int i = 0; i < n; ++i) {
            const std::size_t ui = static_cast<std::size_t>(i);
            double g = g_mean[ui] * inv_passes;
            if (sup.eval_mask[ui] && sup.valid_mask[ui]) {
                g += unc_coeff * (pc.y[ui] - out.mean_prediction[ui]);
            }
            bw.g_y[ui] = g;
        }

        // Layer 3: y = z3 * w3 + b3.
        for (int i = 0; i < n; ++i) {
            const double g = bw.g_y[static_cast<std::size_t>(i)];
            out.grads.b3[0] += g;
            const double* z = pc.z3.row(i);
            for (int j = 0; j < h; ++j) {
                out.grads.w3.a[static_cast<std::size_t>(j)] += z[j] * g;
            }
        }
        // dH2d = A_hat * (dY w3^T); build dY w3^T into g_h2 first.
        for (int i = 0; i < n; ++i) {
            const double g = bw.g_y[static_cast<std::size_t>(i)];
            double* row = bw.g_h2.row(i);
            for (int j = 0; j < h; ++j) row[j] = g * params.w3.a[static_cast<std::size_t>(j)];
        }
        const std::size_t hidden_size = static_cast<std::size_t>(n) * h;
        propagate(graph, bw.g_h2.a.data(), h, bw.g_a2.a.data());  // g_a2 <- dH2d
        if (pc.dropout_active) {  // dropout then ReLU, masks replayed from bytes
            for (std::size_t i = 0; i < hidden_size; ++i) {
                bw.g_a2.a[i] = (pc.a2.a[i] > 0.0 && pc.keep2[i]) ? bw.g_a2.a[i] * pc.scale : 0.0;
            }
        } else {
            for (std::size_t i = 0; i < hidden_size; ++i) {
                if (pc.a2.a[i] <= 0.0) bw.g_a2.a[i] = 0.0;
            }
        }

        // Layer 2: a2 = z2 * w2 + b2.
        mm_at_b_accum(pc.z2.a.data(), bw.g_a2.a.data(), out.grads.w2.a.data(), n, h, h);
        for (int i = 0; i < n; ++i) {
            const double* row = bw.g_a2.row(i);
            for (int j = 0; j < h; ++j) out.grads.b2[static_cast<std::size_t>(j)] += row[j];
        }
        mm(bw.g_a2.a.data(), bw.w2t.a.data(), bw.g_z2.a.data(), n, h, h);
        propagate(graph, bw.g_z2.a.data(), h, bw.g_h1.a.data());  // dH1d
        if (pc.dropout_active) {
            for (std::size_t i = 0; i < hidden_size; ++i) {
                bw.g_a1.a[i] =
                    (work.a1.a[i] > 0.0 && pc.keep1[i]) ? bw.g_h1.a[i] * pc.scale : 0.0;
            }
        } else {
            for (std::size_t i = 0; i < hidden_size; ++i) {
                bw.g_a1.a[i] = work.a1.a[i] > 0.0 ? bw.g_h1.a[i] : 0.0;
            }
        }

        // Layer 1: a1 = z1 * w1 + b1.
        mm_at_b_accum(work.z1.a.data(), bw.g_a1.a.data(), out.grads.w1.a.data(), n,
                      params.feature_count, h);
        for (int i = 0; i < n; ++i) {
            const double* row = bw.g_a1.row(i);
            for (int j = 0; j < h; ++j) out.grads.b1[static_cast<std::size_t>(j)] += row[j];
        }
    }
    return out;
}

LossEvaluation evaluate_loss(const GcnParams& params, const GridGraph& graph,
                             const Matrix& features, const PatchSupervision& sup,
                             const DropoutConfig& dropout, const BalancerState& balancer) {
    ForwardWork& work = thread_work();
    run_forward(work, params, graph, features, dropout, true);
    LossEvaluation out;
    out.mean_prediction = mean_of_passes(work, graph.node_count);
    std::vector<std::vector<double>> pass_values;
    pass_values.reserve(work.passes.size());
    for (const PassCache& pc : work.passes) pass_values.push_back(pc.y);
    out.terms = loss_terms(out.mean_prediction, pass_values, sup.radar_values,
                           sup.radar_mask, sup.confidences, sup.ref_values,
                           sup.valid_mask, sup.eval_mask);
    out.total = balanced_total(out.terms, balancer, sup.use_ref_loss);
    check_finite_terms(out.terms, out.total);
    return out;
}

AdamState AdamState::init(const GcnParams& params, double lr) {
    AdamState s;
    s.m = ParamTensors::zeros_like(params);
    s.v = ParamTensors::zeros_like(params);
    s.lr = lr;
    return s;
}

void adam_step(GcnParams& params, BalancerState& balancer, const ParamTensors& grads,
               AdamState& state) {
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(state.beta1, t);
    const double bc2 = 1.0 - std::pow(state.beta2, t);

    auto update = [&](double* theta, const double* g, double* m, double* v,
                      std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            theta[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
        }
    };
    update(params.w1.a.data(), grads.w1.a.data(), state.m.w1.a.data(), state.v.w1.a.data(),
           params.w1.a.size());
    update(params.w2.a.data(), grads.w2.a.data(), state.m.w2.a.data(), state.v.w2.a.data(),
           params.w2.a.size());
    update(params.w3.a.data(), grads.w3.a.data(), state.m.w3.a.data(), state.v.w3.a.data(),
           params.w3.a.size());
    update(params.b1.data(), grads.b1.data(), state.m.b1.data(), state.v.b1.data(),
           params.b1.size());
    update(params.b2.data(), grads.b2.data(), state.m.b2.data(), state.v.b2.data(),
           params.b2.size());
    update(params.b3.data(), grads.b3.data(), state.m.b3.data(), state.v.b3.data(),
           params.b3.size());
    update(balancer.log_sigma.data(), grads.balancer.data(), state.m.balancer.data(),
           state.v.balancer.data(), 3);
}

}  // namespace bedrec
