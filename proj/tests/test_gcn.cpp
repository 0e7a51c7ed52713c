#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "bedrec/errors.hpp"
#include "bedrec/gcn.hpp"
#include "bedrec/rng.hpp"
#include "bedrec/supervision.hpp"

using namespace bedrec;

namespace {

Matrix random_features(int nodes, int channels, std::uint64_t seed) {
    Matrix X(nodes, channels);
    Rng rng(seed);
    for (double& v : X.a) v = rng.normal();
    return X;
}

PatchSupervision random_supervision(int nodes, std::uint64_t seed, bool use_ref = true) {
    PatchSupervision sup;
    sup.use_ref_loss = use_ref;
    Rng rng(seed);
    sup.radar_values.resize(static_cast<std::size_t>(nodes));
    sup.confidences.resize(static_cast<std::size_t>(nodes));
    sup.ref_values.resize(static_cast<std::size_t>(nodes));
    sup.radar_mask.resize(static_cast<std::size_t>(nodes));
    sup.valid_mask.assign(static_cast<std::size_t>(nodes), 1);
    sup.eval_mask.assign(static_cast<std::size_t>(nodes), 1);
    for (int i = 0; i < nodes; ++i) {
        sup.radar_values[static_cast<std::size_t>(i)] = rng.uniform(-1.0, 1.0);
        sup.confidences[static_cast<std::size_t>(i)] = rng.uniform(0.2, 1.0);
        sup.ref_values[static_cast<std::size_t>(i)] = rng.uniform(-1.0, 1.0);
        sup.radar_mask[static_cast<std::size_t>(i)] = rng.bernoulli(0.3) ? 1 : 0;
    }
    sup.radar_mask[0] = 1;  // keep both sets nonempty
    sup.radar_mask[1] = 0;
    return sup;
}

// Flat views over all trainable parameters, gradients aligned.
struct FlatParams {
    std::vector<double*> values;
    std::vector<const double*> grads;
};

FlatParams flatten(GcnParams& p, BalancerState& b, const ParamTensors& g) {
    FlatParams f;
    auto add = [&](double* v, const double* gr, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            f.values.push_back(v + i);
            f.grads.push_back(gr + i);
        }
    };
    add(p.w1.a.data(), g.w1.a.data(), p.w1.a.size());
    add(p.b1.data(), g.b1.data(), p.b1.size());
    add(p.w2.a.data(), g.w2.a.data(), p.w2.a.size());
    add(p.b2.data(), g.b2.data(), p.b2.size());
    add(p.w3.a.data(), g.w3.a.data(), p.w3.a.size());
    add(p.b3.data(), g.b3.data(), p.b3.size());
    add(b.log_sigma.data(), g.balancer.data(), 3);
    return f;
}

}  // namespace

TEST_CASE("init_params is deterministic with Glorot shapes and zero biases") {
    GcnParams a = init_params(20, 7);
    GcnParams b = init_params(20, 7);
    CHECK(a.w1.a == b.w1.a);
    CHECK(a.w2.a == b.w2.a);
    CHECK(a.w3.a == b.w3.a);
    CHECK(a.w1.rows == 20);
    CHECK(a.w1.cols == 128);
    CHECK(a.w2.rows == 128);
    CHECK(a.w3.cols == 1);
    for (double v : a.b1) CHECK(v == 0.0);
    for (double v : a.b3) CHECK(v == 0.0);

    GcnParams c = init_params(20, 8);
    CHECK(a.w1.a != c.w1.a);
}

TEST_CASE("init_params W1 sample mean is near zero") {
    GcnParams p = init_params(20, 3);
    const double bound = std::sqrt(6.0 / (20 + 128));
    double mean = 0.0;
    for (double v : p.w1.a) {
        CHECK(std::abs(v) <= bound);
        mean += v;
    }
    mean /= static_cast<double>(p.w1.a.size());
    CHECK(std::abs(mean) <= 3.0 * bound / std::sqrt(20.0 * 128.0));
}

TEST_CASE("bias-only network predicts its output bias everywhere") {
    GridGraph g = normalize_adjacency(build_grid_edges(4, 4));
    GcnParams p = init_params(3, 1, 16);
    std::fill(p.w1.a.begin(), p.w1.a.end(), 0.0);
    std::fill(p.w2.a.begin(), p.w2.a.end(), 0.0);
    std::fill(p.w3.a.begin(), p.w3.a.end(), 0.0);
    p.b3[0] = -123.5;
    const auto out = forward(p, g, random_features(16, 3, 5), {0.2, 4, 9}, false);
    REQUIRE(out.size() == 1);
    for (double v : out[0]) CHECK(v == -123.5);
}

TEST_CASE("rate-0 stochastic passes are bitwise identical") {
    GridGraph g = normalize_adjacency(build_grid_edges(3, 3));
    GcnParams p = init_params(4, 11, 8);
    const auto out = forward(p, g, random_features(9, 4, 6), {0.0, 10, 42}, true);
    REQUIRE(out.size() == 10);
    for (std::size_t pass = 1; pass < out.size(); ++pass) CHECK(out[pass] == out[0]);
}

TEST_CASE("single-node identity chain passes the input through") {
    GridGraph g = normalize_adjacency(build_grid_edges(1, 1));
    GcnParams p = init_params(1, 0, 1);
    p.w1.a = {1.0};
    p.w2.a = {1.0};
    p.w3.a = {1.0};
    Matrix X(1, 1);
    X.a = {2.0};
    const auto out = forward(p, g, X, {0.0, 1, 0}, false);
    CHECK(out[0][0] == 2.0);
}

TEST_CASE("shape mismatch raises ShapeError") {
    GridGraph g = normalize_adjacency(build_grid_edges(3, 3));
    GcnParams p = init_params(4, 1, 8);
    CHECK_THROWS_AS(forward(p, g, random_features(9, 3, 1), {0.2, 2, 0}, true), ShapeError);
    CHECK_THROWS_AS(forward(p, g, random_features(8, 4, 1), {0.2, 2, 0}, true), ShapeError);
}

TEST_CASE("analytic gradients match central finite differences") {
    const int hidden = 8;
    GridGraph g = normalize_adjacency(build_grid_edges(3, 3));
    const Matrix X = random_features(9, 4, 21);
    const PatchSupervision sup = random_supervision(9, 22);
    const DropoutConfig dropout{0.2, 3, 77};

    for (std::uint64_t seed : {1ULL, 2ULL}) {
        GcnParams params = init_params(4, seed, hidden);
        BalancerState balancer;
        balancer.log_sigma = {0.1, -0.2, 0.3};
        const LossGradients lg = loss_and_gradients(params, g, X, sup, dropout, balancer);
        FlatParams flat = flatten(params, balancer, lg.grads);

        const double h = 1e-5;
        double worst = 0.0;
        for (std::size_t i = 0; i < flat.values.size(); ++i) {
            const double saved = *flat.values[i];
            *flat.values[i] = saved + h;
            const double up = evaluate_loss(params, g, X, sup, dropout, balancer).total;
            *flat.values[i] = saved - h;
            const double down = evaluate_loss(params, g, X, sup, dropout, balancer).total;
            *flat.values[i] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double an = *flat.grads[i];
            const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
            worst = std::max(worst, rel);
        }
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("perfect predictions with rate 0 give zero losses and zero gradients") {
    GridGraph g = normalize_adjacency(build_grid_edges(3, 3));
    GcnParams p = init_params(2, 3, 4);
    // Zero weights, zero bias: predictions are 0 everywhere.
    std::fill(p.w1.a.begin(), p.w1.a.end(), 0.0);
    std::fill(p.w2.a.begin(), p.w2.a.end(), 0.0);
    std::fill(p.w3.a.begin(), p.w3.a.end(), 0.0);
    PatchSupervision sup = random_supervision(9, 30);
    std::fill(sup.radar_values.begin(), sup.radar_values.end(), 0.0);
    std::fill(sup.ref_values.begin(), sup.ref_values.end(), 0.0);

    BalancerState balancer;
    const LossGradients lg =
        loss_and_gradients(p, g, random_features(9, 2, 31), sup, {0.0, 5, 0}, balancer);
    CHECK(lg.terms.radar == 0.0);
    CHECK(lg.terms.ref == 0.0);
    CHECK(lg.terms.unc == 0.0);
    for (double v : lg.grads.w1.a) CHECK(v == 0.0);
    for (double v : lg.grads.w2.a) CHECK(v == 0.0);
    for (double v : lg.grads.w3.a) CHECK(v == 0.0);
    for (double v : lg.grads.b1) CHECK(v == 0.0);
    for (double v : lg.grads.b3) CHECK(v == 0.0);
    // Balancer gradient is +1 per active term at L = 0 (the log-sigma
    // regularizer), by Eq of the balanced total.
    for (double v : lg.grads.balancer) CHECK(v == 1.0);
}

TEST_CASE("non-finite targets raise NumericalError naming the term") {
    GridGraph g = normalize_adjacency(build_grid_edges(2, 2));
    GcnParams p = init_params(2, 5, 4);
    PatchSupervision sup = random_supervision(4, 33);
    sup.radar_values[0] = std::numeric_limits<double>::quiet_NaN();
    sup.radar_mask[0] = 1;
    try {
        loss_and_gradients(p, g, random_features(4, 2, 34), sup, {0.0, 2, 0}, BalancerState{});
        FAIL("expected NumericalError");
    } catch (const NumericalError& err) {
        CHECK(std::string(err.what()).find("L_radar") != std::string::npos);
    }
}

TEST_CASE("predictions are permutation-equivariant in deterministic mode") {
    const int h = 3, w = 4, n = 12;
    GridGraph g = normalize_adjacency(build_grid_edges(h, w));
    GcnParams params = init_params(5, 17, 16);
    const Matrix X = random_features(n, 5, 18);
    const auto base = forward(params, g, X, {0.0, 1, 0}, false)[0];

    // Reverse permutation: node i -> n-1-i.
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = n - 1 - i;
    GridGraph pg = g;
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        pg.edges[e] = {perm[static_cast<std::size_t>(g.edges[e].first)],
                       perm[static_cast<std::size_t>(g.edges[e].second)]};
    }
    for (int i = 0; i < n; ++i) {
        pg.self_weights[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] =
            g.self_weights[static_cast<std::size_t>(i)];
    }
    Matrix pX(n, 5);
    for (int i = 0; i < n; ++i) {
        for (int c = 0; c < 5; ++c) pX(perm[static_cast<std::size_t>(i)], c) = X(i, c);
    }
    const auto permuted = forward(params, pg, pX, {0.0, 1, 0}, false)[0];
    for (int i = 0; i < n; ++i) {
        CHECK(permuted[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] ==
              base[static_cast<std::size_t>(i)]);
    }
}

TEST_CASE("adam leaves parameters unchanged under zero gradients") {
    GcnParams p = init_params(3, 9, 4);
    const GcnParams before = p;
    BalancerState balancer;
    AdamState state = AdamState::init(p, 1e-3);
    adam_step(p, balancer, ParamTensors::zeros_like(p), state);
    CHECK(p.w1.a == before.w1.a);
    CHECK(p.w2.a == before.w2.a);
    CHECK(p.w3.a == before.w3.a);
    CHECK(balancer.log_sigma == std::array<double, 3>{0.0, 0.0, 0.0});
}

TEST_CASE("adam first step has magnitude lr per entry") {
    GcnParams p = init_params(2, 9, 3);
    const GcnParams before = p;
    BalancerState balancer;
    AdamState state = AdamState::init(p, 1e-4);
    ParamTensors grads = ParamTensors::zeros_like(p);
    Rng rng(55);
    for (double& v : grads.w1.a) v = rng.uniform(0.5, 2.0) * (rng.bernoulli(0.5) ? 1 : -1);
    adam_step(p, balancer, grads, state);
    for (std::size_t i = 0; i < p.w1.a.size(); ++i) {
        const double delta = p.w1.a[i] - before.w1.a[i];
        CHECK(std::abs(std::abs(delta) - 1e-4) < 1e-6);
        CHECK(delta * grads.w1.a[i] < 0.0);  // moves against the gradient
    }
}

TEST_CASE("adam matches an independently coded reference over 10 steps") {
    // Quadratic f(theta) = sum q_i theta_i^2 / 2, gradient q_i * theta_i.
    GcnParams p = init_params(1, 13, 1);  // 1x1 tensors: 6 scalars
    BalancerState balancer;
    balancer.log_sigma = {0.3, -0.1, 0.05};
    AdamState state = AdamState::init(p, 0.01);

    // Mirror of every parameter for the reference implementation.
    std::vector<double> theta = {p.w1.a[0], p.b1[0],  p.w2.a[0],
                                 p.b2[0],   p.w3.a[0], p.b3[0],
                                 balancer.log_sigma[0], balancer.log_sigma[1],
                                 balancer.log_sigma[2]};
    const std::vector<double> q = {1.0, 2.0, 0.5, 3.0, 1.5, 0.25, 2.5, 0.75, 1.25};
    std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0);

    for (int step = 1; step <= 10; ++step) {
        ParamTensors grads = ParamTensors::zeros_like(p);
        grads.w1.a[0] = q[0] * p.w1.a[0];
        grads.b1[0] = q[1] * p.b1[0];
        grads.w2.a[0] = q[2] * p.w2.a[0];
        grads.b2[0] = q[3] * p.b2[0];
        grads.w3.a[0] = q[4] * p.w3.a[0];
        grads.b3[0] = q[5] * p.b3[0];
        grads.balancer = {q[6] * balancer.log_sigma[0], q[7] * balancer.log_sigma[1],
                          q[8] * balancer.log_sigma[2]};
        adam_step(p, balancer, grads, state);

        // Reference Adam, written out from the published update equations.
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double grad = q[i] * theta[i];
            m[i] = 0.9 * m[i] + 0.1 * grad;
            v[i] = 0.999 * v[i] + 0.001 * grad * grad;
            const double m_hat = m[i] / (1.0 - std::pow(0.9, step));
            const double v_hat = v[i] / (1.0 - std::pow(0.999, step));
            theta[i] -= 0.01 * m_hat / (std::sqrt(v_hat) + 1e-8);
        }
        const std::vector<double> current = {p.w1.a[0], p.b1[0],  p.w2.a[0],
                                             p.b2[0],   p.w3.a[0], p.b3[0],
                                             balancer.log_sigma[0], balancer.log_sigma[1],
                                             balancer.log_sigma[2]};
        for (std::size_t i = 0; i < theta.size(); ++i) {
            CHECK(current[i] == doctest::Approx(theta[i]).epsilon(1e-10));
        }
    }
}

TEST_CASE("50 adam steps on a 16x16 patch reduce the balanced total by 30%") {
    GridGraph g = normalize_adjacency(build_grid_edges(16, 16));
    const int n = 256;
    double reduction_sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Matrix X = random_features(n, 6, seed * 101);
        PatchSupervision sup = random_supervision(n, seed * 103);
        // Targets carry learnable structure: a linear readout of the inputs.
        for (int i = 0; i < n; ++i) {
            double t = 0.0;
            for (int c = 0; c < 6; ++c) t += 0.3 * X(i, c);
            sup.radar_values[static_cast<std::size_t>(i)] = t;
            sup.ref_values[static_cast<std::size_t>(i)] = t;
        }
        GcnParams params = init_params(6, seed, 32);
        BalancerState balancer;
        AdamState state = AdamState::init(params, 0.05);
        const DropoutConfig dropout{0.2, 5, seed};

        double initial = 0.0;
        double final_total = 0.0;
        for (int step = 0; step < 50; ++step) {
            const LossGradients lg = loss_and_gradients(params, g, X, sup, dropout, balancer);
            if (step == 0) initial = lg.total;
            adam_step(params, balancer, lg.grads, state);
            final_total = lg.total;
        }
        reduction_sum += (initial - final_total) / std::abs(initial);
    }
    CHECK(reduction_sum / 5.0 >= 0.3);
}
