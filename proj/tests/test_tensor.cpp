#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "aura/grad.hpp"
#include "aura/ops.hpp"
#include "aura/tensor.hpp"

using namespace aura;
using namespace aura::diff;

namespace {

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// Random leaf parameter in [-2, 2].
Tensor rand_param(ParamStore& ps, const std::string& name, Shape shape, Rng& rng) {
    return ps.add(name, random_uniform(std::move(shape), -2.0, 2.0, rng));
}

}  // namespace

TEST_CASE("matmul identity and small products") {
    Tensor eye = Tensor::from({2, 2}, {1, 0, 0, 1});
    Tensor v = Tensor::from({2, 1}, {3, 4});
    Tensor r = matmul(eye, v);
    CHECK(r.shape() == Shape{2, 1});
    CHECK(r.at(0) == 3.0);
    CHECK(r.at(1) == 4.0);

    Tensor a = Tensor::from({1, 2}, {1, 2});
    Tensor b = Tensor::from({2, 1}, {3, 4});
    CHECK(matmul(a, b).scalar_value() == 11.0);
}

TEST_CASE("matmul shape mismatch names both shapes") {
    Tensor a = Tensor::zeros({2, 3});
    Tensor b = Tensor::zeros({2, 2});
    try {
        matmul(a, b);
        FAIL("expected DimError");
    } catch (const DimError& e) {
        std::string msg = e.what();
        CHECK(msg.find("[2x3]") != std::string::npos);
        CHECK(msg.find("[2x2]") != std::string::npos);
    }
}

TEST_CASE("matmul gradient of summed output") {
    Rng rng(7);
    ParamStore ps;
    Tensor a = rand_param(ps, "a", {3, 4}, rng);
    Tensor b = Tensor::from({4, 2}, {0.5, -1, 2, 0.25, 1.5, -0.75, 0.1, 3});

    auto f = [&]() { return sum_all(matmul(a, b)); };
    ps.zero_grads();
    backward(f());

    // dA for sum-of-outputs is ones(3x2) * b^T.
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t p = 0; p < 4; ++p) {
            double expect = 0.0;
            for (std::size_t j = 0; j < 2; ++j) expect += b.at(p, j);
            CHECK(ps.at("a").grad()[i * 4 + p] == doctest::Approx(expect).epsilon(1e-12));
        }

    auto report = finite_diff_check(f, ps, 1e-5);
    CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("softmax fixed points") {
    Tensor u = softmax(Tensor::from({3}, {0, 0, 0}));
    for (std::size_t i = 0; i < 3; ++i) CHECK(u.at(i) == doctest::Approx(1.0 / 3).epsilon(1e-15));

    Tensor big = softmax(Tensor::from({2}, {1000, 0}));
    CHECK(std::isfinite(big.at(0)));
    CHECK(big.at(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(big.at(1) < 1e-300);

    // Closed form e^k / sum_j e^j computed independently.
    double e1 = std::exp(1.0), e2 = std::exp(2.0), e3 = std::exp(3.0);
    double z = e1 + e2 + e3;
    Tensor s = softmax(Tensor::from({3}, {1, 2, 3}));
    CHECK(s.at(0) == doctest::Approx(e1 / z).epsilon(1e-14));
    CHECK(s.at(1) == doctest::Approx(e2 / z).epsilon(1e-14));
    CHECK(s.at(2) == doctest::Approx(e3 / z).epsilon(1e-14));
    CHECK(s.at(0) == doctest::Approx(0.09003057).epsilon(1e-7));
    CHECK(s.at(1) == doctest::Approx(0.24472847).epsilon(1e-7));
    CHECK(s.at(2) == doctest::Approx(0.66524096).epsilon(1e-7));
}

TEST_CASE("softmax rows sum to one and are shift-invariant") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor x = random_uniform({4, 6}, -2.0, 2.0, rng);
        Tensor s = softmax(x);
        for (std::size_t r = 0; r < 4; ++r) {
            double row = 0.0;
            for (std::size_t c = 0; c < 6; ++c) {
                CHECK(s.at(r, c) >= 0.0);
                row += s.at(r, c);
            }
            CHECK(row == doctest::Approx(1.0).epsilon(1e-9));
        }
        Tensor shifted = softmax(add_scalar(x, 17.5));
        for (std::size_t i = 0; i < x.size(); ++i)
            CHECK(shifted.at(i) == doctest::Approx(s.at(i)).epsilon(1e-9));
    }
}

TEST_CASE("backward linear and quadratic cases") {
    ParamStore ps;
    Tensor p = ps.add("p", Tensor::from({3}, {1, 2, 3}));

    backward(sum_all(p));
    CHECK(ps.at("p").grad() == std::vector<double>{1, 1, 1});

    ps.zero_grads();
    backward(mul_scalar(sum_all(mul(p, p)), 0.5));
    CHECK(ps.at("p").grad() == std::vector<double>{1, 2, 3});
}

TEST_CASE("backward rejects non-scalar loss") {
    ParamStore ps;
    Tensor p = ps.add("p", Tensor::from({2}, {1, 2}));
    CHECK_THROWS_AS(backward(add_scalar(p, 1.0)), ValueError);
}

TEST_CASE("backward twice doubles gradients exactly") {
    ParamStore ps;
    Tensor p = ps.add("p", Tensor::from({3}, {0.3, -1.7, 2.2}));
    Tensor w = Tensor::from({3}, {1.5, -0.5, 2.0});
    Tensor loss = sum_all(mul(sigmoid(p), w));
    backward(loss);
    std::vector<double> once = ps.at("p").grad();
    backward(loss);
    std::vector<double> twice = ps.at("p").grad();
    for (std::size_t i = 0; i < once.size(); ++i) CHECK(twice[i] == 2.0 * once[i]);
}

TEST_CASE("gradient accumulates across multiple uses of one parameter") {
    ParamStore ps;
    Tensor p = ps.add("p", Tensor::from({2}, {2, 5}));
    // loss = sum(p) + sum(p) -> grad 2 per entry
    backward(add(sum_all(p), sum_all(p)));
    CHECK(ps.at("p").grad() == std::vector<double>{2, 2});
}

TEST_CASE("finite_diff_check exact quadratic and constant softmax") {
    ParamStore ps;
    Tensor theta = ps.add("theta", Tensor::from({1}, {3.0}));
    auto quad = [&]() { return mul(theta, theta); };
    CHECK(finite_diff_check(quad, ps, 1e-5).max_rel_error < 1e-8);

    // Constant function: any step is truncation-free, and a larger step keeps
    // the fp cancellation noise of the sum (a few ulp) below the 1e-8
    // denominator floor.
    ParamStore ps2;
    Tensor x = ps2.add("x", Tensor::from({4}, {0.1, -0.4, 1.2, 0.9}));
    auto const1 = [&]() { return sum_all(softmax(x)); };
    CHECK(finite_diff_check(const1, ps2, 0.05).max_rel_error < 1e-6);
}

TEST_CASE("finite_diff_check flags non-deterministic functions") {
    ParamStore ps;
    Tensor p = ps.add("p", Tensor::from({1}, {1.0}));
    int calls = 0;
    auto f = [&]() {
        ++calls;
        return add_scalar(p, static_cast<double>(calls));
    };
    CHECK_THROWS_AS(finite_diff_check(f, ps, 1e-5), ValueError);
}

TEST_CASE("every kernel matches central finite differences") {
    Rng rng(42);
    double worst = 0.0;
    std::string worst_name;
    auto run = [&](const char* name, auto&& build) {
        ParamStore ps;
        auto f = build(ps, rng);
        double err = finite_diff_check(f, ps, 1e-5).max_rel_error;
        INFO(name << " rel err " << err);
        CHECK(err < 1e-4);
        if (err > worst) {
            worst = err;
            worst_name = name;
        }
    };

    Tensor wa = Tensor::from({3, 3}, {0.3, -1, 2, 0.7, 0.2, -0.9, 1.1, 0.5, -0.4});
    Tensor wb = Tensor::from({1, 3}, {0.8, -1.2, 0.5});

    run("add", [&](ParamStore& ps, Rng& r) {
        Tensor a = rand_param(ps, "a", {3, 3}, r), b = rand_param(ps, "b", {3, 3}, r);
        return [=]() { return sum_all(mul(add(a, b), wa)); };
    });
    run("add_rowvec", [&](ParamStore& ps, Rng& r) {
        Tensor a = rand_param(ps, "a", {3, 3}, r), b = rand_param(ps, "b", {1, 3}, r);
        return [=]() { return sum_all(mul(add(a, b), wa)); };
    });
    run("add_bscalar", [&](ParamStore& ps, Rng& r) {
        Tensor a = rand_param(ps, "a", {3, 3}, r), b = rand_param(ps, "b", {1}, r);
        return [=]() { return sum_all(mul(add(a, b), wa)); };
    });
    run("sub", [&](ParamStore& ps, Rng& r) {
        Tensor a = rand_param(ps, "a", {3, 3}, r), b = rand_param(ps, "b", {3, 3}, r);
        return [=]() { return sum_all(mul(sub(a, b), wa)); };
    });
    run("mul", [&](ParamStore& ps, Rng& r) {
        Tensor a = rand_param(ps, "a", {3, 3}, r), b = rand_param(ps, "b", {3, 3}, r);
        return [=]() { return sum_all(mul(mul(a, b), wa)); };
    });
    run("mul_bscalar", [&](ParamStore& ps, Rng& r) {
        Tensor a = rand_param(ps, "a", {3, 3}, r), b = rand_param(ps, "b", {1}, r);
        return [=]() { return sum_all(mul(mul(a, b), wa)); };
    });
    run("div", [&](ParamStore& ps, Rng& r) {
        Tensor a = rand_param(ps, "a", {2, 2}, r);
        Tensor b = ps.add("b", Tensor::from({2, 2}, {1.5, 2.5, -1.8, 3.0}));
        return [=]() { return sum_all(div(a, b)); };
    });
    run("div_bscalar", [&](ParamStore& ps, Rng& r) {
        Tensor a = rand_param(ps, "a", {2, 2}, r);
        Tensor b = ps.add("b", Tensor::from({1}, {1.7}));
        return [=]() { return sum_all(div(a, b)); };
    });
    run("matmul", [&](ParamStore& ps, Rng& r) {
        Tensor a = rand_param(ps, "a", {3, 4}, r), b = rand_param(ps, "b", {4, 2}, r);
        Tensor w = random_uniform({3, 2}, -1.0, 1.0, r);
        return [=]() { return sum_all(mul(matmul(a, b), w)); };
    });
    run("transpose", [&](ParamStore& ps, Rng& r) {
        Tensor a = rand_param(ps, "a", {2, 3}, r);
        Tensor w = random_uniform({3, 2}, -1.0, 1.0, r);
        return [=]() { return sum_all(mul(transpose(a), w)); };
    });
    run("reshape", [&](ParamStore& ps, Rng& r) {
        Tensor a = rand_param(ps, "a", {2, 3}, r);
        Tensor w = random_uniform({3, 2}, -1.0, 1.0, r);
        return [=]() { return sum_all(mul(reshape(a, {3, 2}), w)); };
    });
    run("concat_rows", [&](ParamStore& ps, Rng& r) {
        Tensor a = rand_param(ps, "a", {2, 3}, r), b = rand_param(ps, "b", {1, 3}, r);
        return [=]() { return sum_all(mul(concat_rows({a, b}), wa)); };
    });
    run("concat_cols", [&](ParamStore& ps, Rng& r) {
        Tensor a = rand_param(ps, "a", {3, 1}, r), b = rand_param(ps, "b", {3, 2}, r);
        return [=]() { return sum_all(mul(concat_cols({a, b}), wa)); };
    });
    run("slice_rows", [&](ParamStore& ps, Rng& r) {
        Tensor a = rand_param(ps, "a", {4, 3}, r);
        Tensor w = random_uniform({2, 3}, -1.0, 1.0, r);
        return [=]() { return sum_all(mul(slice_rows(a, 1, 3), w)); };
    });
    run("slice_cols", [&](ParamStore& ps, Rng& r) {
        Tensor a = rand_param(ps, "a", {3, 4}, r);
        Tensor w = random_uniform({3, 2}, -1.0, 1.0, r);
        return [=]() { return sum_all(mul(slice_cols(a, 1, 3), w)); };
    });
    run("sum_all", [&](ParamStore& ps, Rng& r) {
        Tensor a = rand_param(ps, "a", {3, 2}, r);
        return [=]() { return mul(sum_all(a), sum_all(a)); };
    });
    run("mean_all", [&](ParamStore& ps, Rng& r) {
        Tensor a = rand_param(ps, "a", {3, 2}, r);
        return [=]() { return mul(mean_all(a), mean_all(a)); };
    });
    run("mean_rows", [&](ParamStore& ps, Rng& r) {
        Tensor a = rand_param(ps, "a", {4, 3}, r);
        return [=]() { return sum_all(mul(mean_rows(a), wb)); };
    });
    run("softmax", [&](ParamStore& ps, Rng& r) {
        Tensor a = rand_param(ps, "a", {3, 3}, r);
        return [=]() { return sum_all(mul(softmax(a), wa)); };
    });
    run("sigmoid", [&](ParamStore& ps, Rng& r) {
        Tensor a = rand_param(ps, "a", {3, 3}, r);
        return [=]() { return sum_all(mul(sigmoid(a), wa)); };
    });
    run("gelu", [&](ParamStore& ps, Rng& r) {
        Tensor a = rand_param(ps, "a", {3, 3}, r);
        return [=]() { return sum_all(mul(gelu(a), wa)); };
    });
    run("layer_norm", [&](ParamStore& ps, Rng& r) {
        Tensor x = rand_param(ps, "x", {3, 4}, r);
        Tensor g = rand_param(ps, "g", {1, 4}, r);
        Tensor b = rand_param(ps, "b", {1, 4}, r);
        Tensor w = random_uniform({3, 4}, -1.0, 1.0, r);
        return [=]() { return sum_all(mul(layer_norm(x, g, b), w)); };
    });
    run("masked_fill", [&](ParamStore& ps, Rng& r) {
        Tensor a = rand_param(ps, "a", {3, 3}, r);
        Tensor m = Tensor::from({3, 3}, {0, 1, 0, 0, 0, 1, 1, 0, 0});
        return [=]() { return sum_all(mul(masked_fill(a, m, -5.0), wa)); };
    });
    run("mse_loss", [&](ParamStore& ps, Rng& r) {
        Tensor a = rand_param(ps, "a", {1, 4}, r);
        Tensor t = random_uniform({1, 4}, -1.0, 1.0, r);
        return [=]() { return mse_loss(a, t); };
    });

    MESSAGE("worst kernel: " << worst_name << " rel err " << worst);
}

TEST_CASE("kernels are pure") {
    Rng rng(5);
    Tensor a = random_uniform({4, 4}, -2, 2, rng);
    Tensor b = random_uniform({4, 4}, -2, 2, rng);
    Tensor g = random_uniform({1, 4}, 0.5, 1.5, rng);
    Tensor be = random_uniform({1, 4}, -0.5, 0.5, rng);

    CHECK(bitwise_equal(matmul(a, b).data(), matmul(a, b).data()));
    CHECK(bitwise_equal(softmax(a).data(), softmax(a).data()));
    CHECK(bitwise_equal(gelu(a).data(), gelu(a).data()));
    CHECK(bitwise_equal(layer_norm(a, g, be).data(), layer_norm(a, g, be).data()));
    CHECK(bitwise_equal(sigmoid(a).data(), sigmoid(a).data()));
}

TEST_CASE("masked_fill then softmax yields exactly zero weight") {
    Tensor scores = Tensor::from({2, 3}, {0.5, 1.0, -0.3, 2.0, 0.1, 0.4});
    Tensor mask = Tensor::from({2, 3}, {0, 1, 0, 0, 0, 1});
    Tensor w = softmax(masked_fill(scores, mask, -1e9));
    CHECK(w.at(0, 1) == 0.0);
    CHECK(w.at(1, 2) == 0.0);
    CHECK(w.at(0, 0) + w.at(0, 2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("tensor invariants and errors") {
    CHECK_THROWS_AS(Tensor::from({2, 2}, {1, 2, 3}), DimError);
    CHECK_THROWS_AS(Tensor::from({0}, {}), DimError);
    Tensor t = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(t.size() == 6);
    CHECK(t.at(1, 2) == 6.0);
}
