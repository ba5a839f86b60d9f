#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "hysim/expr.hpp"
#include "hysim/taylor.hpp"

using namespace hysim;

namespace {

double factorial(int k) {
    double r = 1;
    for (int i = 2; i <= k; ++i) r *= i;
    return r;
}

} // namespace

TEST_CASE("eval_box matches pointwise math") {
    // e(x, y) = sin(x) * y + x^3 - exp(y) / (2 + cos(x))
    Expr e = sub(add(mul(sin(var(0)), var(1)), pow_int(var(0), 3)),
                 div(exp(var(1)), add(constant(2.0), cos(var(0)))));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    int misses = 0;
    for (int it = 0; it < 5000; ++it) {
        double x = d(rng), y = d(rng);
        Box env = Box::from_points({x, y});
        double ref = std::sin(x) * y + x * x * x - std::exp(y) / (2 + std::cos(x));
        Interval r = eval_box(e, env);
        if (!r.contains(ref)) ++misses;
        if (r.width() > 1e-12 * (1 + std::fabs(ref))) ++misses;
    }
    CHECK(misses == 0);
}

TEST_CASE("constant folding keeps interval constants") {
    Expr c = constant(Interval(1.0, 2.0));
    Interval r = eval_box(c, Box(1));
    CHECK(r.same(Interval(1.0, 2.0)));
}

TEST_CASE("differentiate against central differences") {
    Expr e = add(mul(sin(var(0)), cos(var(1))), mul(var(0), pow_int(var(1), 2)));
    Expr dx = differentiate(e, 0);
    Expr dy = differentiate(e, 1);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> d(-1.5, 1.5);
    for (int it = 0; it < 50; ++it) {
        double x = d(rng), y = d(rng);
        auto f = [&](double a, double b) { return std::sin(a) * std::cos(b) + a * b * b; };
        const double h = 1e-6;
        double fdx = (f(x + h, y) - f(x - h, y)) / (2 * h);
        double fdy = (f(x, y + h) - f(x, y - h)) / (2 * h);
        Box env = Box::from_points({x, y});
        CHECK(eval_box(dx, env).midpoint() == doctest::Approx(fdx).epsilon(1e-5));
        CHECK(eval_box(dy, env).midpoint() == doctest::Approx(fdy).epsilon(1e-5));
    }
}

TEST_CASE("lie derivative of the rotation radius is zero") {
    // f = (-y, x), g = x^2 + y^2: dg/dt = -2xy + 2xy = 0
    VectorField f{{neg(var(1)), var(0)}};
    Expr g = add(pow_int(var(0), 2), pow_int(var(1), 2));
    Expr lg = lie_derivative(g, f);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    for (int it = 0; it < 20; ++it) {
        Box env = Box::from_points({d(rng), d(rng)});
        CHECK(eval_box(lg, env).contains(0.0));
        CHECK(eval_box(lg, env).mag() < 1e-12);
    }
}

TEST_CASE("taylor coefficients of x' = x are 1/k!") {
    VectorField f{{var(0)}};
    auto coeffs = taylor_coefficients(f, Box::from_points({1.0}), 12);
    REQUIRE(coeffs.size() >= 13);
    for (int k = 0; k <= 12; ++k) {
        CHECK(coeffs[k][0].contains(1.0 / factorial(k)));
        CHECK(coeffs[k][0].width() < 1e-12);
    }
}

TEST_CASE("taylor coefficients of rotation are the sine/cosine series") {
    // x' = -y, y' = x from (1, 0): x(t) = cos t, y(t) = sin t
    VectorField f{{neg(var(1)), var(0)}};
    auto coeffs = taylor_coefficients(f, Box::from_points({1.0, 0.0}), 10);
    REQUIRE(coeffs.size() >= 11);
    for (int k = 0; k <= 10; ++k) {
        double cx = (k % 2 == 0) ? ((k / 2) % 2 == 0 ? 1.0 : -1.0) / factorial(k) : 0.0;
        double cy = (k % 2 == 1) ? (((k - 1) / 2) % 2 == 0 ? 1.0 : -1.0) / factorial(k) : 0.0;
        CHECK(coeffs[k][0].contains(cx));
        CHECK(coeffs[k][1].contains(cy));
        CHECK(coeffs[k][0].width() < 1e-12);
    }
}

TEST_CASE("eval_series sums the truncated series over a time window") {
    VectorField f{{var(0)}};
    auto coeffs = taylor_coefficients(f, Box::from_points({1.0}), 15);
    Interval s = eval_series(coeffs, 0, Interval(0.5));
    CHECK(s.contains(std::exp(0.5)));
    CHECK(s.width() < 1e-9);
}

TEST_CASE("centered form over a parallelotope is at least as tight as natural") {
    // h(x) = x^2 - x over a narrow box around 3
    Expr h = sub(pow_int(var(0), 2), var(0));
    Box wide(1);
    wide[0] = Interval(2.99, 3.01);
    Interval natural = eval_box(h, wide);
    Interval centered = eval_ptope(h, Parallelotope::from_box(wide));
    CHECK(centered.contains(3 * 3 - 3.0));
    CHECK(centered.width() <= natural.width() + 1e-14);
    // random point containment
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> d(2.99, 3.01);
    for (int it = 0; it < 200; ++it) {
        double x = d(rng);
        CHECK(centered.contains(x * x - x));
    }
}

TEST_CASE("variational augmentation doubles and squares the dimension") {
    VectorField f{{neg(var(1)), var(0)}};
    VectorField vf = augment_variational(f);
    CHECK(vf.components.size() == 2 + 4);
    // J' = Df * J with Df = [[0,-1],[1,0]]: from J = I the derivative is
    // [[-J10, -J11], [J00, J01]]
    Box env = Box::from_points({1.0, 0.0, /*J*/ 1.0, 0.0, 0.0, 1.0});
    CHECK(eval_box(vf.components[2], env).contains(0.0));
    CHECK(eval_box(vf.components[3], env).contains(-1.0));
    CHECK(eval_box(vf.components[4], env).contains(1.0));
    CHECK(eval_box(vf.components[5], env).contains(0.0));
}
