#include <doctest.h>

#include <cmath>

#include "splitinfer/activations.hpp"
#include "splitinfer/rng.hpp"

using namespace splitinfer;

TEST_CASE("sigmoid at the symmetry point") {
    CHECK(apply(Activation::sigmoid(), {0.0}) == Vector{0.5});
}

TEST_CASE("ramp piecewise definition") {
    const Vector out = apply(Activation::ramp(0.2), {-1.0, 0.1, 0.5});
    CHECK(out == Vector{0.0, 0.1, 0.2});
}

TEST_CASE("rectifier piecewise definition") {
    CHECK(apply(Activation::rectifier(), {-3.0, 0.0, 2.0}) == Vector{0.0, 0.0, 2.0});
}

TEST_CASE("ramp threshold must be positive") {
    CHECK_THROWS_AS(Activation::ramp(0.0), Error);
    CHECK_THROWS_AS(Activation::ramp(-0.1), Error);
}

TEST_CASE("inverse sigmoid at the symmetry point and out of range") {
    CHECK(approx_inverse(Activation::sigmoid(), {0.5}) == Vector{0.0});
    // a dropped output is exactly 0.0 and must invert to 0, not -inf
    CHECK(approx_inverse(Activation::sigmoid(), {0.0}) == Vector{0.0});
    CHECK(approx_inverse(Activation::sigmoid(), {1.0}) == Vector{0.0});
}

TEST_CASE("sigmoid round-trip") {
    const Vector a = apply(Activation::sigmoid(), {1.7});
    CHECK(approx_inverse(Activation::sigmoid(), a)[0] == doctest::Approx(1.7).epsilon(1e-10));
}

TEST_CASE("round-trip property for the invertible kinds") {
    Rng rng(5);
    for (const Activation& f :
         {Activation::sigmoid(), Activation::tanh(), Activation::linear()}) {
        for (int i = 0; i < 200; ++i) {
            const double z = rng.next_range(-5.0, 5.0);
            const double back = approx_inverse_scalar(f, apply_scalar(f, z));
            CHECK(std::abs(back - z) < 1e-9);
        }
    }
}

TEST_CASE("ramp output range") {
    Rng rng(6);
    const Activation ramp = Activation::ramp(kRampV02);
    for (int i = 0; i < 200; ++i) {
        const double a = apply_scalar(ramp, rng.next_range(-10.0, 10.0));
        CHECK(a >= 0.0);
        CHECK(a <= kRampV02);
    }
}

TEST_CASE("rectifier idempotence, bit-exact") {
    Rng rng(8);
    const Activation rect = Activation::rectifier();
    Vector z(64);
    for (double& v : z)
        v = rng.next_range(-3.0, 3.0);
    const Vector once = apply(rect, z);
    CHECK(apply(rect, once) == once);
}

TEST_CASE("all kinds are non-decreasing") {
    Rng rng(9);
    for (const Activation& f : {Activation::linear(), Activation::sigmoid(),
                                Activation::tanh(), Activation::rectifier(),
                                Activation::ramp(kRampV005)}) {
        for (int i = 0; i < 100; ++i) {
            double a = rng.next_range(-4.0, 4.0);
            double b = rng.next_range(-4.0, 4.0);
            if (a > b)
                std::swap(a, b);
            CHECK(apply_scalar(f, a) <= apply_scalar(f, b));
        }
    }
}

TEST_CASE("derivatives match finite differences away from kinks") {
    Rng rng(10);
    const double h = 1e-6;
    for (const Activation& f : {Activation::linear(), Activation::sigmoid(),
                                Activation::tanh(), Activation::rectifier(),
                                Activation::ramp(0.2)}) {
        for (int i = 0; i < 100; ++i) {
            const double z = rng.next_range(-3.0, 3.0);
            if (f.kind == Act::Rectifier && std::abs(z) < 1e-3)
                continue;
            if (f.kind == Act::Ramp && (std::abs(z) < 1e-3 || std::abs(z - f.ramp_v) < 1e-3))
                continue;
            const double num =
                (apply_scalar(f, z + h) - apply_scalar(f, z - h)) / (2.0 * h);
            const double ana = derivative_scalar(f, z, apply_scalar(f, z));
            CHECK(std::abs(num - ana) < 1e-5);
        }
    }
}

TEST_CASE("activation parsing round-trips") {
    CHECK(parse_activation("sigmoid") == Activation::sigmoid());
    CHECK(parse_activation("ramp:0.05").ramp_v == doctest::Approx(0.05));
    CHECK(parse_activation("ramp").ramp_v == doctest::Approx(kRampV02));
    CHECK_THROWS_AS(parse_activation("softplus"), Error);
}
