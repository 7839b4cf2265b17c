#include <gtest/gtest.h>

#include <cmath>

#include "eyolo/conv.hpp"
#include "eyolo/errors.hpp"
#include "eyolo/ops.hpp"
#include "eyolo/rng.hpp"
#include "eyolo/tensor.hpp"
#include "support/finite_diff.hpp"
#include "support/reference_conv.hpp"

using namespace eyolo;
using eyolo::testing::finite_difference;
using eyolo::testing::reference_conv2d;
using eyolo::testing::relative_error;

namespace {

Tensor random_tensor(Rng& rng, Shape4 shape, bool requires_grad = false, double lo = -1.0,
                     double hi = 1.0) {
    std::vector<double> values(shape.count());
    for (double& v : values) v = rng.uniform(lo, hi);
    return Tensor::from_values(shape, std::move(values), requires_grad);
}

} // namespace

TEST(Shape4, CountAndFormat) {
    const Shape4 s{2, 3, 4, 5};
    EXPECT_EQ(s.count(), 120u);
    EXPECT_EQ(to_string(s), "(2, 3, 4, 5)");
}

TEST(Tensor, FromValuesValidatesLength) {
    EXPECT_THROW(Tensor::from_values(Shape4{1, 1, 2, 2}, {1.0, 2.0}), DimensionError);
}

TEST(Tensor, RejectsNonFiniteAtBoundary) {
    EXPECT_THROW(Tensor::from_values(Shape4{1, 1, 1, 2}, {1.0, NAN}), NumericError);
    EXPECT_THROW(Tensor::from_values(Shape4{1, 1, 1, 2}, {1.0, INFINITY}), NumericError);
    Tensor x = Tensor::zeros(Shape4{1, 1, 1, 2});
    x.values_mut()[0] = NAN; // sneak past the constructor
    Tensor y = Tensor::zeros(Shape4{1, 1, 1, 2});
    EXPECT_THROW(add(x, y), NumericError);
}

TEST(Tensor, IndexOutOfRange) {
    const Tensor x = Tensor::zeros(Shape4{1, 2, 3, 4});
    EXPECT_THROW(x.at(0, 2, 0, 0), RangeError);
    EXPECT_THROW(x.at(0, 0, 0, 4), RangeError);
}

TEST(Ops, AddIdentity) {
    Rng rng(1);
    const Tensor x = random_tensor(rng, {1, 3, 4, 4});
    const Tensor zeros = Tensor::zeros(x.shape());
    const Tensor y = add(x, zeros);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y.values()[i], x.values()[i]);
}

TEST(Ops, ShapeMismatchReportsBothShapes) {
    const Tensor a = Tensor::zeros(Shape4{1, 2, 4, 4});
    const Tensor b = Tensor::zeros(Shape4{1, 3, 4, 4});
    try {
        add(a, b);
        FAIL() << "expected DimensionError";
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("(1, 2, 4, 4)"), std::string::npos);
        EXPECT_NE(msg.find("(1, 3, 4, 4)"), std::string::npos);
    }
}

TEST(Ops, LeakyReluDefinition) {
    const Tensor x = Tensor::from_values(Shape4{1, 1, 1, 3}, {-1.0, 0.0, 2.0});
    const Tensor y = leaky_relu(x);
    EXPECT_DOUBLE_EQ(y.values()[0], -0.1);
    EXPECT_DOUBLE_EQ(y.values()[1], 0.0);
    EXPECT_DOUBLE_EQ(y.values()[2], 2.0);
}

TEST(Ops, SigmoidSymmetry) {
    EXPECT_DOUBLE_EQ(sigmoid_scalar(0.0), 0.5);
    Rng rng(2);
    for (int i = 0; i < 64; ++i) {
        const double x = rng.uniform(-8.0, 8.0);
        EXPECT_NEAR(sigmoid_scalar(x) + sigmoid_scalar(-x), 1.0, 1e-12);
    }
}

TEST(Ops, SigmoidSaturationPolicy) {
    // values saturate at +-30; deeper logits decode identically
    EXPECT_EQ(sigmoid_scalar(-500.0), sigmoid_scalar(-30.0));
    EXPECT_EQ(sigmoid_scalar(500.0), sigmoid_scalar(30.0));
    EXPECT_GT(sigmoid_scalar(-30.0), 0.0);
    EXPECT_LT(sigmoid_scalar(30.0), 1.0);
    EXPECT_DOUBLE_EQ(sigmoid_scalar(-30.0), 1.0 / (1.0 + std::exp(30.0)));

    // saturated units keep a nonzero gradient
    Tensor x = Tensor::from_values(Shape4{1, 1, 1, 4}, {-500.0, -30.0, 30.0, 500.0},
                                   /*requires_grad=*/true);
    backward(sum(sigmoid(x)));
    for (double g : x.grad()) EXPECT_GT(g, 0.0);

    // tensor op and scalar decode agree bit-for-bit
    const Tensor y = sigmoid(x);
    for (std::size_t i = 0; i < x.size(); ++i)
        EXPECT_EQ(y.values()[i], sigmoid_scalar(x.values()[i]));
}

TEST(Ops, UpsampleReplicatesAndInverts) {
    const Tensor one = Tensor::full(Shape4{1, 1, 1, 1}, 7.0);
    const Tensor up = upsample_nearest_2x(one);
    ASSERT_EQ(up.shape(), (Shape4{1, 1, 2, 2}));
    for (double v : up.values()) EXPECT_DOUBLE_EQ(v, 7.0);

    Rng rng(3);
    const Tensor x = random_tensor(rng, {2, 3, 5, 4});
    const Tensor y = upsample_nearest_2x(x);
    ASSERT_EQ(y.shape(), (Shape4{2, 3, 10, 8}));
    // mean over each 2x2 block recovers the source
    for (int n = 0; n < 2; ++n)
        for (int c = 0; c < 3; ++c)
            for (int i = 0; i < 5; ++i)
                for (int j = 0; j < 4; ++j) {
                    const double mean = (y.at(n, c, 2 * i, 2 * j) + y.at(n, c, 2 * i + 1, 2 * j) +
                                         y.at(n, c, 2 * i, 2 * j + 1) +
                                         y.at(n, c, 2 * i + 1, 2 * j + 1)) /
                                        4.0;
                    EXPECT_DOUBLE_EQ(mean, x.at(n, c, i, j));
                }
}

TEST(Ops, UpsampleHeadScaleShape) {
    const Tensor x = Tensor::zeros(Shape4{1, 256, 13, 13});
    EXPECT_EQ(upsample_nearest_2x(x).shape(), (Shape4{1, 256, 26, 26}));
}

TEST(Ops, ConcatShapesAndRoundTrip) {
    Rng rng(4);
    const Tensor a = random_tensor(rng, {1, 2, 4, 4});
    const Tensor b = random_tensor(rng, {1, 3, 4, 4});
    const Tensor c = concat_channels(a, b);
    ASSERT_EQ(c.shape(), (Shape4{1, 5, 4, 4}));
    // splitting back at channel 2 recovers both inputs
    for (int ch = 0; ch < 2; ++ch)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) EXPECT_EQ(c.at(0, ch, y, x), a.at(0, ch, y, x));
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) EXPECT_EQ(c.at(0, 2 + ch, y, x), b.at(0, ch, y, x));
}

TEST(Backward, SumGivesOnes) {
    Rng rng(5);
    Tensor x = random_tensor(rng, {1, 2, 3, 3}, /*requires_grad=*/true);
    backward(sum(x));
    for (double g : x.grad()) EXPECT_DOUBLE_EQ(g, 1.0);
}

TEST(Backward, PowerRule) {
    Tensor x = Tensor::full(Shape4{1, 1, 1, 1}, 3.0, /*requires_grad=*/true);
    backward(sum(mul(x, x)));
    EXPECT_DOUBLE_EQ(x.grad()[0], 6.0);
}

TEST(Backward, RequiresScalarLoss) {
    Tensor x = Tensor::zeros(Shape4{1, 1, 2, 2}, /*requires_grad=*/true);
    Tensor y = mul(x, x);
    EXPECT_THROW(backward(y), DimensionError);
}

TEST(Backward, ConsumedGraphRaisesStateError) {
    Tensor x = Tensor::full(Shape4{1, 1, 1, 1}, 2.0, /*requires_grad=*/true);
    Tensor loss = sum(mul(x, x));
    backward(loss);
    EXPECT_THROW(backward(loss), StateError);
}

TEST(Backward, NoGraphRaisesStateError) {
    Tensor x = Tensor::full(Shape4{1, 1, 1, 1}, 2.0, /*requires_grad=*/true);
    EXPECT_THROW(backward(x), StateError);
}

TEST(Backward, GradAccumulatesAcrossPasses) {
    Tensor x = Tensor::full(Shape4{1, 1, 1, 1}, 1.0, /*requires_grad=*/true);
    backward(sum(scale(x, 2.0)));
    backward(sum(scale(x, 3.0)));
    EXPECT_DOUBLE_EQ(x.grad()[0], 5.0);
    x.zero_grad();
    EXPECT_FALSE(x.has_grad());
}

TEST(Backward, NoGradGuardDisablesRecording) {
    Tensor x = Tensor::full(Shape4{1, 1, 1, 1}, 2.0, /*requires_grad=*/true);
    {
        NoGradGuard guard;
        Tensor y = mul(x, x);
        EXPECT_FALSE(y.has_graph());
        EXPECT_FALSE(y.requires_grad());
    }
    EXPECT_TRUE(mul(x, x).has_graph());
}

// Gradient-check property: analytic vs central differences for every op,
// through a composition that exercises fan-out too.
TEST(GradientCheck, ElementwiseOpsMatchFiniteDifferences) {
    Rng rng(6);
    Tensor x = random_tensor(rng, {1, 2, 3, 3}, /*requires_grad=*/true);
    const Tensor c = random_tensor(rng, {1, 2, 3, 3});

    const auto loss_value = [&]() {
        NoGradGuard guard;
        const Tensor a = sigmoid(x);
        const Tensor b = leaky_relu(sub(mul(a, c), scale(x, 0.3)));
        const Tensor u = upsample_nearest_2x(b);
        return sum(mul(u, u)).values()[0];
    };

    const Tensor a = sigmoid(x);
    const Tensor b = leaky_relu(sub(mul(a, c), scale(x, 0.3)));
    const Tensor u = upsample_nearest_2x(b);
    backward(sum(mul(u, u)));

    for (std::size_t i = 0; i < x.size(); ++i) {
        const double numeric = finite_difference(x, i, loss_value);
        if (std::abs(numeric) < 1e-6 && std::abs(x.grad()[i]) < 1e-6) continue;
        EXPECT_LT(relative_error(x.grad()[i], numeric), 1e-4) << "component " << i;
    }
}

TEST(GradientCheck, ConcatMatchesFiniteDifferences) {
    Rng rng(7);
    Tensor a = random_tensor(rng, {1, 2, 2, 2}, true);
    Tensor b = random_tensor(rng, {1, 3, 2, 2}, true);
    const auto loss_value = [&]() {
        NoGradGuard guard;
        const Tensor c = concat_channels(a, b);
        return sum(mul(c, c)).values()[0];
    };
    const Tensor c = concat_channels(a, b);
    backward(sum(mul(c, c)));
    for (std::size_t i = 0; i < a.size(); ++i)
        EXPECT_LT(relative_error(a.grad()[i], finite_difference(a, i, loss_value)), 1e-4);
    for (std::size_t i = 0; i < b.size(); ++i)
        EXPECT_LT(relative_error(b.grad()[i], finite_difference(b, i, loss_value)), 1e-4);
}

TEST(Conv2d, PointwiseIdentity) {
    // 1x1 kernel = identity over channels, zero bias -> output equals input
    Rng rng(8);
    const Tensor x = random_tensor(rng, {1, 3, 5, 5});
    std::vector<double> eye(9, 0.0);
    eye[0 * 3 + 0] = eye[1 * 3 + 1] = eye[2 * 3 + 2] = 1.0;
    const ConvParams p = ConvParams::same(Tensor::from_values(Shape4{3, 3, 1, 1}, std::move(eye)),
                                          Tensor::zeros(Shape4{1, 3, 1, 1}));
    const Tensor y = conv2d(x, p);
    ASSERT_EQ(y.shape(), x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(y.values()[i], x.values()[i]);
}

TEST(Conv2d, AllOnesKernelOnConstantInput) {
    // 3x3 all-ones kernel over constant 1.0, same padding: interior 9,
    // corners 4 (direct summation)
    const Tensor x = Tensor::full(Shape4{1, 1, 6, 6}, 1.0);
    const ConvParams p = ConvParams::same(Tensor::full(Shape4{1, 1, 3, 3}, 1.0),
                                          Tensor::zeros(Shape4{1, 1, 1, 1}));
    const Tensor y = conv2d(x, p);
    EXPECT_DOUBLE_EQ(y.at(0, 0, 2, 3), 9.0);
    EXPECT_DOUBLE_EQ(y.at(0, 0, 0, 0), 4.0);
    EXPECT_DOUBLE_EQ(y.at(0, 0, 0, 5), 4.0);
    EXPECT_DOUBLE_EQ(y.at(0, 0, 5, 0), 4.0);
    EXPECT_DOUBLE_EQ(y.at(0, 0, 0, 2), 6.0); // edge, not corner
}

TEST(Conv2d, StrideTwoShape) {
    const Tensor x = Tensor::zeros(Shape4{1, 4, 416, 416});
    Rng rng(9);
    const ConvParams p = ConvParams::same(random_tensor(rng, {32, 4, 3, 3}),
                                          Tensor::zeros(Shape4{1, 32, 1, 1}), 2);
    EXPECT_EQ(conv2d(x, p).shape(), (Shape4{1, 32, 208, 208}));
}

TEST(Conv2d, MatchesDirectSummationOracle) {
    Rng rng(10);
    for (const int stride : {1, 2}) {
        const Tensor x = random_tensor(rng, {2, 3, 8, 8});
        const Tensor k = random_tensor(rng, {4, 3, 3, 3});
        const Tensor b = random_tensor(rng, {1, 4, 1, 1});
        const Tensor got = conv2d(x, ConvParams::same(k, b, stride));
        const Tensor want = reference_conv2d(x, k, b, stride, 1);
        ASSERT_EQ(got.shape(), want.shape());
        for (std::size_t i = 0; i < got.size(); ++i)
            EXPECT_NEAR(got.values()[i], want.values()[i], 1e-12) << "stride " << stride;
    }
    // pointwise path
    const Tensor x = random_tensor(rng, {1, 5, 6, 6});
    const Tensor k = random_tensor(rng, {2, 5, 1, 1});
    const Tensor b = random_tensor(rng, {1, 2, 1, 1});
    const Tensor got = conv2d(x, ConvParams::same(k, b));
    const Tensor want = reference_conv2d(x, k, b, 1, 0);
    for (std::size_t i = 0; i < got.size(); ++i)
        EXPECT_NEAR(got.values()[i], want.values()[i], 1e-12);
}

TEST(Conv2d, Linearity) {
    Rng rng(11);
    const Tensor x = random_tensor(rng, {1, 2, 6, 6});
    const Tensor y = random_tensor(rng, {1, 2, 6, 6});
    const Tensor k = random_tensor(rng, {3, 2, 3, 3});
    const Tensor zero_bias = Tensor::zeros(Shape4{1, 3, 1, 1});
    const ConvParams p = ConvParams::same(k, zero_bias);
    const double alpha = 0.7, beta = -1.3;

    const Tensor lhs = conv2d(add(scale(x, alpha), scale(y, beta)), p);
    const Tensor rhs = add(scale(conv2d(x, p), alpha), scale(conv2d(y, p), beta));
    for (std::size_t i = 0; i < lhs.size(); ++i)
        EXPECT_NEAR(lhs.values()[i], rhs.values()[i], 1e-10);
}

TEST(Conv2d, ChannelMismatchError) {
    const Tensor x = Tensor::zeros(Shape4{1, 3, 4, 4});
    Rng rng(12);
    const ConvParams p = ConvParams::same(random_tensor(rng, {2, 4, 3, 3}),
                                          Tensor::zeros(Shape4{1, 2, 1, 1}));
    try {
        conv2d(x, p);
        FAIL() << "expected DimensionError";
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("(1, 3, 4, 4)"), std::string::npos);
        EXPECT_NE(msg.find("(2, 4, 3, 3)"), std::string::npos);
    }
}

TEST(Conv2d, InvariantViolationsRejected) {
    Rng rng(13);
    // 5x5 kernels don't exist here
    EXPECT_THROW(ConvParams::same(random_tensor(rng, {1, 1, 5, 5}),
                                  Tensor::zeros(Shape4{1, 1, 1, 1})),
                 ConfigError);
    // stride 2 needs 3x3
    EXPECT_THROW(ConvParams::same(random_tensor(rng, {1, 1, 1, 1}),
                                  Tensor::zeros(Shape4{1, 1, 1, 1}), 2),
                 ConfigError);
}

TEST(Conv2d, GradientMatchesFiniteDifferences) {
    Rng rng(14);
    for (const int stride : {1, 2}) {
        Tensor x = random_tensor(rng, {1, 2, 4, 4}, true);
        Tensor k = random_tensor(rng, {3, 2, 3, 3}, true);
        Tensor b = random_tensor(rng, {1, 3, 1, 1}, true);
        const ConvParams p = ConvParams::same(k, b, stride);

        const auto loss_value = [&]() {
            NoGradGuard guard;
            const Tensor y = conv2d(x, p);
            return sum(mul(y, y)).values()[0];
        };
        const Tensor y = conv2d(x, p);
        backward(sum(mul(y, y)));

        for (Tensor* t : {&x, &k, &b})
            for (std::size_t i = 0; i < t->size(); ++i) {
                const double numeric = finite_difference(*t, i, loss_value);
                if (std::abs(numeric) < 1e-6 && std::abs(t->grad()[i]) < 1e-6) continue;
                EXPECT_LT(relative_error(t->grad()[i], numeric), 1e-4)
                    << "stride " << stride << " component " << i;
            }
    }
}

TEST(Conv2d, PointwiseGradient) {
    Rng rng(15);
    Tensor x = random_tensor(rng, {1, 3, 3, 3}, true);
    Tensor k = random_tensor(rng, {2, 3, 1, 1}, true);
    Tensor b = random_tensor(rng, {1, 2, 1, 1}, true);
    const ConvParams p = ConvParams::same(k, b);
    const auto loss_value = [&]() {
        NoGradGuard guard;
        const Tensor y = conv2d(x, p);
        return sum(mul(y, y)).values()[0];
    };
    const Tensor y = conv2d(x, p);
    backward(sum(mul(y, y)));
    for (Tensor* t : {&x, &k, &b})
        for (std::size_t i = 0; i < t->size(); ++i)
            EXPECT_LT(relative_error(t->grad()[i], finite_difference(*t, i, loss_value)), 1e-4);
}

TEST(Determinism, ForwardBitIdentical) {
    Rng rng(16);
    const Tensor x = random_tensor(rng, {1, 3, 8, 8});
    const Tensor k = random_tensor(rng, {4, 3, 3, 3});
    const Tensor b = random_tensor(rng, {1, 4, 1, 1});
    const ConvParams p = ConvParams::same(k, b, 2);
    const Tensor y1 = conv2d(x, p);
    const Tensor y2 = conv2d(x, p);
    for (std::size_t i = 0; i < y1.size(); ++i) EXPECT_EQ(y1.values()[i], y2.values()[i]);
}
