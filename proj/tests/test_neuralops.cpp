#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dsrgan/adam.hpp"
#include "dsrgan/grad_check.hpp"
#include "dsrgan/layers.hpp"
#include "dsrgan/ops.hpp"
#include "grad_fixtures.hpp"
#include "oracles.hpp"

using namespace dsrgan;
namespace O = dsrgan::ops;

namespace {

Tensor<double> t1(Shape s, std::vector<double> v) { return Tensor<double>(s, std::move(v)); }

}  // namespace

TEST(Conv2d, IdentityKernel) {
  std::mt19937_64 rng(1);
  const auto x = oracle::random_tensor<double>(rng, Shape{1, 1, 5, 4});
  Tensor<double> w(Shape{1, 1, 3, 3});
  w(0, 0, 1, 1) = 1.0;
  const auto y = O::conv2d(x, w, Tensor<double>(Shape{1, 1, 1, 1}), 1, 1);
  EXPECT_EQ(y.vec(), x.vec());
}

TEST(Conv2d, AllOnesKernel) {
  const Tensor<double> x(Shape{1, 1, 3, 3}, 1.0), w(Shape{1, 1, 3, 3}, 1.0);
  const auto y = O::conv2d(x, w, Tensor<double>(Shape{1, 1, 1, 1}), 1, 1);
  EXPECT_EQ(y.vec(), (std::vector<double>{4, 6, 4, 6, 9, 6, 4, 6, 4}));
}

TEST(Conv2d, StrideShape) {
  const Tensor<double> x(Shape{1, 1, 4, 4}), w(Shape{1, 1, 3, 3});
  EXPECT_EQ(O::conv2d(x, w, Tensor<double>(Shape{1, 1, 1, 1}), 2, 1).shape(), (Shape{1, 1, 2, 2}));
}

TEST(Conv2d, MatchesDirectSummation) {
  std::mt19937_64 rng(7);
  for (int stride : {1, 2}) {
    for (int pad : {0, 1, 4}) {
      const auto x = oracle::random_tensor<double>(rng, Shape{2, 3, 7, 6});
      const auto w = oracle::random_tensor<double>(rng, Shape{4, 3, pad == 4 ? 9u : 3u, pad == 4 ? 9u : 3u});
      const auto b = oracle::random_tensor<double>(rng, Shape{4, 1, 1, 1});
      const auto y = O::conv2d(x, w, b, stride, pad);
      const auto r = oracle::conv2d(x, w, b, stride, pad);
      ASSERT_EQ(y.shape(), r.shape());
      for (std::size_t i = 0; i < y.size(); ++i) ASSERT_NEAR(y[i], r[i], 1e-12);
    }
  }
}

// Large enough that the column buffer is split into several row bands.
TEST(Conv2d, BandedLargePlane) {
  std::mt19937_64 rng(8);
  const auto x = oracle::random_tensor<double>(rng, Shape{1, 64, 150, 150});
  const auto w = oracle::random_tensor<double>(rng, Shape{1, 64, 9, 9});
  const auto b = oracle::random_tensor<double>(rng, Shape{1, 1, 1, 1});
  ASSERT_LT(O::detail::band_rows(O::ConvGeometry::make(x.shape(), w.shape(), 1, 4)), 150u);
  const auto y = O::conv2d(x, w, b, 1, 4);
  const auto r = oracle::conv2d(x, w, b, 1, 4);
  for (std::size_t i = 0; i < y.size(); ++i) ASSERT_NEAR(y[i], r[i], 1e-10);

  // Adjoint identities: <conv(x), gy> = <x, grad_x> = <w, grad_w> without bias.
  const auto gy = oracle::random_tensor<double>(rng, y.shape());
  Tensor<double> gx, gw(w.shape()), gb(b.shape());
  O::conv2d_backward(x, w, gy, 1, 4, &gx, gw, gb);
  const auto y0 = O::conv2d(x, w, Tensor<double>(b.shape()), 1, 4);
  double lhs = 0, via_x = 0, via_w = 0;
  for (std::size_t i = 0; i < y0.size(); ++i) lhs += y0[i] * gy[i];
  for (std::size_t i = 0; i < x.size(); ++i) via_x += x[i] * gx[i];
  for (std::size_t i = 0; i < w.size(); ++i) via_w += w[i] * gw[i];
  EXPECT_NEAR(via_x, lhs, 1e-8 * std::abs(lhs));
  EXPECT_NEAR(via_w, lhs, 1e-8 * std::abs(lhs));
}

TEST(Conv2d, ChannelMismatchIsShapeError) {
  EXPECT_THROW(O::conv2d(Tensor<double>(Shape{1, 2, 4, 4}), Tensor<double>(Shape{1, 1, 3, 3}),
                         Tensor<double>(Shape{1, 1, 1, 1}), 1, 1),
               ShapeError);
}

TEST(PRelu, ForwardAndSlopeGradient) {
  const auto x = t1(Shape{1, 1, 1, 2}, {-2, 3});
  const Tensor<double> a(Shape{1, 1, 1, 1}, 0.25);
  EXPECT_EQ(O::prelu(x, a).vec(), (std::vector<double>{-0.5, 3}));
  EXPECT_EQ(O::prelu(x, Tensor<double>(Shape{1, 1, 1, 1}, 0.0)).vec(), (std::vector<double>{0, 3}));

  const auto xm = t1(Shape{1, 1, 1, 1}, {-2});
  Tensor<double> ga(Shape{1, 1, 1, 1});
  O::prelu_backward(xm, a, Tensor<double>(Shape{1, 1, 1, 1}, 1.0), ga);
  const double h = 1e-6;
  const double fd = (O::prelu(xm, Tensor<double>(Shape{1, 1, 1, 1}, 0.25 + h))[0] -
                     O::prelu(xm, Tensor<double>(Shape{1, 1, 1, 1}, 0.25 - h))[0]) /
                    (2 * h);
  EXPECT_EQ(ga[0], -2.0);
  EXPECT_LE(std::abs(ga[0] - fd) / std::abs(fd), 1e-4);
}

TEST(LeakyRelu, ForwardAndGradient) {
  const auto y = O::leaky_relu(t1(Shape{1, 1, 1, 2}, {-1, 5}), 0.2);
  EXPECT_NEAR(y[0], -0.2, 1e-15);
  EXPECT_EQ(y[1], 5.0);
  const auto x = t1(Shape{1, 1, 1, 1}, {-3});
  const double g = O::leaky_relu_backward(x, 0.2, Tensor<double>(Shape{1, 1, 1, 1}, 1.0))[0];
  const double h = 1e-6;
  const double fd = (O::leaky_relu(t1(Shape{1, 1, 1, 1}, {-3 + h}), 0.2)[0] -
                     O::leaky_relu(t1(Shape{1, 1, 1, 1}, {-3 - h}), 0.2)[0]) /
                    (2 * h);
  EXPECT_NEAR(g, 0.2, 1e-15);
  EXPECT_LE(std::abs(g - fd) / fd, 1e-4);
}

TEST(BatchNorm, StandardizesChannel) {
  const auto x = t1(Shape{1, 1, 1, 2}, {1, 3});
  Tensor<double> rm(Shape{1, 1, 1, 1}), rv(Shape{1, 1, 1, 1}, 1.0);
  O::BatchNormCache<double> cache;
  auto y = O::batch_norm_train(x, Tensor<double>(Shape{1, 1, 1, 1}, 1.0), Tensor<double>(Shape{1, 1, 1, 1}),
                               rm, rv, cache);
  EXPECT_NEAR(y[0], -1.0, 1e-5);
  EXPECT_NEAR(y[1], 1.0, 1e-5);
  y = O::batch_norm_train(x, Tensor<double>(Shape{1, 1, 1, 1}, 2.0), Tensor<double>(Shape{1, 1, 1, 1}, 1.0),
                          rm, rv, cache);
  EXPECT_NEAR(y[0], -1.0, 1e-5);
  EXPECT_NEAR(y[1], 3.0, 1e-5);
}

TEST(BatchNorm, RunningStatisticsUpdate) {
  const auto x = t1(Shape{1, 1, 1, 2}, {1, 3});
  Tensor<double> rm(Shape{1, 1, 1, 1}), rv(Shape{1, 1, 1, 1}, 1.0);
  O::BatchNormCache<double> cache;
  O::batch_norm_train(x, Tensor<double>(Shape{1, 1, 1, 1}, 1.0), Tensor<double>(Shape{1, 1, 1, 1}), rm, rv, cache);
  // mean 2, unbiased variance 2, momentum 0.1
  EXPECT_NEAR(rm[0], 0.2, 1e-15);
  EXPECT_NEAR(rv[0], 0.9 + 0.2, 1e-15);
}

TEST(BatchNorm, InferenceIdentityStatistics) {
  std::mt19937_64 rng(3);
  const auto x = oracle::random_tensor<double>(rng, Shape{2, 3, 4, 4});
  const auto y = O::batch_norm_inference(x, Tensor<double>(Shape{3, 1, 1, 1}, 1.0), Tensor<double>(Shape{3, 1, 1, 1}),
                                         Tensor<double>(Shape{3, 1, 1, 1}), Tensor<double>(Shape{3, 1, 1, 1}, 1.0));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], x[i], 1e-5 * std::abs(x[i]) + 1e-12);
}

TEST(BatchNorm, SingleValueBatchIsRejected) {
  Tensor<double> rm(Shape{1, 1, 1, 1}), rv(Shape{1, 1, 1, 1}, 1.0);
  O::BatchNormCache<double> cache;
  EXPECT_THROW(O::batch_norm_train(Tensor<double>(Shape{1, 1, 1, 1}), Tensor<double>(Shape{1, 1, 1, 1}, 1.0),
                                   Tensor<double>(Shape{1, 1, 1, 1}), rm, rv, cache),
               PreconditionError);
}

TEST(PixelShuffle, Ordering) {
  const auto x = t1(Shape{1, 4, 1, 1}, {1, 2, 3, 4});
  const auto y = O::pixel_shuffle(x, 2);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 2, 2}));
  EXPECT_EQ(y.vec(), (std::vector<double>{1, 2, 3, 4}));
}

TEST(PixelShuffle, ShapeAndInverse) {
  std::mt19937_64 rng(5);
  const auto x = oracle::random_tensor<float>(rng, Shape{2, 512, 25, 25});
  const auto y = O::pixel_shuffle(x, 2);
  EXPECT_EQ(y.shape(), (Shape{2, 128, 50, 50}));
  EXPECT_EQ(O::pixel_unshuffle(y, 2).vec(), x.vec());
  EXPECT_THROW(O::pixel_shuffle(Tensor<float>(Shape{1, 3, 2, 2}), 2), ShapeError);
}

TEST(AdaptivePool, GlobalMeanIdentityAndQuadrants) {
  std::vector<double> v(16);
  for (int i = 0; i < 16; ++i) v[i] = i + 1;
  const auto x = t1(Shape{1, 1, 4, 4}, v);
  EXPECT_EQ(O::adaptive_avg_pool(x, 2, 2).vec(), (std::vector<double>{3.5, 5.5, 11.5, 13.5}));
  EXPECT_EQ(O::adaptive_avg_pool(x, 1, 1).vec(), (std::vector<double>{8.5}));
  EXPECT_EQ(O::adaptive_avg_pool(x, 4, 4).vec(), x.vec());
}

TEST(Dense, Arithmetic) {
  const auto y = O::dense(t1(Shape{1, 2, 1, 1}, {2, 3}), t1(Shape{1, 2, 1, 1}, {1, 1}), t1(Shape{1, 1, 1, 1}, {0}));
  EXPECT_EQ(y.vec(), (std::vector<double>{5}));
  const auto x = t1(Shape{1, 2, 1, 1}, {-4, 7});
  EXPECT_EQ(O::dense(x, t1(Shape{2, 2, 1, 1}, {1, 0, 0, 1}), Tensor<double>(Shape{2, 1, 1, 1})).vec(), x.vec());
}

TEST(Activations, SigmoidTanh) {
  const Tensor<double> z(Shape{1, 1, 1, 1});
  EXPECT_EQ(O::sigmoid(z)[0], 0.5);
  EXPECT_EQ(O::tanh(z)[0], 0.0);
  const double g = O::sigmoid_backward(O::sigmoid(z), Tensor<double>(Shape{1, 1, 1, 1}, 1.0))[0];
  const double h = 1e-6;
  const double fd = (O::sigmoid_scalar(h) - O::sigmoid_scalar(-h)) / (2 * h);
  EXPECT_EQ(g, 0.25);
  EXPECT_NEAR(g, fd, 1e-9);
  EXPECT_EQ(O::sigmoid_scalar(-1000.0), 0.0);
  EXPECT_EQ(O::sigmoid_scalar(1000.0), 1.0);
}

TEST(Adam, ZeroGradientIsFixedPoint) {
  ParamSet<double> ps;
  ps.add("w", Tensor<double>(Shape{1, 1, 1, 3}, 1.5));
  auto st = AdamState<double>::for_params(ps);
  adam_step(ps, st, 0.1);
  EXPECT_EQ(ps[0].value.vec(), (std::vector<double>(3, 1.5)));
  EXPECT_EQ(st.m[0].vec(), (std::vector<double>(3, 0.0)));
  EXPECT_EQ(st.v[0].vec(), (std::vector<double>(3, 0.0)));
}

TEST(Adam, FirstStepMovesBySignTimesLr) {
  ParamSet<double> ps;
  ps.add("w", t1(Shape{1, 1, 1, 3}, {0, 0, 0}));
  ps[0].grad = t1(Shape{1, 1, 1, 3}, {3.0, -0.02, 1e3});
  auto st = AdamState<double>::for_params(ps);
  adam_step(ps, st, 1e-3);
  EXPECT_NEAR(ps[0].value[0], -1e-3, 1e-9);
  EXPECT_NEAR(ps[0].value[1], 1e-3, 1e-9);
  EXPECT_NEAR(ps[0].value[2], -1e-3, 1e-9);
}

TEST(Adam, MatchesScalarOracle) {
  ParamSet<double> ps;
  ps.add("w", t1(Shape{1, 1, 1, 1}, {0.7}));
  auto st = AdamState<double>::for_params(ps);
  oracle::ScalarAdam ref;
  double theta = 0.7;
  for (int k = 0; k < 2; ++k) {
    ps[0].grad[0] = 1.0;
    adam_step(ps, st, 0.1);
    theta = ref.step(theta, 1.0, 0.1);
    EXPECT_NEAR(ps[0].value[0], theta, 1e-12);
  }
  // Varying gradients over more steps.
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 50; ++k) {
    const double g = nd(rng);
    ps[0].grad[0] = g;
    adam_step(ps, st, 0.01);
    theta = ref.step(theta, g, 0.01);
    EXPECT_NEAR(ps[0].value[0], theta, 1e-12);
  }
  EXPECT_EQ(st.step, 52);
}

TEST(Adam, SkipsFrozenBuffersAndChecksState) {
  ParamSet<double> ps;
  ps.add("w", Tensor<double>(Shape{1, 1, 1, 1}, 1.0));
  ps.add("running", Tensor<double>(Shape{1, 1, 1, 1}, 2.0), false);
  ps[0].grad[0] = 1.0;
  ps[1].grad[0] = 1.0;
  auto st = AdamState<double>::for_params(ps);
  adam_step(ps, st, 0.1);
  EXPECT_NE(ps[0].value[0], 1.0);
  EXPECT_EQ(ps[1].value[0], 2.0);
  AdamState<double> bad;
  EXPECT_THROW(adam_step(ps, bad, 0.1), ShapeError);
}

TEST(GradCheck, QuadraticClosedForm) {
  ParamSet<double> ps;
  ps.add("theta", t1(Shape{1, 1, 1, 1}, {3.0}));
  const auto r = grad_check(ps, [](ParamSet<double>& p, bool g) {
    const double th = p[0].value[0];
    if (g) p[0].grad[0] = 2 * th;
    return th * th;
  });
  EXPECT_EQ(r.analytic, 6.0);
  EXPECT_NEAR(r.numeric, 6.0, 1e-8);
  EXPECT_LE(r.max_rel_error, 1e-8);
}

TEST(GradCheck, CorruptedGradientFails) {
  std::mt19937_64 rng(4);
  ParamSet<double> ps;
  ps.add("x", oracle::random_tensor<double>(rng, Shape{1, 1, 4, 4}));
  ps.add("w", oracle::random_tensor<double>(rng, Shape{1, 1, 3, 3}));
  ps.add("b", Tensor<double>(Shape{1, 1, 1, 1}));
  const auto target = oracle::random_tensor<double>(rng, Shape{1, 1, 4, 4});
  auto make = [&](double corrupt) {
    return [&, corrupt](ParamSet<double>& p, bool g) {
      const auto y = O::conv2d(p[0].value, p[1].value, p[2].value, 1, 1);
      if (g) {
        auto gy = content_loss_grad(y, target);
        O::conv2d_backward(p[0].value, p[1].value, gy, 1, 1, &p[0].grad, p[1].grad, p[2].grad);
        for (auto& v : p[1].grad.vec()) v *= corrupt;
      }
      return content_loss(y, target);
    };
  };
  EXPECT_LE(grad_check(ps, make(1.0)).max_rel_error, 1e-4);
  EXPECT_GE(grad_check(ps, make(1.1)).max_rel_error, 0.05);
}

TEST(GradCheck, NonFiniteLossThrows) {
  ParamSet<double> ps;
  ps.add("x", Tensor<double>(Shape{1, 1, 1, 1}));
  EXPECT_THROW(grad_check(ps, [](ParamSet<double>&, bool) { return std::nan(""); }), PreconditionError);
}

class LayerGradients : public ::testing::TestWithParam<std::size_t> {};

TEST_P(LayerGradients, WithinTolerance) {
  const auto c = fixtures::all_cases()[GetParam()];
  const auto r = c.run();
  EXPECT_LE(r.max_rel_error, 1e-4) << c.name << ": worst " << r.worst_param << "[" << r.worst_index
                                   << "] analytic " << r.analytic << " numeric " << r.numeric;
  EXPECT_GT(r.coordinates, 0u);
}

INSTANTIATE_TEST_SUITE_P(AllLayers, LayerGradients,
                         ::testing::Range<std::size_t>(0, fixtures::all_cases().size()));

TEST(Layers, ParameterCount) {
  ParamSet<double> ps;
  EXPECT_EQ(param_count(ps), 0u);
  ParamInit init(1);
  Conv2dLayer<double>::declare(ps, init, "c", 1, 1, 3);
  EXPECT_EQ(param_count(ps), 10u);
  BatchNormLayer<double>::declare(ps, "bn", 4);
  // Running statistics are buffers, not trainable parameters.
  EXPECT_EQ(param_count(ps), 18u);
  EXPECT_THROW(Conv2dLayer<double>::declare(ps, init, "c", 1, 1, 3), ConfigError);
}

TEST(Layers, HeInitIsSeeded) {
  ParamInit a(42), b(42), c(43);
  const auto ta = a.he_normal<float>(Shape{8, 4, 3, 3}, 36);
  EXPECT_EQ(ta.vec(), b.he_normal<float>(Shape{8, 4, 3, 3}, 36).vec());
  EXPECT_NE(ta.vec(), c.he_normal<float>(Shape{8, 4, 3, 3}, 36).vec());
}
