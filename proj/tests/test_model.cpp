#include <gtest/gtest.h>

#include <random>

#include "dsrgan/discriminator.hpp"
#include "dsrgan/generator.hpp"
#include "dsrgan/grad_check.hpp"
#include "dsrgan/losses.hpp"
#include "oracles.hpp"

using namespace dsrgan;

namespace {

GeneratorConfig tiny_generator(int scale = 2) {
  GeneratorConfig c;
  c.n_res_blocks = 1;
  c.base_features = 2;
  c.upsample_features = 4;
  c.scale = scale;
  c.first_kernel = 3;
  c.last_kernel = 3;
  return c;
}

DiscriminatorConfig tiny_discriminator() {
  DiscriminatorConfig c;
  c.convs = {{1, 1}, {1, 2}, {2, 1}, {2, 2}, {2, 1}, {2, 1}, {2, 1}, {2, 1}, {2, 1}};
  c.dense_widths = {3, 1};
  return c;
}

bool has(const ParamSet<float>& ps, const std::string& name) { return ps.contains(name); }

}  // namespace

TEST(GeneratorBuild, DefaultLayout) {
  const auto ps = build_generator<float>(GeneratorConfig{}, 1);
  for (int b = 0; b < 8; ++b) EXPECT_TRUE(has(ps, "res" + std::to_string(b) + ".conv1.weight"));
  EXPECT_FALSE(has(ps, "res8.conv1.weight"));
  EXPECT_TRUE(has(ps, "up0.conv.weight"));
  EXPECT_TRUE(has(ps, "up1.conv.weight"));
  EXPECT_FALSE(has(ps, "up2.conv.weight"));
  EXPECT_EQ(ps.at("up0.conv.weight").value.shape(), (Shape{512, 128, 3, 3}));
  EXPECT_EQ(ps.at("up0.prelu.slope").value.size(), 128u);
  EXPECT_EQ(ps.at("input.conv.weight").value.shape(), (Shape{128, 1, 9, 9}));
}

TEST(GeneratorBuild, Scale16HasFourStages) {
  GeneratorConfig c;
  c.scale = 16;
  const auto ps = build_generator<float>(c, 1);
  EXPECT_TRUE(has(ps, "up3.conv.weight"));
  EXPECT_FALSE(has(ps, "up4.conv.weight"));
}

TEST(GeneratorBuild, SeededDeterminism) {
  const auto a = build_generator<float>(tiny_generator(), 5);
  const auto b = build_generator<float>(tiny_generator(), 5);
  const auto c = build_generator<float>(tiny_generator(), 6);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == c);
}

TEST(GeneratorBuild, InvalidConfigs) {
  auto c = tiny_generator();
  c.scale = 3;
  EXPECT_THROW(build_generator<float>(c, 1), ConfigError);
  c = tiny_generator();
  c.first_kernel = 4;
  EXPECT_THROW(build_generator<float>(c, 1), ConfigError);
  c = tiny_generator();
  c.upsample_features = 6;
  EXPECT_THROW(build_generator<float>(c, 1), ConfigError);
}

TEST(GeneratorBuild, RejectsMismatchedParameterSet) {
  auto ps = build_generator<float>(tiny_generator(), 1);
  GeneratorConfig wider = tiny_generator();
  wider.base_features = 3;
  EXPECT_THROW(Generator<float>(wider, ps), ConfigError);
}

TEST(ParamCount, ResidualBlockFormula) {
  GeneratorConfig one;
  one.n_res_blocks = 1;
  GeneratorConfig zero = one;
  zero.n_res_blocks = 0;
  const auto d = param_count(build_generator<float>(one, 1)) - param_count(build_generator<float>(zero, 1));
  // Running statistics are buffers; the trainable batch-norm part is 2 * 2 * 128.
  const std::size_t conv = 2 * (3 * 3 * 128 * 128 + 128), bn = 4 * 128, prelu = 2 * 128;
  EXPECT_EQ(d, conv + bn + prelu);
}

TEST(GeneratorForward, DefaultWidthScale4Shape) {
  Generator<float> g(GeneratorConfig{}, 3);
  std::mt19937_64 rng(1);
  const auto y = g.forward(oracle::random_tensor<float>(rng, Shape{1, 1, 25, 25}), Mode::inference);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 100, 100}));
  for (float v : y.vec()) {
    EXPECT_GE(v, -1.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(GeneratorForward, RejectsMultiChannelInput) {
  Generator<float> g(tiny_generator(), 3);
  EXPECT_THROW(g.forward(Tensor<float>(Shape{1, 2, 4, 4}), Mode::inference), ShapeError);
}

TEST(GeneratorForward, ResidualBlockIdentityWithZeroWeights) {
  GeneratorConfig c = tiny_generator();
  c.n_res_blocks = 3;
  c.base_features = 4;
  Generator<double> g(c, 2);
  for (auto& p : g.params()) {
    if (p.name.find(".conv") != std::string::npos && p.name.rfind("res", 0) == 0) p.value.fill(0.0);
  }
  std::mt19937_64 rng(4);
  const auto x = oracle::random_tensor<double>(rng, Shape{2, 4, 5, 5});
  for (std::size_t b = 0; b < 3; ++b) {
    for (Mode m : {Mode::inference, Mode::train}) {
      const auto y = g.forward_residual_block(b, x, m);
      for (std::size_t i = 0; i < x.size(); ++i) ASSERT_NEAR(y[i], x[i], 1e-6);
    }
  }
}

TEST(GeneratorBackward, WholeNetworkGradCheck) {
  Generator<double> g(tiny_generator(), 8);
  std::mt19937_64 rng(12);
  const auto x = oracle::random_tensor<double>(rng, Shape{2, 1, 4, 4});
  const auto y = oracle::random_tensor<double>(rng, Shape{2, 1, 8, 8}, -0.9, 0.9);
  const auto r = grad_check(g.params(), [&](ParamSet<double>&, bool want) {
    const auto out = g.forward(x, Mode::train);
    if (want) g.backward(content_loss_grad(out, y));
    return content_loss(out, y);
  });
  EXPECT_LE(r.max_rel_error, 1e-4) << r.worst_param << "[" << r.worst_index << "] " << r.analytic << " vs "
                                   << r.numeric;
}

TEST(GeneratorBackward, InputGradient) {
  Generator<double> g(tiny_generator(), 8);
  std::mt19937_64 rng(13);
  ParamSet<double> xs;
  xs.add("x", oracle::random_tensor<double>(rng, Shape{2, 1, 4, 4}));
  const auto y = oracle::random_tensor<double>(rng, Shape{2, 1, 8, 8}, -0.9, 0.9);
  const auto r = grad_check(xs, [&](ParamSet<double>& p, bool want) {
    const auto out = g.forward(p[0].value, Mode::train);
    if (want) p[0].grad = g.backward(content_loss_grad(out, y), true);
    return content_loss(out, y);
  });
  EXPECT_LE(r.max_rel_error, 1e-4);
}

TEST(DiscriminatorBuild, DefaultWidthsRise) {
  const DiscriminatorConfig c;
  ASSERT_EQ(c.convs.size(), 9u);
  EXPECT_EQ(c.convs.front().features, 128);
  EXPECT_EQ(c.convs.back().features, 1024);
  for (std::size_t i = 1; i < c.convs.size(); ++i) EXPECT_GE(c.convs[i].features, c.convs[i - 1].features);
  const auto ps = build_discriminator<float>(c, 1);
  EXPECT_EQ(ps.at("conv8.weight").value.shape(), (Shape{1024, 1024, 3, 3}));
  EXPECT_TRUE(build_discriminator<float>(c, 4) == build_discriminator<float>(c, 4));
}

TEST(DiscriminatorBuild, ValidatesSchedule) {
  DiscriminatorConfig c;
  c.convs.pop_back();
  EXPECT_THROW(c.validate(), ConfigError);
  c = DiscriminatorConfig{};
  c.convs[3].features = 64;
  EXPECT_THROW(c.validate(), ConfigError);
  c = DiscriminatorConfig{};
  c.dense_widths = {8, 2};
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(DiscriminatorForward, ProbabilitiesForAnySize) {
  Discriminator<float> d(tiny_discriminator(), 3);
  std::mt19937_64 rng(2);
  for (std::size_t side : {4u, 17u, 100u}) {
    const auto p = d.forward(oracle::random_tensor<float>(rng, Shape{2, 1, side, side}));
    EXPECT_EQ(p.shape(), (Shape{2, 1, 1, 1}));
    for (float v : p.vec()) {
      EXPECT_GT(v, 0.0f);
      EXPECT_LT(v, 1.0f);
    }
  }
  EXPECT_THROW(d.forward(Tensor<float>(Shape{1, 1, 3, 3})), ShapeError);
}

TEST(DiscriminatorBackward, GradCheck) {
  Discriminator<double> d(tiny_discriminator(), 21);
  std::mt19937_64 rng(5);
  const auto x = oracle::random_tensor<double>(rng, Shape{2, 1, 6, 6});
  const auto r = grad_check(d.params(), [&](ParamSet<double>&, bool want) {
    const auto p = d.forward(x);
    const std::vector<double> probs(p.vec().begin(), p.vec().end());
    if (want) {
      const auto g = adversarial_g_grad(AdversarialForm::log, probs);
      d.backward(Tensor<double>(p.shape(), std::vector<double>(g.begin(), g.end())));
    }
    return adversarial_loss_g_log(probs);
  });
  EXPECT_LE(r.max_rel_error, 1e-4) << r.worst_param << "[" << r.worst_index << "]";
}

TEST(DiscriminatorBackward, InputGradCheck) {
  Discriminator<double> d(tiny_discriminator(), 22);
  std::mt19937_64 rng(6);
  ParamSet<double> xs;
  xs.add("x", oracle::random_tensor<double>(rng, Shape{1, 1, 5, 7}));
  const auto r = grad_check(xs, [&](ParamSet<double>& ps, bool want) {
    const auto p = d.forward(ps[0].value);
    if (want) ps[0].grad = d.backward(Tensor<double>(p.shape(), 1.0));
    return p[0];
  });
  EXPECT_LE(r.max_rel_error, 1e-4);
}
