#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "sdi/sfat.hpp"
#include "sdi/synthetic.hpp"

using namespace sdi;
using namespace sdi::sfat;

namespace {

FeatureMap random_map(std::size_t h, std::size_t w, std::size_t c, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  FeatureMap f{h, w, Mat(static_cast<Eigen::Index>(h * w), static_cast<Eigen::Index>(c))};
  for (Eigen::Index i = 0; i < f.x.size(); ++i) f.x.data()[i] = u(rng);
  return f;
}

/// One SFA block's weights for `channels` channels and `heads` heads.
BlockWeights block(std::size_t channels, std::size_t heads, std::uint64_t seed, double beta = 1.0) {
  SfatConfig cfg;
  cfg.channels = channels;
  cfg.levels = 1;
  cfg.heads = {heads};
  cfg.seed = seed;
  cfg.beta = beta;
  return SfatWeights::random(cfg).bottleneck;
}

double rel(const Mat& a, const Mat& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

}  // namespace

TEST(SsMsa, SoftmaxRowsSumToOne) {
  const BlockWeights w = block(8, 2, 1);
  AttentionTrace trace;
  ss_msa(random_map(5, 6, 8, 2), w.msa, 2, &trace);
  ASSERT_EQ(trace.heads.size(), 2u);
  for (const Mat& p : trace.heads) {
    EXPECT_EQ(p.rows(), 4);
    EXPECT_EQ(p.cols(), 4);
    for (Eigen::Index r = 0; r < p.rows(); ++r) EXPECT_NEAR(p.row(r).sum(), 1.0, 1e-6);
    EXPECT_GE(p.minCoeff(), 0.0);
  }
}

TEST(SsMsa, ZeroAlphaGivesUniformAttention) {
  BlockWeights w = block(6, 3, 3);
  w.msa.alpha.setZero();
  const FeatureMap in = random_map(4, 4, 6, 4);
  AttentionTrace trace;
  const FeatureMap out = ss_msa(in, w.msa, 3, &trace);
  for (const Mat& p : trace.heads) EXPECT_LT((p.array() - 0.5).abs().maxCoeff(), 1e-15);

  // Each head's output column is the mean of its value columns.
  const Mat v = in.x * w.msa.wv;
  Mat mixed(v.rows(), v.cols());
  for (Eigen::Index j = 0; j < 3; ++j) {
    const Eigen::VectorXd mean = v.middleCols(j * 2, 2).rowwise().mean();
    mixed.col(j * 2) = mean;
    mixed.col(j * 2 + 1) = mean;
  }
  const FeatureMap pe =
      w.msa.pe2(FeatureMap{4, 4, gelu(w.msa.pe1(FeatureMap{4, 4, v}).x)});
  EXPECT_LT(rel(out.x, mixed * w.msa.wo + pe.x), 1e-12);
}

TEST(SsMsa, SpatialPermutationEquivariantWithoutPositionEmbedding) {
  BlockWeights w = block(8, 2, 5);
  w.msa.position_embedding = false;
  const FeatureMap in = random_map(4, 5, 8, 6);
  std::vector<Eigen::Index> perm(20);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(7));
  FeatureMap permuted = in;
  for (Eigen::Index r = 0; r < 20; ++r) permuted.x.row(r) = in.x.row(perm[static_cast<std::size_t>(r)]);
  const FeatureMap a = ss_msa(in, w.msa, 2), b = ss_msa(permuted, w.msa, 2);
  double diff = 0.0;
  for (Eigen::Index r = 0; r < 20; ++r)
    diff = std::max(diff, (b.x.row(r) - a.x.row(perm[static_cast<std::size_t>(r)])).cwiseAbs().maxCoeff());
  EXPECT_LT(diff, 1e-9);
}

TEST(SsMsa, PositionEmbeddingBreaksPermutationEquivariance) {
  const BlockWeights w = block(4, 1, 8);
  const FeatureMap in = random_map(4, 4, 4, 9);
  FeatureMap flipped = in;
  for (Eigen::Index r = 0; r < 16; ++r) flipped.x.row(r) = in.x.row(15 - r);
  const FeatureMap a = ss_msa(in, w.msa, 1), b = ss_msa(flipped, w.msa, 1);
  double diff = 0.0;
  for (Eigen::Index r = 0; r < 16; ++r) diff = std::max(diff, (b.x.row(r) - a.x.row(15 - r)).cwiseAbs().maxCoeff());
  EXPECT_GT(diff, 1e-6);
}

TEST(SsMsa, HeadDivisibility) {
  const BlockWeights w = block(6, 1, 10);
  EXPECT_THROW(ss_msa(random_map(2, 2, 6, 1), w.msa, 4), Error);
  EXPECT_THROW(ss_msa(random_map(2, 2, 6, 1), w.msa, 0), Error);
}

TEST(FsBranch, ZeroInputPropagatesBiases) {
  const BlockWeights w = block(4, 1, 11);
  const FeatureMap out = fs_branch(FeatureMap{5, 7, Mat::Zero(35, 4)}, w.fs);
  const Eigen::RowVectorXd expect =
      gelu(Mat(w.fs.theta1.bias)) * w.fs.theta2.weight + w.fs.theta2.bias;
  for (Eigen::Index r = 0; r < 35; ++r) EXPECT_LT((out.x.row(r) - expect).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FsBranch, AmplitudeStageIsShiftInvariant) {
  const BlockWeights w = block(3, 1, 12);
  const std::size_t h = 6, wd = 7;
  const FeatureMap in = random_map(h, wd, 3, 13);
  FeatureMap shifted = in;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < wd; ++x)
      shifted.x.row(static_cast<Eigen::Index>(((y + 2) % h) * wd + (x + 3) % wd)) =
          in.x.row(static_cast<Eigen::Index>(y * wd + x));
  const FeatureMap a = fs_spectrum(in, w.fs), b = fs_spectrum(shifted, w.fs);
  EXPECT_EQ(a.width, wd / 2 + 1);
  EXPECT_LT(rel(b.x, a.x), 1e-6);
}

TEST(FsBranch, OutputDimsMatchInput) {
  const BlockWeights w = block(2, 1, 14);
  for (auto [h, wd] : {std::pair{4, 4}, std::pair{5, 7}, std::pair{3, 1}, std::pair{1, 6}}) {
    const FeatureMap out = fs_branch(random_map(h, wd, 2, 15), w.fs);
    EXPECT_EQ(out.height, static_cast<std::size_t>(h));
    EXPECT_EQ(out.width, static_cast<std::size_t>(wd));
    EXPECT_EQ(out.x.rows(), h * wd);
    EXPECT_TRUE(out.x.allFinite());
  }
}

TEST(ResizeBilinear, IdentityAndConstant) {
  const Mat src = random_map(3, 4, 2, 16).x;
  EXPECT_LT(rel(resize_bilinear(src, 3, 4, 3, 4), src), 1e-15);
  const Mat flat = Mat::Constant(12, 2, 0.25);
  EXPECT_LT((resize_bilinear(flat, 3, 4, 7, 5).array() - 0.25).abs().maxCoeff(), 1e-15);
}

TEST(SfaMsa, GateOffIsBitwiseSsMsa) {
  BlockWeights w = block(4, 2, 17);
  w.beta = 0.0;
  const FeatureMap in = random_map(4, 6, 4, 18);
  EXPECT_EQ(sfa_msa(in, w).x, ss_msa(in, w.msa, w.heads).x);
}

TEST(SfaMsa, ZeroFrequencyWeightsReduceToSsMsa) {
  BlockWeights w = block(4, 2, 19);
  w.fs.theta2.weight.setZero();
  w.fs.theta2.bias.setZero();
  const FeatureMap in = random_map(4, 6, 4, 20);
  EXPECT_LT((sfa_msa(in, w).x - ss_msa(in, w.msa, w.heads).x).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SfaMsa, LinearInBeta) {
  BlockWeights w = block(4, 1, 21);
  const FeatureMap in = random_map(5, 5, 4, 22);
  std::vector<Mat> out;
  for (double beta : {0.0, 1.0, 2.0}) {
    w.beta = beta;
    out.push_back(sfa_msa(in, w).x);
  }
  EXPECT_LT(((out[2] - out[1]) - (out[1] - out[0])).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_GT((out[1] - out[0]).norm(), 1e-6);
}

// --- full network -------------------------------------------------------------

TEST(SfatForward, ZeroHeadIsResidualIdentity) {
  SfatConfig cfg;
  SfatWeights w = SfatWeights::random(cfg);
  for (auto& t : w.head.taps) t.setZero();
  w.head.bias.setZero();
  const HsiCube img = synth::random_cube(8, 8, 4, 23);
  EXPECT_EQ(sfat_forward(img, 0.1, cfg, w), img);
}

TEST(SfatForward, Deterministic) {
  SfatConfig cfg;
  cfg.seed = 99;
  const HsiCube img = synth::random_cube(8, 12, 4, 24);
  const HsiCube a = sfat_forward(img, 0.1, cfg, SfatWeights::random(cfg));
  const HsiCube b = sfat_forward(img, 0.1, cfg, SfatWeights::random(cfg));
  EXPECT_EQ(a, b);
  cfg.seed = 100;
  EXPECT_NE(sfat_forward(img, 0.1, cfg, SfatWeights::random(cfg)), a);
}

TEST(SfatForward, SensitiveToChi) {
  SfatConfig cfg;
  const SfatWeights w = SfatWeights::random(cfg);
  const HsiCube img = synth::random_cube(8, 8, 4, 25);
  const HsiCube a = sfat_forward(img, 0.1, cfg, w), b = sfat_forward(img, 0.2, cfg, w);
  EXPECT_GT(relative_error(a, b), 0.0);
}

TEST(SfatForward, UsesOtfFeatures) {
  SfatConfig cfg;
  cfg.channels = 4;
  const SfatWeights w = SfatWeights::random(cfg);
  const SdiSystem sys = synth::system(Encoding::Amplitude, 16, 16, 4, 3);
  const Mat feats = compress_otf_features(sys.otf(), 16, 16);
  EXPECT_EQ(feats.rows(), 256);
  EXPECT_EQ(feats.cols(), static_cast<Eigen::Index>(kOtfPlanes));
  const HsiCube img = synth::random_cube(16, 16, 4, 26);
  EXPECT_GT(relative_error(sfat_forward(img, 0.1, cfg, w, &feats), sfat_forward(img, 0.1, cfg, w)), 0.0);
  const Mat small = compress_otf_features(sys.otf(), 8, 8);
  EXPECT_EQ(small.rows(), 64);
  EXPECT_THROW(sfat_forward(img, 0.1, cfg, w, &small), Error);
}

TEST(SfatForward, ShapeContract) {
  SfatConfig cfg;
  cfg.channels = 4;
  cfg.levels = 3;
  cfg.heads = {1, 2, 4};
  SfatTrace trace;
  sfat_forward(synth::random_cube(8, 12, 4, 27), 0.1, cfg, SfatWeights::random(cfg), nullptr, &trace);
  const std::vector<StageShape> expect{
      {"input", 8, 12, 4 + kAuxPlanes}, {"embed", 8, 12, 4},    {"encoder0", 8, 12, 4}, {"down0", 4, 6, 8},
      {"encoder1", 4, 6, 8},           {"down1", 2, 3, 16},    {"bottleneck", 2, 3, 16}, {"up1", 4, 6, 8},
      {"decoder1", 4, 6, 8},           {"up0", 8, 12, 4},      {"decoder0", 8, 12, 4},  {"residual", 8, 12, 4}};
  ASSERT_EQ(trace.shapes.size(), expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) {
    EXPECT_EQ(trace.shapes[i].stage, expect[i].stage);
    EXPECT_EQ(trace.shapes[i].height, expect[i].height) << expect[i].stage;
    EXPECT_EQ(trace.shapes[i].width, expect[i].width) << expect[i].stage;
    EXPECT_EQ(trace.shapes[i].channels, expect[i].channels) << expect[i].stage;
  }
}

TEST(SfatForward, FiniteForLargeInputs) {
  SfatConfig cfg;
  cfg.channels = 3;
  cfg.heads = {1, 1, 1};
  const SfatWeights w = SfatWeights::random(cfg);
  for (std::uint64_t s = 0; s < 3; ++s) {
    const HsiCube img = synth::random_cube(8, 8, 3, s, -1e3, 1e3);
    for (double chi : {1e-3, 1.0, 1e3}) {
      const HsiCube out = sfat_forward(img, chi, cfg, w);
      for (double v : out.data()) ASSERT_TRUE(std::isfinite(v));
    }
  }
}

TEST(SfatForward, Errors) {
  SfatConfig cfg;
  const SfatWeights w = SfatWeights::random(cfg);
  EXPECT_THROW(sfat_forward(synth::random_cube(6, 8, 4, 1), 0.1, cfg, w), Error);   // 6 not divisible by 4
  EXPECT_THROW(sfat_forward(synth::random_cube(8, 8, 3, 1), 0.1, cfg, w), Error);   // band count
  SfatConfig bad = cfg;
  bad.heads = {3, 2, 4};
  EXPECT_THROW(bad.validate(), Error);
  bad.heads = {1, 2};
  EXPECT_THROW(bad.validate(), Error);
  bad = cfg;
  bad.levels = 0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(SfatWeights, WithinInitBounds) {
  SfatConfig cfg;
  const SfatWeights w = SfatWeights::random(cfg);
  const double bound = 1.0 / std::sqrt(4.0);
  EXPECT_LE(w.bottleneck.msa.wq.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(16.0) + 1e-15);
  EXPECT_LE(w.encoder[0].msa.wq.cwiseAbs().maxCoeff(), bound + 1e-15);
  EXPECT_EQ(w.encoder.size(), 2u);
  EXPECT_EQ(w.decoder.size(), 2u);
  EXPECT_EQ(w.down.size(), 2u);
}
