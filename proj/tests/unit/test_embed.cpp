#include <gtest/gtest.h>

#include <cmath>

#include "autoprov/embed/embedding.hpp"

using namespace autoprov;
using namespace autoprov::embed;

TEST(HashingEmbedder, DeterministicUnitNorm) {
  HashingEmbedder h;
  auto a = h.embed("type=SYSCALL pid=441 exe=/usr/bin/bash");
  auto b = h.embed("type=SYSCALL pid=441 exe=/usr/bin/bash");
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.dimension(), 256u);
  double n = 0;
  for (double v : a.values) n += v * v;
  EXPECT_NEAR(std::sqrt(n), 1.0, 1e-6);
  EXPECT_THROW(h.embed(""), Error);
}

TEST(HashingEmbedder, SharedSkeletonIsCloser) {
  HashingEmbedder h;
  auto a = h.embed("type=SYSCALL msg=audit(1523361600.120:77): pid=441 exe=\"/usr/bin/bash\" name=\"/etc/passwd\"");
  auto b = h.embed("type=SYSCALL msg=audit(1523361711.004:91): pid=9 exe=\"/usr/sbin/sshd\" name=\"/var/log/auth.log\"");
  auto c = h.embed("{\"datum\":{\"type\":\"EVENT_WRITE\",\"subject\":\"c9f1\",\"timestampNanos\":1523361600000000000}}");
  EXPECT_LT(cosine_distance(a, b), cosine_distance(a, c));
  EXPECT_LT(cosine_distance(a, b), cosine_distance(b, c));
}

TEST(HashingEmbedder, ManualFeatureCheck) {
  // "abc" has one trigram; its bucket and sign follow FNV-1a 64 directly.
  HashingEmbedder h(16, false);
  auto e = h.embed("abc");
  std::uint64_t x = 0xcbf29ce484222325ULL;
  for (unsigned char c : std::string("abc")) {
    x ^= c;
    x *= 0x100000001b3ULL;
  }
  for (std::size_t i = 0; i < 16; ++i)
    EXPECT_EQ(e.values[i], i == x % 16 ? ((x >> 63) ? -1.0 : 1.0) : 0.0);
}

TEST(HashingEmbedder, AppendingDiffersFromDisjointText) {
  HashingEmbedder h;
  EXPECT_GT(cosine_distance(h.embed("abcdef"), h.embed("XYZ!?#")), 0.0);
}

TEST(Cosine, Basics) {
  auto x = Embedding::normalized({1, 0});
  auto y = Embedding::normalized({0, 3});
  auto nx = Embedding::normalized({-2, 0});
  EXPECT_NEAR(cosine_distance(x, x), 0.0, 1e-9);
  EXPECT_NEAR(cosine_distance(x, y), 1.0, 1e-12);
  EXPECT_NEAR(cosine_distance(x, nx), 2.0, 1e-12);
  EXPECT_EQ(cosine_distance(x, y), cosine_distance(y, x));
  EXPECT_THROW(cosine_distance(x, Embedding::normalized({1, 0, 0})), DimensionMismatch);
  auto z = Embedding::normalized({0, 0});
  EXPECT_TRUE(z.zero);
}
