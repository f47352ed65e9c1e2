#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "generators.hpp"
#include "sentinel/pbox.hpp"
#include "test_oracles.hpp"

using namespace sentinel;
using namespace sentinel::pbox;

namespace {

Bits from_int(std::uint64_t x, std::size_t n) {
  Bits b(n);
  for (std::size_t i = 0; i < n; ++i) b[i] = (x >> i) & 1U;
  return b;
}

// Random distinct wiring of m outputs from n inputs.
std::vector<std::size_t> distinct_wiring(gen::Engine& e, std::size_t n, std::size_t m) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::shuffle(all.begin(), all.end(), e);
  all.resize(m);
  return all;
}

} // namespace

TEST(Straight, IdentityAndHandTrace) {
  EXPECT_EQ(to_string(apply_straight(StraightPBox::identity(3), bits_from_string("101"))), "101");
  EXPECT_EQ(to_string(apply_straight(StraightPBox({2, 0, 1}), bits_from_string("110"))), "011");
}

TEST(Straight, RejectsNonPermutationAndBadLength) {
  EXPECT_THROW(StraightPBox({0, 0, 1}), DomainError);
  EXPECT_THROW(StraightPBox({0, 3, 1}), DomainError);
  EXPECT_THROW(apply_straight(StraightPBox::identity(3), bits_from_string("10")), DomainError);
}

TEST(Straight, PreservesPopcount) {
  gen::Engine e(1);
  for (int i = 0; i < 500; ++i) {
    const std::size_t n = 1 + gen::below(e, 32);
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    std::shuffle(p.begin(), p.end(), e);
    const Bits in = random_bits(e, n);
    EXPECT_EQ(popcount(apply_straight(StraightPBox(p), in)), popcount(in));
  }
}

TEST(Straight, InverseIsExhaustiveIdentity) {
  for (std::size_t n = 1; n <= 5; ++n) {
    for (const auto& box : enumerate_straight(n)) {
      const auto inv = box.inverse();
      for (std::uint64_t x = 0; x < (1U << n); ++x) {
        const Bits b = from_int(x, n);
        EXPECT_EQ(apply_straight(inv, apply_straight(box, b)), b);
      }
    }
  }
  gen::Engine e(2);
  for (int i = 0; i < 50; ++i) {
    auto boxes = enumerate_straight(8);
    const auto& box = boxes[gen::below(e, boxes.size())];
    const Bits b = from_int(gen::below(e, 256), 8);
    EXPECT_EQ(apply_straight(box.inverse(), apply_straight(box, b)), b);
  }
}

TEST(Enumerate, Counts) {
  EXPECT_EQ(enumerate_straight(3).size(), 6U);
  EXPECT_EQ(enumerate_straight(1).size(), 1U);
  EXPECT_EQ(enumerate_straight(1)[0], StraightPBox::identity(1));
  auto four = enumerate_straight(4);
  EXPECT_EQ(four.size(), 24U);
  std::set<std::vector<std::size_t>> distinct;
  for (const auto& b : four) distinct.insert(b.permutation());
  EXPECT_EQ(distinct.size(), 24U);
  EXPECT_EQ(enumerate_straight(8).size(), 40320U);
  EXPECT_THROW(enumerate_straight(0), DomainError);
  EXPECT_THROW(enumerate_straight(9), DomainError);
}

TEST(Compression, HandTraceAndPrefix) {
  EXPECT_EQ(to_string(apply_compression(CompressionPBox({0, 2}, 4), bits_from_string("1010"))), "11");
  gen::Engine e(3);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 2 + gen::below(e, 30);
    const std::size_t m = 1 + gen::below(e, n - 1);
    std::vector<std::size_t> w(m);
    std::iota(w.begin(), w.end(), std::size_t{0});
    const Bits in = random_bits(e, n);
    EXPECT_EQ(apply_compression(CompressionPBox(w, n), in), Bits(in.begin(), in.begin() + static_cast<long>(m)));
  }
}

TEST(Compression, Validation) {
  EXPECT_THROW(CompressionPBox({0, 1}, 2), DomainError);
  EXPECT_THROW(CompressionPBox({}, 2), DomainError);
  EXPECT_THROW(CompressionPBox({5}, 4), DomainError);
  EXPECT_THROW(apply_compression(CompressionPBox({0}, 4), bits_from_string("101")), DomainError);
  EXPECT_NO_THROW(CompressionPBox({1, 1}, 4));
  EXPECT_FALSE(CompressionPBox({1, 1}, 4).distinct_wiring());
}

TEST(Compression, DefaultDropsInputs) {
  auto box = CompressionPBox::default_key_code();
  EXPECT_EQ(box.inputs(), 64U);
  EXPECT_EQ(box.outputs(), 16U);
  EXPECT_TRUE(box.distinct_wiring());
  EXPECT_EQ(box.dropped_inputs().size(), 48U);
}

TEST(Compression, PreimageCountExhaustive) {
  gen::Engine e(4);
  for (std::size_t n = 2; n <= 10; ++n) {
    for (std::size_t m = 1; m < n; ++m) {
      const auto w = distinct_wiring(e, n, m);
      const CompressionPBox box(w, n);
      std::map<Bits, std::uint64_t> counts;
      for (std::uint64_t x = 0; x < (std::uint64_t{1} << n); ++x) ++counts[apply_compression(box, from_int(x, n))];
      EXPECT_EQ(counts.size(), std::size_t{1} << m);
      for (const auto& [out, c] : counts) EXPECT_EQ(c, std::uint64_t{1} << (n - m));
      const std::uint64_t y = gen::below(e, std::size_t{1} << m);
      EXPECT_EQ(oracle::count_preimages(w, n, y), std::uint64_t{1} << (n - m));
    }
  }
}

TEST(Compression, CollisionPairForEveryWiring) {
  gen::Engine e(5);
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 2 + gen::below(e, 20);
    const std::size_t m = 1 + gen::below(e, n - 1);
    std::vector<std::size_t> w(m);
    for (auto& x : w) x = gen::below(e, n);
    const CompressionPBox box(w, n);
    auto [a, b] = collision_pair(box);
    EXPECT_NE(a, b);
    EXPECT_EQ(apply_compression(box, a), apply_compression(box, b));
  }
}

TEST(KeyCode, DeterministicAndCollidesOnDroppedBit) {
  Rng rng(6);
  const auto box = CompressionPBox::default_key_code();
  Key k = make_key("k", 0, rng);
  EXPECT_EQ(derive_key_code(k, box), derive_key_code(k, box));
  Key twin = k;
  twin.material[box.dropped_inputs().front()] = !twin.material[box.dropped_inputs().front()];
  EXPECT_NE(twin.material, k.material);
  EXPECT_EQ(derive_key_code(twin, box), derive_key_code(k, box));
  EXPECT_THROW(derive_key_code(make_key("s", 0, rng, 32), box), DomainError);
}

TEST(KeyCode, CandidatesFromCodeAtSmallWidth) {
  Rng rng(7);
  const std::size_t n = 12;
  const CompressionPBox box = CompressionPBox::drop_inputs(n, 4);
  const Key k = make_key("k", 0, rng, n);
  const Bits code = derive_key_code(k, box);
  std::uint64_t candidates = 0;
  for (std::uint64_t x = 0; x < (1U << n); ++x) {
    Key guess{"k", 0, from_int(x, n)};
    candidates += derive_key_code(guess, box) == code;
  }
  EXPECT_GE(candidates, std::uint64_t{1} << (n - 4));
}

TEST(ChallengeCode, DependsOnNonceAndEpoch) {
  Rng rng(8);
  const auto box = CompressionPBox::default_key_code();
  const Key k = make_key("k", 0, rng);
  const Bits n1 = random_bits(rng, 32);
  const Bits n2 = random_bits(rng, 32);
  const auto c = derive_challenge_code(k, n1, 0, box);
  EXPECT_EQ(c.size(), 16U);
  EXPECT_EQ(c, derive_challenge_code(k, n1, 0, box));
  EXPECT_NE(c, derive_challenge_code(k, n2, 0, box));
  EXPECT_NE(c, derive_challenge_code(k, n1, 1, box));
}

TEST(Wiring, Serialization) {
  EXPECT_EQ(format_wiring({3, 0, 12}), "3,0,12");
  EXPECT_EQ(parse_wiring(" 3, 0 ,12"), (std::vector<std::size_t>{3, 0, 12}));
  EXPECT_THROW(parse_wiring("1,,2"), DomainError);
  EXPECT_THROW(parse_wiring("1,x"), DomainError);
}
