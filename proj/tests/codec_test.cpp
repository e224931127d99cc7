#include <gtest/gtest.h>

#include "handoff/codec.hpp"
#include "support/generators.hpp"

namespace {

using namespace handoff;

template <typename A>
class RoundTrip : public ::testing::Test {};
using Algebras = ::testing::Types<NatAlgebra, MapAlgebra, PNAlgebra>;
TYPED_TEST_SUITE(RoundTrip, Algebras);

TYPED_TEST(RoundTrip, ReachableStatesSurviveEncoding) {
  using A = TypeParam;
  std::size_t checked = 0;
  testgen::random_exchanges<A>(7, 1500, [&](const auto&, const auto&, const auto& after) {
    const auto bytes = encode(after);
    ASSERT_EQ(decode<A>(bytes), after);
    ASSERT_EQ(encode(decode<A>(bytes)), bytes);
    ++checked;
  });
  EXPECT_GT(checked, 100u);
}

TEST(Codec, EncodingIsCanonical) {
  auto s = init(NodeId("B"), 0);
  s.vals[NodeId("Z")] = 3;
  s.vals[NodeId("A")] = 1;
  s.slots[NodeId("C")] = {2, 1};
  auto t = init(NodeId("B"), 0);
  t.slots[NodeId("C")] = {2, 1};
  t.vals[NodeId("A")] = 1;
  t.vals[NodeId("Z")] = 3;
  EXPECT_EQ(encode(s), encode(t));
}

TEST(Codec, TokenKeysUseSourceBarDestination) {
  auto s = init(NodeId("A"), 1);
  s.tokens[TokenKey{NodeId("A"), NodeId("B")}] = {{0, 4}, 9};
  const auto j = nlohmann::json::parse(encode(s));
  EXPECT_EQ(j["tokens"]["A|B"]["n"], 9);
  EXPECT_EQ(j["tokens"]["A|B"]["ck"], nlohmann::json::array({0, 4}));
}

TEST(Codec, RejectsMalformedInput) {
  EXPECT_THROW(decode<NatAlgebra>("{"), DecodeError);
  EXPECT_THROW(decode<NatAlgebra>("[]"), DecodeError);
  const auto good = nlohmann::json::parse(encode(init(NodeId("A"), 1)));

  auto missing = good;
  missing.erase("sck");
  EXPECT_THROW(from_json<NatAlgebra>(missing), DecodeError);

  auto negative = good;
  negative["val"] = -1;
  EXPECT_THROW(from_json<NatAlgebra>(negative), DecodeError);

  auto bad_key = good;
  bad_key["tokens"]["AB"] = {{"ck", {0, 0}}, {"n", 1}};
  EXPECT_THROW(from_json<NatAlgebra>(bad_key), DecodeError);

  auto bad_id = good;
  bad_id["id"] = "";
  EXPECT_THROW(from_json<NatAlgebra>(bad_id), DecodeError);

  auto bad_clock = good;
  bad_clock["slots"]["C"] = {1};
  EXPECT_THROW(from_json<NatAlgebra>(bad_clock), DecodeError);
}

TEST(Codec, RejectsStructurallyInvalidStates) {
  auto no_self = nlohmann::json::parse(encode(init(NodeId("A"), 1)));
  no_self["vals"] = nlohmann::json::object();
  EXPECT_THROW(from_json<NatAlgebra>(no_self), DecodeError);

  auto extra = nlohmann::json::parse(encode(init(NodeId("A"), 1)));
  extra["vals"]["B"] = 2;
  EXPECT_THROW(from_json<NatAlgebra>(extra), DecodeError);
}

TEST(Codec, PNRejectsForeignKeys) {
  auto s = nlohmann::json::parse(encode(init<PNAlgebra>(NodeId("A"), 1)));
  s["val"] = {{"x", 1}};
  EXPECT_THROW(from_json<PNAlgebra>(s), DecodeError);
  s["val"] = {{"p", 1}};
  EXPECT_NO_THROW(from_json<PNAlgebra>(s));
}

TEST(Codec, ReservedBarInIdIsRejectedOnEncode) {
  auto s = init(NodeId("A"), 1);
  s.id = NodeId("A|B");
  s.vals = {{s.id, 0}};
  EXPECT_THROW(encode(s), std::exception);
}

}  // namespace
