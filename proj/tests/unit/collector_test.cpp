#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "mcqpsy/collector.hpp"
#include "mcqpsy/endpoint.hpp"
#include "mcqpsy/error.hpp"
#include "test_support.hpp"

namespace mcqpsy {
namespace {

using testing::FixedEndpoint;
using testing::fixture;
using testing::letters;
using testing::make_item;
using testing::ScriptedEndpoint;

TEST(Permutation, CyclicSetIsTheLatinSquare) {
  auto perms = cyclic_permutations();
  const int expected[4][4] = {{0, 1, 2, 3}, {1, 2, 3, 0}, {2, 3, 0, 1}, {3, 0, 1, 2}};
  for (int s = 0; s < 4; ++s) {
    EXPECT_TRUE(perms[s].is_valid());
    for (int k = 0; k < 4; ++k) EXPECT_EQ(perms[s].order[k], expected[s][k]);
  }
  for (int k = 0; k < 4; ++k) {
    std::set<int> column;
    for (int s = 0; s < 4; ++s) column.insert(perms[s].order[k]);
    EXPECT_EQ(column.size(), 4u) << "position " << k;
  }
}

TEST(Permutation, InvalidOrdersDetected) {
  EXPECT_FALSE((OptionPermutation{{0, 0, 1, 2}}).is_valid());
  EXPECT_FALSE((OptionPermutation{{0, 1, 2, 4}}).is_valid());
}

TEST(Unpermute, IdentityPassesThrough) {
  PermutationLogits run{OptionPermutation::identity(), {1, 2, 3, 4}};
  EXPECT_EQ(unpermute(run), (OptionScores{1, 2, 3, 4}));
}

TEST(Unpermute, RotationByOne) {
  PermutationLogits run{{{1, 2, 3, 0}}, {1, 2, 3, 4}};
  EXPECT_EQ(unpermute(run), (OptionScores{4, 1, 2, 3}));
}

TEST(Unpermute, InvertsPermuteForEveryOrder) {
  OptionScores canonical{0.5, -1.25, 3.0, 2.0};
  std::array<int, 4> order{0, 1, 2, 3};
  do {
    OptionPermutation perm{order};
    EXPECT_EQ(unpermute({perm, permute(canonical, perm)}), canonical);
  } while (std::next_permutation(order.begin(), order.end()));
}

TEST(RenderPrompt, PassageTemplateInCanonicalOrder) {
  Item item = make_item("r1", 0, {}, "reading", "4");
  item.passage = "Once upon a time.";
  item.stem = "What happened?";
  item.options = {"alpha", "beta", "gamma", "delta"};
  EXPECT_EQ(render_prompt(item, OptionPermutation::identity()),
            "Based on the following text, select the correct answer to the question below.\n\n"
            "Text: Once upon a time.\n\n"
            "Question:\nWhat happened?\n"
            "A) alpha\nB) beta\nC) gamma\nD) delta\n\n"
            "Respond only with the letter of the answer (A, B, C, or D).");
}

TEST(RenderPrompt, PassageFreeTemplate) {
  Item item = make_item("h1", 0);
  item.stem = "Who?";
  item.options = {"alpha", "beta", "gamma", "delta"};
  EXPECT_EQ(render_prompt(item, OptionPermutation::identity()),
            "Select the correct answer to the following question.\n\n"
            "Question:\nWho?\n"
            "A) alpha\nB) beta\nC) gamma\nD) delta\n\n"
            "Respond only with the letter of the answer (A, B, C, or D).");
}

TEST(RenderPrompt, RotationPlacesOptionOneAtA) {
  Item item = make_item("h1", 0);
  item.options = {"alpha", "beta", "gamma", "delta"};
  std::string prompt = render_prompt(item, OptionPermutation::rotation(1));
  EXPECT_NE(prompt.find("A) beta\nB) gamma\nC) delta\nD) alpha\n"), std::string::npos) << prompt;
}

TEST(CollectItem, BuildsLatinSquareRunsFromMock) {
  FixedEndpoint endpoint(letters(-0.1, -3.0, -3.2, -4.0));
  Item item = make_item("h1", 2);
  ModelResponse r = collect_item(item, "mock", endpoint, RetryPolicy::immediate());
  EXPECT_EQ(endpoint.calls(), 4u);
  EXPECT_EQ(r.item_id, "h1");
  EXPECT_EQ(r.model_id, "mock");
  EXPECT_EQ(r.source, ResponseSource::kEndpoint);
  auto perms = cyclic_permutations();
  for (int s = 0; s < 4; ++s) {
    EXPECT_EQ(r.runs[s].permutation, perms[s]);
    EXPECT_EQ(r.runs[s].logits_by_position, (OptionScores{-0.1, -3.0, -3.2, -4.0}));
  }
  EXPECT_NO_THROW(validate_model_response(r));
  // Each prompt shows the permuted options.
  auto prompts = endpoint.prompts();
  EXPECT_NE(prompts[1].find("A) second"), std::string::npos);
  EXPECT_NE(prompts[3].find("A) fourth"), std::string::npos);
}

// A position-only mock ignores the prompt, so canonical logits differ across
// runs only by the rotation applied.
TEST(CollectItem, PermutationInvariantMockYieldsRotations) {
  FixedEndpoint endpoint(letters(-0.5, -1.5, -2.5, -3.5));
  ModelResponse r = collect_item(make_item("h1", 0), "mock", endpoint, RetryPolicy::immediate());
  OptionScores base = unpermute(r.runs[0]);
  for (int s = 0; s < 4; ++s) {
    OptionScores canonical = unpermute(r.runs[s]);
    for (int j = 0; j < 4; ++j) EXPECT_EQ(canonical[(j + s) % 4], base[j]);
  }
}

TEST(CollectItem, FailureOnThirdRunYieldsNoResponse) {
  ScriptedEndpoint endpoint([](int call, const std::string&) -> std::vector<TokenLogprob> {
    if (call >= 3) throw TransportError("connection refused");
    return letters(-1, -2, -3, -4);
  });
  EXPECT_THROW(collect_item(make_item("h1", 0), "mock", endpoint, RetryPolicy::immediate(3)),
               TransportError);
  EXPECT_EQ(endpoint.calls(), 5);  // two good runs, then three attempts on the third
}

TEST(ResponseFile, ReadsFixtureAndSkipsMetadata) {
  auto responses = read_response_file(fixture("toy_responses.jsonl"));
  ASSERT_EQ(responses.size(), 12u);
  for (const auto& r : responses) {
    EXPECT_EQ(r.source, ResponseSource::kFile);
    EXPECT_NO_THROW(validate_model_response(r));
  }
}

std::string two_item_file() {
  std::string out = R"({"_metadata": {"model_name": "m"}})" "\n";
  for (const char* id : {"a", "b"}) {
    out += std::string(R"({"item_id": ")") + id +
           R"(", "model_id": "m", "collected_at": "2025-01-01T00:00:00Z", "source": "file", "runs": [)"
           R"({"order": [0,1,2,3], "logits": [1,2,3,4]}, {"order": [1,2,3,0], "logits": [1,2,3,4]},)"
           R"({"order": [2,3,0,1], "logits": [1,2,3,4]}, {"order": [3,0,1,2], "logits": [1,2,3,4]}]})"
           "\n";
  }
  return out;
}

TEST(ResponseFile, AdapterFileOfTwoItems) {
  std::istringstream in(two_item_file());
  EXPECT_EQ(parse_responses(in).size(), 2u);
}

TEST(ResponseFile, ThreeRunsRejected) {
  std::string text =
      R"({"item_id": "a", "model_id": "m", "collected_at": "", "source": "file", "runs": [)"
      R"({"order": [0,1,2,3], "logits": [1,2,3,4]}, {"order": [1,2,3,0], "logits": [1,2,3,4]},)"
      R"({"order": [2,3,0,1], "logits": [1,2,3,4]}]})" "\n";
  std::istringstream in(text);
  EXPECT_THROW(parse_responses(in), ParseError);
}

TEST(ResponseFile, RepeatedPermutationIsLatinSquareError) {
  std::string text =
      R"({"item_id": "a", "model_id": "m", "collected_at": "", "source": "file", "runs": [)"
      R"({"order": [0,1,2,3], "logits": [1,2,3,4]}, {"order": [1,2,3,0], "logits": [1,2,3,4]},)"
      R"({"order": [1,2,3,0], "logits": [1,2,3,4]}, {"order": [3,0,1,2], "logits": [1,2,3,4]}]})" "\n";
  std::istringstream in(text);
  EXPECT_THROW(parse_responses(in), LatinSquareError);
}

TEST(ResponseFile, WriteReadRoundTrip) {
  FixedEndpoint endpoint(letters(-0.25, -1.0 / 3.0, -2.0, -7.125));
  ModelResponse r = collect_item(make_item("h1", 0), "m", endpoint, RetryPolicy::immediate());
  std::stringstream buffer;
  write_response(r, buffer);
  auto back = parse_responses(buffer);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].item_id, r.item_id);
  EXPECT_EQ(back[0].collected_at, r.collected_at);
  for (int s = 0; s < 4; ++s) {
    EXPECT_EQ(back[0].runs[s].permutation, r.runs[s].permutation);
    EXPECT_EQ(back[0].runs[s].logits_by_position, r.runs[s].logits_by_position);
  }
}

}  // namespace
}  // namespace mcqpsy
