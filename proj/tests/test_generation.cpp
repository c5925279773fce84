#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <memory>

#include "dgqa/generation.hpp"
#include "test_util.hpp"

using namespace dgqa;
using testutil::live_mock_gateway;
using testutil::mini_corpus;

TEST_CASE("parse_generated_pairs reads numbered blocks") {
    const std::string raw =
        "1. ***QUESTION: How do I rescan channels?\n"
        "***ANSWER: Open Broadcasting and run Auto Tuning.\n"
        "2. ***QUESTION:\nCan I tune manually?\n"
        "***ANSWER:\n\nYes, pick Manual Tuning instead.\n";
    const auto pairs = parse_generated_pairs(raw, 2);
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0].question == "How do I rescan channels?");
    CHECK(pairs[0].answer == "Open Broadcasting and run Auto Tuning.");
    CHECK(pairs[1].question == "Can I tune manually?");
    CHECK(pairs[1].answer == "Yes, pick Manual Tuning instead.");
}

TEST_CASE("parse_generated_pairs accepts unnumbered markers") {
    const std::string raw =
        "***QUESTION: One?\n***ANSWER: First.\n"
        "***QUESTION: Two?\n***ANSWER: Second.\n";
    const auto pairs = parse_generated_pairs(raw, 2);
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[1].question == "Two?");
}

TEST_CASE("parse_generated_pairs failures keep the raw reply") {
    const std::string chatter = "Sure! Here are some ideas, no markers though.";
    try {
        parse_generated_pairs(chatter, 2);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.raw_text == chatter);
    }

    // Count mismatch is a failure even when every block parses.
    const std::string two = "***QUESTION: One?\n***ANSWER: First.\n"
                            "***QUESTION: Two?\n***ANSWER: Second.\n";
    CHECK_THROWS_AS(parse_generated_pairs(two, 3), ParseError);
    CHECK_THROWS_AS(parse_generated_pairs(two, 1), ParseError);

    // Answer marker before the question marker, or empty fields.
    CHECK_THROWS_AS(parse_generated_pairs("***QUESTION: Q?\n***ANSWER:\n  \n", 1),
                    ParseError);
}

TEST_CASE("generate_synthetic_pairs round-trips through a scripted provider") {
    auto provider = std::make_shared<MockProvider>();
    provider->on_complete = [](const GenerationRequest& r) -> std::string {
        REQUIRE(r.prompt.front().content.find("Generate 2 question and answer pairs") !=
                std::string::npos);
        return "1. ***QUESTION: What input does the antenna use?\n"
               "***ANSWER: The ANT IN connector.\n"
               "2. ***QUESTION: Do I need an amplifier?\n"
               "***ANSWER: Only for weak signals.\n";
    };
    auto gateway = live_mock_gateway(provider);
    const auto corpus = mini_corpus();
    const auto pairs =
        generate_synthetic_pairs(gateway, "writer", corpus.sections().front(), 2);
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0].answer == "The ANT IN connector.");
    CHECK_THROWS_AS(
        generate_synthetic_pairs(gateway, "writer", corpus.sections().front(), 0),
        ValidationError);
}

TEST_CASE("synthesize_negative keeps refusals and rejects real answers") {
    const auto corpus = mini_corpus();
    const auto& passage = corpus.sections().front();

    auto refusing = std::make_shared<MockProvider>();
    refusing->on_complete = [](const GenerationRequest&) {
        return "I'm sorry, I can't find any information about that in the provided "
               "section of the user manual.";
    };
    auto refusing_gw = live_mock_gateway(refusing);
    const auto answer = synthesize_negative(refusing_gw, "m", "How do I fly?", passage);
    CHECK(is_refusal(answer, default_refusal_patterns()));

    auto chatty = std::make_shared<MockProvider>();
    chatty->on_complete = [](const GenerationRequest&) {
        return "You fly by flapping the remote vigorously.";
    };
    auto chatty_gw = live_mock_gateway(chatty);
    CHECK_THROWS_AS(synthesize_negative(chatty_gw, "m", "How do I fly?", passage),
                    QualityError);
}

namespace {

std::vector<QAExample> seed_dataset(const Corpus& corpus, std::size_t n) {
    std::vector<QAExample> out;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = corpus.sections()[i % corpus.sections().size()];
        QAExample e;
        e.id = "seed-" + std::to_string(i);
        e.question = "What does " + s.title + " cover?";
        e.passage_path = s.path;
        e.answer = "It covers " + s.title + ".";
        e.source = Source::crowdsourced;
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace

TEST_CASE("augment_with_negatives appends deterministic refusal examples") {
    const auto corpus = mini_corpus();
    const auto dataset = seed_dataset(corpus, 8);

    auto provider = std::make_shared<MockProvider>();
    provider->on_complete = [](const GenerationRequest&) {
        return "I'm sorry, I can't find any information about that in the provided "
               "section of the user manual.";
    };

    auto gw1 = live_mock_gateway(provider);
    const auto run1 = augment_with_negatives(dataset, corpus, gw1, "m", 3, 42);
    auto gw2 = live_mock_gateway(provider);
    const auto run2 = augment_with_negatives(dataset, corpus, gw2, "m", 3, 42);

    REQUIRE(run1.size() == dataset.size() + 3);
    // Originals come first, untouched and in order.
    for (std::size_t i = 0; i < dataset.size(); ++i) CHECK(run1[i].id == dataset[i].id);
    for (std::size_t i = dataset.size(); i < run1.size(); ++i) {
        const auto& neg = run1[i];
        CHECK(neg.id.rfind("neg-", 0) == 0);
        CHECK(neg.is_negative);
        CHECK(neg.source == Source::negative);
        CHECK(is_refusal(*neg.answer, default_refusal_patterns()));
        // The swapped-in passage must be a real section, and a different one
        // than the question was written for.
        CHECK(corpus.contains(neg.passage_path));
        bool borrowed_question = false;
        for (const auto& src : dataset)
            if (src.question == neg.question) {
                borrowed_question = true;
                CHECK(join_path(src.passage_path) != join_path(neg.passage_path));
            }
        CHECK(borrowed_question);
    }

    // Same seed, same picks, same ids.
    REQUIRE(run2.size() == run1.size());
    for (std::size_t i = 0; i < run1.size(); ++i) {
        CHECK(run2[i].id == run1[i].id);
        CHECK(join_path(run2[i].passage_path) == join_path(run1[i].passage_path));
    }

    // A different seed picks a different set (ids differ somewhere).
    auto gw3 = live_mock_gateway(provider);
    const auto run3 = augment_with_negatives(dataset, corpus, gw3, "m", 3, 43);
    bool any_diff = false;
    for (std::size_t i = dataset.size(); i < run1.size(); ++i)
        if (run3[i].id != run1[i].id ||
            join_path(run3[i].passage_path) != join_path(run1[i].passage_path))
            any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("augment_with_negatives redraws on stray answers, then gives up") {
    const auto corpus = mini_corpus();
    const auto dataset = seed_dataset(corpus, 4);

    // First two attempts answer; the third refuses. Still succeeds.
    auto flaky = std::make_shared<MockProvider>();
    auto answered = std::make_shared<std::atomic<int>>(0);
    flaky->on_complete = [answered](const GenerationRequest&) -> std::string {
        if ((*answered)++ < 2) return "Here is a confident but ungrounded answer.";
        return "I'm sorry, I can't find any information about that.";
    };
    auto flaky_gw = live_mock_gateway(flaky);
    const auto out = augment_with_negatives(dataset, corpus, flaky_gw, "m", 1, 7);
    CHECK(out.size() == dataset.size() + 1);
    CHECK(is_refusal(*out.back().answer, default_refusal_patterns()));

    // A provider that always answers exhausts the redraw budget.
    auto stubborn = std::make_shared<MockProvider>();
    stubborn->on_complete = [](const GenerationRequest&) {
        return "Definitely the red button.";
    };
    auto stubborn_gw = live_mock_gateway(stubborn);
    CHECK_THROWS_AS(augment_with_negatives(dataset, corpus, stubborn_gw, "m", 1, 7),
                    QualityError);

    // Asking for more negatives than source questions is a usage error.
    auto gw = live_mock_gateway(std::make_shared<MockProvider>());
    CHECK_THROWS_AS(augment_with_negatives(dataset, corpus, gw, "m", 99, 7),
                    ValidationError);
}

TEST_CASE("resolve_assigned_path matches verbatim, loosely, then by distance") {
    const auto corpus = mini_corpus();

    const auto exact =
        resolve_assigned_path(corpus, "Connections > Connecting an Antenna");
    CHECK(join_path(exact.path) == "Connections > Connecting an Antenna");
    CHECK_FALSE(exact.fuzzy);

    // Tight '>' form is still an exact structural match.
    const auto tight = resolve_assigned_path(corpus, "Connections>Connecting an Antenna");
    CHECK(join_path(tight.path) == "Connections > Connecting an Antenna");
    CHECK_FALSE(tight.fuzzy);

    // Case and punctuation drift resolve loosely.
    const auto loose =
        resolve_assigned_path(corpus, "connections > connecting an antenna!");
    CHECK(join_path(loose.path) == "Connections > Connecting an Antenna");
    CHECK(loose.fuzzy);

    // A small typo lands on the nearest section.
    const auto typo =
        resolve_assigned_path(corpus, "Connections > Connecting an Antena");
    CHECK(join_path(typo.path) == "Connections > Connecting an Antenna");
    CHECK(typo.fuzzy);

    // Only the first non-empty line counts; trailing rationale is ignored.
    const auto chatty = resolve_assigned_path(
        corpus, "\n\nConnections > Connecting an Antenna\nbecause it mentions coaxial\n");
    CHECK(join_path(chatty.path) == "Connections > Connecting an Antenna");

    try {
        resolve_assigned_path(corpus, "Totally Unrelated > Nonsense Path Goes Here");
        FAIL("expected UnassignedError");
    } catch (const UnassignedError& e) {
        CHECK(e.model_answer == "Totally Unrelated > Nonsense Path Goes Here");
    }
    CHECK_THROWS_AS(resolve_assigned_path(corpus, "  \n \n"), UnassignedError);
}

TEST_CASE("assign_passage feeds the corpus to the judge and resolves its pick") {
    const auto corpus = mini_corpus();
    auto provider = std::make_shared<MockProvider>();
    provider->on_complete = [](const GenerationRequest& r) -> std::string {
        REQUIRE(r.prompt.front().content.find("Sound > Choosing Sound Output") !=
                std::string::npos);
        return "Sound > Choosing Sound Output";
    };
    auto gateway = live_mock_gateway(provider);
    const auto assigned =
        assign_passage(corpus, gateway, "judge", "Where does the audio come out?");
    CHECK(join_path(assigned.path) == "Sound > Choosing Sound Output");
    CHECK_FALSE(assigned.fuzzy);
}

TEST_CASE("default mock provider refuses on mismatched passages") {
    // The built-in heuristics (no hooks) must support negative mining:
    // a question about sleep timers gets a picture-quality passage and
    // the canned model declines.
    const auto corpus = mini_corpus();
    auto gateway = live_mock_gateway(std::make_shared<MockProvider>());
    const auto& timer = corpus.get({"System and Support", "Setting the Sleep Timer"});
    const auto& picture = corpus.get({"Picture", "Adjusting the Picture Quality"});

    const auto grounded =
        generate_answer(gateway, "mock-model", "How do I set the sleep timer to turn "
                        "off the TV automatically?", timer);
    CHECK_FALSE(is_refusal(grounded, default_refusal_patterns()));

    const auto negative = synthesize_negative(
        gateway, "mock-model",
        "How do I set the sleep timer to turn off the TV automatically?", picture);
    CHECK(is_refusal(negative, default_refusal_patterns()));
}
