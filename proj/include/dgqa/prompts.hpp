#pragma once

// Prompt templates used across generation, cleaning, and evaluation.
// These strings are load-bearing: cached request keys, golden tests,
// and exported training rows all depend on their exact bytes, so edits
// here must bump kPromptVersion.

#include <string>

#include "dgqa/corpus.hpp"
#include "dgqa/io.hpp"
#include "dgqa/llm_gateway.hpp"

namespace dgqa::prompts {

inline constexpr const char* kPromptVersion = "v1";

/// System-style instruction for document-grounded answering. Also used
/// verbatim as the system turn of exported training rows.
inline constexpr const char* kAnswerInstruction =
    "Please answer the following question using the information within the section "
    "of the user manual provided. Keep the answers short and conversational.";

namespace detail {

inline constexpr const char* kAnswerExemplar =
    R"(1

***QUESTION:

Where do I find Bixby guide?

***DOCUMENT:

Press and hold the [MIC] button on your Samsung Smart Remote, say a command, and then release the [MIC] button. The TV recognizes the voice command.

To view the Bixby guide, press the [MIC] button once:

When you press the [MIC] button for the first time, the [Using Bixby] button appears at the bottom of the screen. Press the [Select] button. The [Using Bixby] popup window appears, and a tutorial on using Bixby is shown.
When you press the [MIC] button after the first time, the [Enter My Bixby] button appears at the bottom of the screen. Press the [Select] button to go to the My Bixby screen.

[image_4.png]

***ANSWER:

The Bixby guide can be found by pressing the mic button once. The first time, a 'using Bixby' button will appear. Click that for setup.)";

inline constexpr const char* kEvaluationHeader =
    R"(Your job is to evaluate the answers in the following scenarios. Given the sections of the user manual and the questions, please assess the answers and label them with one of the following categories:

1. Good. There are no errors.

2. Partial answer. The answer does not fully respond to the question, or omits important information from the manual.

3. Answer not available. The manual does not contain the information required to answer the question.

4. Disfluent. The answer contains grammatical mistakes or fluency problems.

5. Hallucination. The answer contains information that did not come from the manual.

6. Other. The answer contains some other type of error.

If the label is not "good", please provide a short explanation.)";

inline constexpr const char* kEvaluationExemplars =
    R"(1

QUESTION:

Can I select Motion Lighting ?

USER MANUAL SECTION:

Reducing the energy consumption of the TV

[HOME] > Settings > General > Eco Solution

You can adjust the brightness level of the TV, reduce overall power consumption, and prevent overheating.

Motion Lighting: Adjusts the brightness in response to on-screen movements to reduce power consumption.

Auto Power Off: Automatically turns off the TV to reduce unnecessary power consumption if there is no operation for 4 hours.

ANSWER:

Yes, you can adjust the Motion Lighting to reduce the TV's power consumption.

EVALUATION:

Partial answer. The answer does not explain how to select motion lighting. It should have said that you can do so by going to [HOME]>Settings>General>Eco Solution.

2

QUESTION:

What is the use of universal guide?

USER MANUAL SECTION:

Using the Universal Guide App

Search for and enjoy content such as TV shows, dramas, movies, sports broadcasts, and music.

[HOME] > [UNIVERSAL GUIDE] Universal Guide

[image_27.png]

[NOTE] The image on your TV may differ from the image above depending on the model and geographical area.

Universal Guide is an app that allows you to search for and enjoy various content such as TV shows, dramas, movies, and music in one place. Universal Guide can recommend content tailored to your preferences and notify you of new drama series.

You can use this feature on your mobile with Samsung SmartThings app.

[NOTE] To enjoy the content from these apps on your TV, they must be installed on the TV.

[NOTE] When you watch some paid content, you may need to make a payment using their associated app.

[NOTE] Images may look blurry depending on the service provider's circumstances.

[NOTE] This function may not be supported depending on the model or geographical area.

ANSWER:

The universal guide allows you to search for content, like TV shows, movies, and music.

EVALUATION:

Good. There are no errors.)";

inline constexpr const char* kRewriteHeader =
    R"(Below are question and answer pairs, each using a provided document. They may have errors, and I have provided feedback about what that error might be. Your job is to use that feedback to rewrite the answer to better answer the question and utilize the provided section of a user manual for a Samsung Smart TV. Try to make the rewrites as minimal as possible, but make whatever changes are necessary to fix the problem according to the evaluation.)";

inline constexpr const char* kRewriteExemplar =
    R"(1

QUESTION:

Can I select Motion Lighting?

USER MANUAL SECTION:

Section: System and Support>Using the Screen Burn Protection and Energy Saving Functions>Reducing the energy consumption of the TV

[HOME] > Settings > General > Eco Solution
You can adjust the brightness level of the TV, reduce overall power consumption, and prevent overheating.
Motion Lighting: Adjusts the brightness in response to on-screen movements to reduce power consumption.
Auto Power Off: Automatically turns off the TV to reduce unnecessary power consumption if there is no operation for 4 hours.

ANSWER:

Yes, you can adjust the Motion Lighting to reduce the TV's power consumption.

EVALUATION:

Partial answer. The answer does not explain how to select motion lighting. It should have said that you can do so by going to [HOME]>Settings>General>Eco Solution.

REWRITE:

Yes, you can adjust the Motion Lighting to reduce the TV's power consumption by going to [HOME]>Settings>General>Eco Solution.)";

inline GenerationRequest as_request(std::string model_id, std::string body,
                                    Decoding decoding) {
    return {std::move(model_id), {{"user", std::move(body)}}, decoding};
}

}  // namespace detail

/// One-shot answer prompt: question + passage body, ending at the open
/// answer slot.
inline GenerationRequest answer(const std::string& model_id, const std::string& question,
                                const std::string& passage_body,
                                Decoding decoding = {}) {
    std::string body = std::string(kAnswerInstruction) + "\n\n" +
                       detail::kAnswerExemplar + "\n\n2\n\n***QUESTION:\n\n" + question +
                       "\n\n***DOCUMENT:\n\n" + passage_body + "\n\n***ANSWER:\n\n";
    return detail::as_request(model_id, std::move(body), decoding);
}

/// Two-shot answer-quality evaluation; the reply should start with one
/// of the six category labels.
inline GenerationRequest evaluation(const std::string& model_id, const std::string& question,
                                    const std::string& passage_body, const std::string& answer,
                                    Decoding decoding = {}) {
    std::string body = std::string(detail::kEvaluationHeader) + "\n\n" +
                       detail::kEvaluationExemplars + "\n\n3\n\nQUESTION:\n\n" + question +
                       "\n\nUSER MANUAL SECTION:\n\n" + passage_body +
                       "\n\nANSWER:\n\n" + answer + "\n\nEVALUATION:\n";
    return detail::as_request(model_id, std::move(body), decoding);
}

/// One-shot minimal rewrite using the evaluation feedback. Unlike the
/// other prompts, the manual slot carries a "Section:" breadcrumb line
/// so path fixes can be written into answers.
inline GenerationRequest rewrite(const std::string& model_id, const std::string& question,
                                 const SectionPath& passage_path,
                                 const std::string& passage_body, const std::string& answer,
                                 const std::string& evaluation, Decoding decoding = {}) {
    std::string section;
    for (std::size_t i = 0; i < passage_path.size(); ++i)
        section += (i ? ">" : "") + passage_path[i];
    std::string body = std::string(detail::kRewriteHeader) + "\n\n" +
                       detail::kRewriteExemplar + "\n\n2\n\nQUESTION:\n\n" + question +
                       "\n\nUSER MANUAL SECTION:\n\nSection: " + section + "\n\n" +
                       passage_body + "\n\nANSWER:\n\n" + answer + "\n\nEVALUATION:\n\n" +
                       evaluation + "\n\nREWRITE:\n";
    return detail::as_request(model_id, std::move(body), decoding);
}

/// Ask for `count` new QA pairs grounded in one passage, in the same
/// block format the answer prompt uses.
inline GenerationRequest pair_generation(const std::string& model_id, int count,
                                         const std::string& passage_body,
                                         Decoding decoding = {}) {
    std::string body =
        "Generate " + std::to_string(count) +
        " question and answer pairs using the information within the section of the "
        "user manual provided. Ask questions a TV owner would ask, and keep the "
        "answers short and conversational. Format each pair as:\n\n"
        "1. ***QUESTION:\n\n[QUESTION]\n\n***ANSWER:\n\n[ANSWER]\n\n"
        "***DOCUMENT:\n\n" +
        passage_body + "\n\n***PAIRS:\n";
    return detail::as_request(model_id, std::move(body), decoding);
}

/// Match a free-floating question to the manual section it asks about.
/// `manual_entries` is a JSON array of {"path": ..., "text": ...}.
inline GenerationRequest passage_assignment(const std::string& model_id,
                                            const std::string& question,
                                            const Json& manual_entries,
                                            Decoding decoding = {}) {
    std::string body =
        "Find the section of the user manual that the following question is asking "
        "about. The manual's sections are provided as a JSON list, each entry with a "
        "\"path\" and the section \"text\". Reply with the single best matching path, "
        "copied exactly.\n\n***QUESTION:\n\n" +
        question + "\n\n***MANUAL:\n\n" + manual_entries.dump(2) + "\n\n***PATH:\n";
    return detail::as_request(model_id, std::move(body), decoding);
}

/// Decompose a full response (lists, headers and all) into numbered
/// atomic facts.
inline GenerationRequest fact_extraction(const std::string& model_id,
                                         const std::string& response,
                                         Decoding decoding = {}) {
    std::string body =
        "Break the following response into a numbered list of independent atomic "
        "facts. Each fact must be a single short statement that can be checked on its "
        "own. Use every part of the response, including any list items or headers.\n\n"
        "***RESPONSE:\n\n" +
        response + "\n\n***FACTS:\n";
    return detail::as_request(model_id, std::move(body), decoding);
}

/// Verify one atomic fact against one passage; the reply must be the
/// single word True or False.
inline GenerationRequest fact_judgment(const std::string& model_id, const std::string& fact,
                                       const std::string& passage_body,
                                       Decoding decoding = {}) {
    std::string body =
        "Judge whether the following fact is supported by the section of the user "
        "manual provided. Reply with exactly one word: True or False.\n\n***FACT:\n\n" +
        fact + "\n\n***DOCUMENT:\n\n" + passage_body + "\n\n***JUDGMENT:\n";
    return detail::as_request(model_id, std::move(body), decoding);
}

}  // namespace dgqa::prompts
