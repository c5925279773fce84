#pragma once

// Umbrella header: the whole toolkit in one include.

#include "dgqa/cleaning.hpp"
#include "dgqa/concurrency.hpp"
#include "dgqa/corpus.hpp"
#include "dgqa/datasets.hpp"
#include "dgqa/errors.hpp"
#include "dgqa/evaluation.hpp"
#include "dgqa/generation.hpp"
#include "dgqa/hash.hpp"
#include "dgqa/http_provider.hpp"
#include "dgqa/io.hpp"
#include "dgqa/llm_gateway.hpp"
#include "dgqa/pipeline.hpp"
#include "dgqa/prompts.hpp"
#include "dgqa/qa.hpp"
#include "dgqa/random.hpp"
#include "dgqa/selection.hpp"
#include "dgqa/stats.hpp"
#include "dgqa/text.hpp"
