#pragma once

// Umbrella header for the offline parts of the library (no network code).

#include "gistgraph/config.hpp"
#include "gistgraph/corpus.hpp"
#include "gistgraph/diffusion.hpp"
#include "gistgraph/embedding.hpp"
#include "gistgraph/error.hpp"
#include "gistgraph/eval.hpp"
#include "gistgraph/extraction.hpp"
#include "gistgraph/graph.hpp"
#include "gistgraph/mock_provider.hpp"
#include "gistgraph/pipeline.hpp"
#include "gistgraph/provider.hpp"
#include "gistgraph/rerank.hpp"
