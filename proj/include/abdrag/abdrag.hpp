#pragma once

// Umbrella header: the whole library in one include.

#include "abdrag/abduction.hpp"
#include "abdrag/config.hpp"
#include "abdrag/errors.hpp"
#include "abdrag/eval.hpp"
#include "abdrag/pipeline.hpp"
#include "abdrag/providers.hpp"
#include "abdrag/providers_http.hpp"
#include "abdrag/retriever.hpp"
#include "abdrag/sufficiency.hpp"
#include "abdrag/text.hpp"
#include "abdrag/types.hpp"
#include "abdrag/validation.hpp"
