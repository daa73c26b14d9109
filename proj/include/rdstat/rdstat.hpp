#pragma once

// Convenience include for the whole library.

#include "rdstat/cache_model.hpp"
#include "rdstat/compare.hpp"
#include "rdstat/error.hpp"
#include "rdstat/histogram.hpp"
#include "rdstat/loopnest.hpp"
#include "rdstat/merge.hpp"
#include "rdstat/oracle.hpp"
#include "rdstat/pipeline.hpp"
#include "rdstat/predictor.hpp"
#include "rdstat/region.hpp"
#include "rdstat/trace.hpp"
