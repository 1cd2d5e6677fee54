#pragma once

#include "leakdrift/core.hpp"
#include "leakdrift/distdetect.hpp"
#include "leakdrift/harness.hpp"
#include "leakdrift/localize.hpp"
#include "leakdrift/modelloss.hpp"
#include "leakdrift/paths.hpp"
#include "leakdrift/preprocess.hpp"
#include "leakdrift/scenario.hpp"
