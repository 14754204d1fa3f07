#pragma once

#include "clickcal/click_statistics.hpp"
#include "clickcal/config.hpp"
#include "clickcal/dataset.hpp"
#include "clickcal/fitting.hpp"
#include "clickcal/histogram.hpp"
#include "clickcal/homodyne.hpp"
#include "clickcal/model.hpp"
#include "clickcal/moments.hpp"
#include "clickcal/numeric.hpp"
#include "clickcal/pipeline.hpp"
#include "clickcal/povm.hpp"
#include "clickcal/regression.hpp"
#include "clickcal/report.hpp"
#include "clickcal/rng.hpp"
#include "clickcal/sampling.hpp"
#include "clickcal/sensing.hpp"
