#pragma once

#include "anasamp/errors.hpp"
#include "anasamp/experiment.hpp"
#include "anasamp/oracle.hpp"
#include "anasamp/otter.hpp"
#include "anasamp/random.hpp"
#include "anasamp/sampler.hpp"
#include "anasamp/series.hpp"
#include "anasamp/spec.hpp"
#include "anasamp/stats.hpp"
#include "anasamp/term_tree.hpp"
#include "anasamp/tuning.hpp"
