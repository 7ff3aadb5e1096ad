#pragma once

#include "beliefhr/dsp.hpp"
#include "beliefhr/emission.hpp"
#include "beliefhr/errors.hpp"
#include "beliefhr/evaluation.hpp"
#include "beliefhr/frontend.hpp"
#include "beliefhr/hr_grid.hpp"
#include "beliefhr/inference.hpp"
#include "beliefhr/pipeline.hpp"
#include "beliefhr/session_io.hpp"
#include "beliefhr/synthetic.hpp"
#include "beliefhr/transition.hpp"
