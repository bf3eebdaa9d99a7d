#pragma once

#include "polystab/error.hpp"
#include "polystab/model.hpp"
#include "polystab/state.hpp"
#include "polystab/charfn.hpp"
#include "polystab/spectrum.hpp"
#include "polystab/resolvent.hpp"
#include "polystab/modal.hpp"
#include "polystab/integrator.hpp"
#include "polystab/dynamics.hpp"
#include "polystab/fit.hpp"
#include "polystab/io.hpp"
#include "polystab/pipeline.hpp"
