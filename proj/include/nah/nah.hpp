#pragma once

#include "nah/adam.hpp"
#include "nah/config.hpp"
#include "nah/cvnn.hpp"
#include "nah/esm.hpp"
#include "nah/experiment.hpp"
#include "nah/field_io.hpp"
#include "nah/field_synth.hpp"
#include "nah/geometry.hpp"
#include "nah/kh_propagator.hpp"
#include "nah/metrics.hpp"
#include "nah/physics.hpp"
#include "nah/pinn_sfd.hpp"
#include "nah/scene.hpp"
#include "nah/types.hpp"
