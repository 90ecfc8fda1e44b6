#pragma once

#include "honeytopo/params.hpp"
#include "honeytopo/random.hpp"
#include "honeytopo/csv.hpp"
#include "honeytopo/lattice.hpp"
#include "honeytopo/green.hpp"
#include "honeytopo/spectrum.hpp"
#include "honeytopo/bott.hpp"
#include "honeytopo/perturb.hpp"
#include "honeytopo/ensemble.hpp"
#include "honeytopo/config.hpp"
#include "honeytopo/version.hpp"
