#pragma once

// Numerical core in one include. The configuration and reporting layer
// (config.hpp, report.hpp, campaign.hpp) is separate because it needs
// yaml-cpp, nlohmann_json and OpenSSL.

#include "homoglab/error.hpp"
#include "homoglab/lattice.hpp"
#include "homoglab/fft.hpp"
#include "homoglab/rng.hpp"
#include "homoglab/fields.hpp"
#include "homoglab/serialize.hpp"
#include "homoglab/solver.hpp"
#include "homoglab/geometry.hpp"
#include "homoglab/corrector.hpp"
#include "homoglab/oracle.hpp"
#include "homoglab/parallel.hpp"
#include "homoglab/scaling.hpp"
#include "homoglab/twoscale.hpp"
