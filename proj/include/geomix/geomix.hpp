#pragma once

// Umbrella header.

#include "geomix/clustering.hpp"
#include "geomix/eigensolver.hpp"
#include "geomix/error.hpp"
#include "geomix/fem_operator.hpp"
#include "geomix/flow_map.hpp"
#include "geomix/flow_models.hpp"
#include "geomix/heat_flow.hpp"
#include "geomix/io.hpp"
#include "geomix/linalg.hpp"
#include "geomix/mesh.hpp"
#include "geomix/mixing_geometry.hpp"
#include "geomix/oracles.hpp"
#include "geomix/pipeline.hpp"
#include "geomix/spectral.hpp"
