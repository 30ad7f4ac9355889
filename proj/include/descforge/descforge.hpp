#pragma once

#include "descforge/camera.hpp"
#include "descforge/correspondence.hpp"
#include "descforge/embedding.hpp"
#include "descforge/error.hpp"
#include "descforge/formats.hpp"
#include "descforge/generators.hpp"
#include "descforge/grasp.hpp"
#include "descforge/laplacian.hpp"
#include "descforge/loss.hpp"
#include "descforge/mesh.hpp"
#include "descforge/parallel.hpp"
#include "descforge/raster.hpp"
#include "descforge/scene.hpp"
#include "descforge/spectrum.hpp"
#include "descforge/tracking.hpp"
#include "descforge/view_dependent.hpp"
