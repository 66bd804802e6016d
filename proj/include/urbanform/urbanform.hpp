#ifndef URBANFORM_URBANFORM_HPP
#define URBANFORM_URBANFORM_HPP

#include "urbanform/config.hpp"
#include "urbanform/csv.hpp"
#include "urbanform/errors.hpp"
#include "urbanform/forest.hpp"
#include "urbanform/geodata.hpp"
#include "urbanform/geometry.hpp"
#include "urbanform/image_io.hpp"
#include "urbanform/morpho.hpp"
#include "urbanform/parallel.hpp"
#include "urbanform/pipeline.hpp"
#include "urbanform/projection.hpp"
#include "urbanform/random.hpp"
#include "urbanform/raster.hpp"
#include "urbanform/sampler.hpp"
#include "urbanform/spatial_index.hpp"
#include "urbanform/synthetic.hpp"

#endif  // URBANFORM_URBANFORM_HPP
