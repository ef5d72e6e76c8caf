#ifndef NANOSEG_NANOSEG_HPP
#define NANOSEG_NANOSEG_HPP

#include "denoise.hpp"
#include "evaluate.hpp"
#include "image_io.hpp"
#include "imagecore.hpp"
#include "pipeline.hpp"
#include "plot.hpp"
#include "scenesim.hpp"
#include "segment.hpp"
#include "serialize.hpp"

#endif  // NANOSEG_NANOSEG_HPP
