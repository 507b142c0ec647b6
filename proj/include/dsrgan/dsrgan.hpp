#ifndef DSRGAN_DSRGAN_HPP_
#define DSRGAN_DSRGAN_HPP_

#include "dsrgan/adam.hpp"
#include "dsrgan/checkpoint.hpp"
#include "dsrgan/config.hpp"
#include "dsrgan/discriminator.hpp"
#include "dsrgan/error.hpp"
#include "dsrgan/evaluation.hpp"
#include "dsrgan/generator.hpp"
#include "dsrgan/grad_check.hpp"
#include "dsrgan/layers.hpp"
#include "dsrgan/losses.hpp"
#include "dsrgan/ops.hpp"
#include "dsrgan/raster.hpp"
#include "dsrgan/resample.hpp"
#include "dsrgan/schedule.hpp"
#include "dsrgan/slope.hpp"
#include "dsrgan/tensor.hpp"
#include "dsrgan/terrain.hpp"
#include "dsrgan/trainer.hpp"

#endif  // DSRGAN_DSRGAN_HPP_
