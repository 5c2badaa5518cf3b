#pragma once

// Umbrella header for the whole pipeline.

#include "idseg/config.hpp"
#include "idseg/dataset.hpp"
#include "idseg/eval.hpp"
#include "idseg/geometry.hpp"
#include "idseg/image.hpp"
#include "idseg/kernels.hpp"
#include "idseg/loss.hpp"
#include "idseg/model.hpp"
#include "idseg/model_io.hpp"
#include "idseg/optimizer.hpp"
#include "idseg/rng.hpp"
#include "idseg/synth.hpp"
#include "idseg/tensor.hpp"
#include "idseg/train.hpp"
