#pragma once

#define NCAE_VERSION "0.1.0"

#include "ncae/adam.hpp"
#include "ncae/audio_io.hpp"
#include "ncae/checkpoint.hpp"
#include "ncae/error.hpp"
#include "ncae/evaluation.hpp"
#include "ncae/grad_check.hpp"
#include "ncae/layers.hpp"
#include "ncae/mfcc.hpp"
#include "ncae/model_grad_check.hpp"
#include "ncae/models.hpp"
#include "ncae/pipeline.hpp"
#include "ncae/rng.hpp"
#include "ncae/synthgen.hpp"
#include "ncae/tensor.hpp"
