#pragma once

// Umbrella header for the whole library.

#include "wclre/adam.hpp"
#include "wclre/bench.hpp"
#include "wclre/checkpoint.hpp"
#include "wclre/cli.hpp"
#include "wclre/common.hpp"
#include "wclre/config.hpp"
#include "wclre/ds_builder.hpp"
#include "wclre/encoder.hpp"
#include "wclre/finetune_eval.hpp"
#include "wclre/gradcheck.hpp"
#include "wclre/masking.hpp"
#include "wclre/mat.hpp"
#include "wclre/pretrain.hpp"
#include "wclre/records.hpp"
#include "wclre/reliability.hpp"
#include "wclre/rng.hpp"
#include "wclre/training.hpp"
#include "wclre/types.hpp"
#include "wclre/vocab.hpp"
#include "wclre/wcl.hpp"
