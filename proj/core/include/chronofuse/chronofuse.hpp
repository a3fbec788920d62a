#pragma once

// Umbrella header: the full public surface of the library.

#include "chronofuse/baselines.hpp"
#include "chronofuse/cohort.hpp"
#include "chronofuse/dataset_io.hpp"
#include "chronofuse/ecg_encoder.hpp"
#include "chronofuse/errors.hpp"
#include "chronofuse/fusion.hpp"
#include "chronofuse/gradcheck.hpp"
#include "chronofuse/harness.hpp"
#include "chronofuse/metrics.hpp"
#include "chronofuse/nn.hpp"
#include "chronofuse/optim.hpp"
#include "chronofuse/params.hpp"
#include "chronofuse/records.hpp"
#include "chronofuse/rng.hpp"
#include "chronofuse/sparse_encoder.hpp"
#include "chronofuse/splits.hpp"
#include "chronofuse/stats_tests.hpp"
#include "chronofuse/tape.hpp"
#include "chronofuse/tensor.hpp"
#include "chronofuse/tokenizer.hpp"
#include "chronofuse/trainer.hpp"
#include "chronofuse/vitals.hpp"
#include "chronofuse/windows.hpp"
