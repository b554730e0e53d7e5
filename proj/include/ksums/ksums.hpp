#pragma once

#include "ksums/cluster_state.hpp"
#include "ksums/common.hpp"
#include "ksums/dataset.hpp"
#include "ksums/experiment.hpp"
#include "ksums/io.hpp"
#include "ksums/kernels.hpp"
#include "ksums/metrics.hpp"
#include "ksums/optimizer.hpp"
#include "ksums/rng.hpp"
#include "ksums/variants.hpp"
