#pragma once

// Umbrella header for the dataset-bias-analysis toolkit.

#include "dba/core.hpp"
#include "dba/error.hpp"
#include "dba/estimators.hpp"
#include "dba/eval.hpp"
#include "dba/io.hpp"
#include "dba/model.hpp"
#include "dba/oracle.hpp"
#include "dba/rng.hpp"
#include "dba/synthgen.hpp"
#include "dba/tables.hpp"
#include "dba/trainer.hpp"
#include "dba/weights.hpp"
