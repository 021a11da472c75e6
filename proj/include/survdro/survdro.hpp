#pragma once

#include "survdro/adam.hpp"
#include "survdro/checkpoint.hpp"
#include "survdro/cox_loss.hpp"
#include "survdro/csv.hpp"
#include "survdro/dataset.hpp"
#include "survdro/dro.hpp"
#include "survdro/errors.hpp"
#include "survdro/harness.hpp"
#include "survdro/metrics.hpp"
#include "survdro/model.hpp"
#include "survdro/report.hpp"
#include "survdro/rng.hpp"
#include "survdro/synthetic.hpp"
#include "survdro/train.hpp"
