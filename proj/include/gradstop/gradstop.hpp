#pragma once

#include "gradstop/error.hpp"
#include "gradstop/core.hpp"
#include "gradstop/data.hpp"
#include "gradstop/model.hpp"
#include "gradstop/hyperparameters.hpp"
#include "gradstop/dynamics.hpp"
#include "gradstop/stopper.hpp"
#include "gradstop/theory.hpp"
#include "gradstop/config.hpp"
#include "gradstop/experiment.hpp"
