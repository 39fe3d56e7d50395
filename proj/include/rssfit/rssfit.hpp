// SPDX-License-Identifier: Apache-2.0
//
// rssfit: Rician signal-strength estimation from censored RSS measurements
// Copyright (C) 2026 rssfit contributors

#pragma once

#include "rssfit/bias.hpp"
#include "rssfit/censored.hpp"
#include "rssfit/config.hpp"
#include "rssfit/data.hpp"
#include "rssfit/lsq.hpp"
#include "rssfit/quadrature.hpp"
#include "rssfit/rician.hpp"
#include "rssfit/synth.hpp"
