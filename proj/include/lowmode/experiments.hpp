#pragma once

#include "lowmode/experiments/config.hpp"
#include "lowmode/experiments/plot.hpp"
#include "lowmode/experiments/runners.hpp"
#include "lowmode/experiments/table.hpp"
#include "lowmode/version.hpp"
