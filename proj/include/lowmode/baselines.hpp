#pragma once

#include "lowmode/baselines/cg.hpp"
#include "lowmode/baselines/deflation.hpp"
#include "lowmode/baselines/direct.hpp"
#include "lowmode/baselines/multigrid.hpp"
#include "lowmode/baselines/report.hpp"
