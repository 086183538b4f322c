#pragma once

#include "adsh/bench.hpp"
#include "adsh/dataio.hpp"
#include "adsh/encoder.hpp"
#include "adsh/errors.hpp"
#include "adsh/eval.hpp"
#include "adsh/hashcore.hpp"
#include "adsh/linalg.hpp"
#include "adsh/run_config.hpp"
#include "adsh/simgraph.hpp"
#include "adsh/solver.hpp"
