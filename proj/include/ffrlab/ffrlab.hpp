#pragma once

#include "ffrlab/config.hpp"
#include "ffrlab/csv.hpp"
#include "ffrlab/deployment.hpp"
#include "ffrlab/experiment.hpp"
#include "ffrlab/kernels.hpp"
#include "ffrlab/quadrature.hpp"
#include "ffrlab/queue.hpp"
#include "ffrlab/rng.hpp"
#include "ffrlab/simulator.hpp"
#include "ffrlab/solver.hpp"
#include "ffrlab/throughput.hpp"
