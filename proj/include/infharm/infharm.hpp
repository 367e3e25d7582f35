#pragma once

#include "infharm/error.hpp"
#include "infharm/flow.hpp"
#include "infharm/grid.hpp"
#include "infharm/io.hpp"
#include "infharm/jets.hpp"
#include "infharm/kprofile.hpp"
#include "infharm/map_spec.hpp"
#include "infharm/phase.hpp"
#include "infharm/residuals.hpp"
#include "infharm/run.hpp"
#include "infharm/tensor.hpp"
#include "infharm/verify.hpp"
