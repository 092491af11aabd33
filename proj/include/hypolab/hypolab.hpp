#ifndef HYPOLAB_HYPOLAB_HPP
#define HYPOLAB_HYPOLAB_HPP

// Umbrella header: the whole laboratory in dependency order.

#include "hypolab/rational.hpp"
#include "hypolab/algebra.hpp"
#include "hypolab/multiindex.hpp"
#include "hypolab/hall.hpp"
#include "hypolab/bch.hpp"
#include "hypolab/frame.hpp"
#include "hypolab/ricci.hpp"
#include "hypolab/testfunction.hpp"
#include "hypolab/group.hpp"
#include "hypolab/rng.hpp"
#include "hypolab/path.hpp"
#include "hypolab/malliavin.hpp"
#include "hypolab/mc.hpp"
#include "hypolab/registry.hpp"
#include "hypolab/estimators.hpp"
#include "hypolab/report.hpp"

#endif  // HYPOLAB_HYPOLAB_HPP
