#pragma once

#include "chicap/capacity.hpp"
#include "chicap/channel.hpp"
#include "chicap/core.hpp"
#include "chicap/counterexample.hpp"
#include "chicap/density.hpp"
#include "chicap/energy.hpp"
#include "chicap/ensemble.hpp"
#include "chicap/errors.hpp"
#include "chicap/identities.hpp"
#include "chicap/io.hpp"
#include "chicap/linalg.hpp"
#include "chicap/random.hpp"
