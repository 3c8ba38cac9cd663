#pragma once

#include "mimo_crlb/design.hpp"
#include "mimo_crlb/errors.hpp"
#include "mimo_crlb/fisher.hpp"
#include "mimo_crlb/geometry.hpp"
#include "mimo_crlb/montecarlo.hpp"
#include "mimo_crlb/optimizer.hpp"
