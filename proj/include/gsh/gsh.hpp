#pragma once

#include "gsh/bounds.hpp"
#include "gsh/dataio.hpp"
#include "gsh/entmax.hpp"
#include "gsh/error.hpp"
#include "gsh/experiments.hpp"
#include "gsh/hopfield.hpp"
#include "gsh/numkit.hpp"
