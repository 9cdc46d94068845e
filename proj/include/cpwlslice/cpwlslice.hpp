#pragma once

#include "cpwlslice/activation.hpp"
#include "cpwlslice/arrangement.hpp"
#include "cpwlslice/error.hpp"
#include "cpwlslice/geometry.hpp"
#include "cpwlslice/model_io.hpp"
#include "cpwlslice/network.hpp"
#include "cpwlslice/partition.hpp"
#include "cpwlslice/regions_io.hpp"
#include "cpwlslice/stats.hpp"
