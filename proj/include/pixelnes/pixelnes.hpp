#pragma once

#include "compressor.hpp"
#include "config.hpp"
#include "controller.hpp"
#include "environment.hpp"
#include "error.hpp"
#include "games.hpp"
#include "harness.hpp"
#include "image_io.hpp"
#include "stats.hpp"
#include "xnes.hpp"
