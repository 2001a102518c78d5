#pragma once

#include "qsst/error.hpp"
#include "qsst/fft.hpp"
#include "qsst/signal.hpp"
#include "qsst/window.hpp"
#include "qsst/tfmatrix.hpp"
#include "qsst/tiles.hpp"
#include "qsst/transform.hpp"
#include "qsst/reassign.hpp"
#include "qsst/adapt.hpp"
#include "qsst/ridge.hpp"
#include "qsst/bench.hpp"
#include "qsst/io.hpp"
