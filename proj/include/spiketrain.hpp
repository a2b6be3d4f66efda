#ifndef SPIKETRAIN_HPP
#define SPIKETRAIN_HPP

#include "spiketrain/adversary.hpp"
#include "spiketrain/cluster.hpp"
#include "spiketrain/decimation.hpp"
#include "spiketrain/errors.hpp"
#include "spiketrain/fourier.hpp"
#include "spiketrain/io.hpp"
#include "spiketrain/moments.hpp"
#include "spiketrain/prony.hpp"
#include "spiketrain/signal.hpp"
#include "spiketrain/stats.hpp"
#include "spiketrain/sweep.hpp"
#include "spiketrain/xlab.hpp"

#endif  // SPIKETRAIN_HPP
