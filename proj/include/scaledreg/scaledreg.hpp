#pragma once
#include <scaledreg/core.hpp>
#include <scaledreg/errors.hpp>
#include <scaledreg/io.hpp>
#include <scaledreg/parallel.hpp>
#include <scaledreg/path.hpp>
#include <scaledreg/penalty.hpp>
#include <scaledreg/postsel.hpp>
#include <scaledreg/rng.hpp>
#include <scaledreg/scaled.hpp>
#include <scaledreg/sim.hpp>
#include <scaledreg/theory/checks.hpp>
#include <scaledreg/theory/factors.hpp>
#include <scaledreg/theory/oracle.hpp>
#include <scaledreg/theory/suite.hpp>
